#include "hwdock/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <sys/utsname.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "hwdock/acquisition.hpp"
#include "hwdock/collector.hpp"
#include "hwdock/error.hpp"
#include "hwdock/feature_names.hpp"
#include "hwdock/gzip.hpp"
#include "hwdock/host_probe.hpp"
#include "hwdock/hwmeta.hpp"
#include "hwdock/knowledge_base.hpp"
#include "hwdock/registry.hpp"
#include "hwdock/scanner.hpp"
#include "hwdock/stats.hpp"

namespace hwdock {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_child(const std::vector<std::string>& argv)
{
    std::vector<char*> cargs;
    for (const auto& a : argv)
        cargs.push_back(const_cast<char*>(a.c_str()));
    cargs.push_back(nullptr);
    pid_t pid = ::fork();
    if (pid < 0)
        throw Error(ErrorKind::Io, "fork failed");
    if (pid == 0) {
        ::execvp(cargs[0], cargs.data());
        std::perror(cargs[0]);
        ::_exit(127);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

std::string host_architecture()
{
    struct utsname uts {};
    ::uname(&uts);
    return normalize_architecture(uts.machine);
}

std::string shell_quote(const std::string& s)
{
    if (!s.empty() && s.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_=/.:,@+") ==
                          std::string::npos)
        return s;
    std::string out = "'";
    for (char c : s)
        out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

std::string join_command(const std::vector<std::string>& args)
{
    std::string out;
    for (const auto& a : args)
        out += (out.empty() ? "" : " ") + shell_quote(a);
    return out;
}

struct Globals {
    std::string kb;
    std::string output;
    std::string cache;
    std::string registry;
    std::string hub = "https://hub.docker.com";
    std::size_t budget       = 100;
    long        budgetWindow = 6 * 3600;
    std::string color        = "auto";
};

class Runner {
public:
    Runner(CliContext& ctx, Globals& g)
        : mCtx(ctx)
        , mG(g)
    {
    }

    std::ostream& out() { return *mCtx.out; }
    std::ostream& err() { return *mCtx.err; }

    bool json_mode()
    {
        if (!mG.output.empty())
            return mG.output == "json";
        return !mCtx.stdoutIsTty;
    }

    bool color()
    {
        return mG.color == "always" || (mG.color == "auto" && mCtx.stdoutIsTty && !json_mode());
    }

    std::optional<std::string> env(const char* name)
    {
        auto v = mCtx.getenv ? mCtx.getenv(name) : std::nullopt;
        if (v && v->empty())
            return std::nullopt;
        return v;
    }

    const KnowledgeBase& kb()
    {
        if (!mKb) {
            std::string path = mG.kb;
            if (path.empty())
                path = env("HWDOCK_KB").value_or("default");
            mKb = load_kb(path);
        }
        return *mKb;
    }

    std::string cache_dir()
    {
        if (!mG.cache.empty())
            return mG.cache;
        if (auto c = env("HWDOCK_CACHE"))
            return *c;
        if (auto x = env("XDG_CACHE_HOME"))
            return *x + "/hwdock";
        if (auto h = env("HOME"))
            return *h + "/.cache/hwdock";
        return ".hwdock-cache";
    }

    RateBudget budget() { return {mG.budget, std::chrono::seconds(mG.budgetWindow)}; }

    std::shared_ptr<RateLimiter> limiter()
    {
        if (!mLimiter)
            mLimiter = std::make_shared<RateLimiter>(budget(), mCtx.clock);
        return mLimiter;
    }

    RegistryClient& registry()
    {
        if (!mRegistry) {
            RegistryConfig cfg;
            cfg.baseUrl   = mG.registry;
            cfg.authToken = env("HWDOCK_TOKEN");
            cfg.budget    = budget();
            mRegistry     = std::make_unique<RegistryClient>(cfg, mCtx.transport, mCtx.clock, limiter());
        }
        return *mRegistry;
    }

    static PlatformQuery parse_platform(const std::string& text)
    {
        // os/arch[/variant], as the engine spells it
        auto slash = text.find('/');
        if (slash == std::string::npos)
            throw Error(ErrorKind::Usage, "platform must be <os>/<arch>: " + text);
        auto arch = text.substr(slash + 1);
        return {normalize_architecture(arch.substr(0, arch.find('/'))), text.substr(0, slash)};
    }

    PlatformQuery platform(const std::string& opt)
    {
        return opt.empty() ? PlatformQuery{host_architecture(), "linux"} : parse_platform(opt);
    }

    /// A local file (saved archive or a single layer tar) or a registry ref.
    AcquiredImage acquire(const std::string& target, const std::string& platformOpt)
    {
        std::error_code ec;
        if (fs::is_regular_file(target, ec)) {
            auto data = read_file(target);
            try {
                auto archive = parse_saved_archive(maybe_saved(data), target);
                std::optional<PlatformQuery> q;
                if (!platformOpt.empty())
                    q = parse_platform(platformOpt);
                else if (archive.images.size() > 1)
                    q = platform("");
                return acquire_from_archive(archive, q);
            } catch (const Error& e) {
                if (std::string(e.what()) != "no manifest found")
                    throw;
            }
            AcquiredImage img;
            img.name = target;
            img.layers.push_back(read_layer(data));
            img.manifestDigest = img.layers.front().digest;
            return img;
        }
        if (target.find('/') != std::string::npos && (target.ends_with(".tar") || target.ends_with(".tar.gz")))
            throw Error(ErrorKind::Io, "no such file: " + target);
        auto      ref = resolve_ref(target);
        auto      dir = cache_dir();
        BlobCache cache(dir);
        return pull_image(registry(), ref, platform(platformOpt), &cache);
    }

    static Bytes maybe_saved(const Bytes& data)
    {
        return maybe_gunzip(data);
    }

    ScanReport scan(const AcquiredImage& img)
    {
        auto start  = std::chrono::steady_clock::now();
        auto tree   = apply_layers(img.layers);
        auto report = scan_image(tree, kb());
        report.imageRef       = img.name;
        report.manifestDigest = img.manifestDigest;
        report.scanDurationSeconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return report;
    }

    void print_json(const std::string& doc) { out() << doc << "\n"; }

    CliContext& mCtx;
    Globals&    mG;

private:
    std::optional<KnowledgeBase>     mKb;
    std::shared_ptr<RateLimiter>     mLimiter;
    std::unique_ptr<RegistryClient> mRegistry;
};

// ---- subcommands -----------------------------------------------------------

struct ScanArgs {
    std::vector<std::string> targets;
    std::string              platform;
};

int cmd_scan(Runner& r, const ScanArgs& a)
{
    std::vector<ScanReport> reports;
    for (const auto& t : a.targets) {
        try {
            reports.push_back(r.scan(r.acquire(t, a.platform)));
        } catch (const Error& e) {
            if (a.targets.size() == 1)
                throw;
            r.err() << "hwdock: " << t << ": " << e.what() << "\n";
        }
    }
    for (const auto& rep : reports)
        for (const auto& w : rep.warnings)
            r.err() << "warning: " << rep.imageRef << ": " << w << "\n";

    if (a.targets.size() == 1) {
        if (r.json_mode())
            r.print_json(scan_report_to_json(reports.front()));
        else
            r.out() << render_scan_text(reports.front());
        return 0;
    }
    auto stats = aggregate_reports(reports, a.targets.size());
    if (r.json_mode()) {
        json arr = json::array();
        for (const auto& rep : reports)
            arr.push_back(json::parse(scan_report_to_json(rep)));
        r.print_json(json{{"reports", arr}, {"stats", json::parse(corpus_stats_to_json(stats))}}.dump(2));
    } else {
        for (const auto& rep : reports)
            r.out() << render_scan_text(rep) << "\n";
        r.out() << render_corpus_text(stats);
    }
    return reports.size() == a.targets.size() ? 0 : 1;
}

struct ProbeArgs {
    std::string fixture;
};

HostCapabilities probe(const std::string& fixture)
{
    return fixture.empty() ? probe_live() : probe_fixture(fixture);
}

int cmd_probe(Runner& r, const ProbeArgs& a)
{
    auto caps = probe(a.fixture);
    if (r.json_mode())
        r.print_json(capabilities_to_json(caps));
    else
        r.out() << render_capabilities_text(caps);
    return 0;
}

struct EmitArgs {
    std::string              image;
    std::string              scanFile;
    std::string              metadataFile;
    std::string              baseFile;
    std::string              arch;
    std::string              os = "linux";
    std::vector<std::string> features;
    std::string              platform;
    bool                     legacy = false;
};

int cmd_emit_meta(Runner& r, const EmitArgs& a)
{
    AugmentedMetadata m;
    if (!a.metadataFile.empty()) {
        m = parse_augmented(as_string(read_file(a.metadataFile)));
    } else {
        if (a.image.empty() == a.scanFile.empty())
            throw Error(ErrorKind::Usage, "emit-meta needs exactly one of <image>, --scan <file> or --metadata <file>");
        ScanReport                 scan;
        std::optional<std::string> imageArch, imageOs;
        if (!a.scanFile.empty()) {
            scan = scan_report_from_json(as_string(read_file(a.scanFile)));
        } else {
            auto img = r.acquire(a.image, a.platform);
            scan     = r.scan(img);
            if (!img.architecture.empty())
                imageArch = img.architecture;
            if (!img.os.empty())
                imageOs = img.os;
        }
        LegacyPlatform base;
        if (!a.baseFile.empty()) {
            base = parse_legacy(as_string(read_file(a.baseFile)));
        } else if (!a.arch.empty() || imageArch) {
            base.architecture = a.arch.empty() ? *imageArch : normalize_architecture(a.arch);
            base.os           = a.arch.empty() && imageOs ? *imageOs : a.os;
            base.features     = a.features;
        } else {
            throw Error(ErrorKind::Usage, "emit-meta --scan needs the base platform: --base <file> or --arch <arch>");
        }
        m = emit_augmented(scan, base);
    }

    if (a.legacy) {
        auto d = downgrade(m);
        for (const auto& f : d.loss.droppedFeatures)
            r.err() << "dropped (no legacy slot): feature " << f << "\n";
        for (const auto& h : d.loss.droppedHardware)
            r.err() << "dropped (no legacy slot): hardware " << h << "\n";
        for (const auto& p : d.loss.droppedPassthru)
            r.err() << "dropped (no legacy slot): passthru " << p << "\n";
        for (const auto& v : d.loss.droppedVolumes)
            r.err() << "dropped (no legacy slot): volume " << v << "\n";
        r.print_json(serialize_legacy(d.platform));
    } else {
        r.print_json(serialize_augmented(m));
    }
    return 0;
}

struct PreflightArgs {
    std::string              image;
    std::string              fixture;
    std::string              metadataFile;
    std::string              platform;
    std::string              engine = "docker";
    bool                     analyze = false;
    bool                     yes     = false;
    bool                     force   = false;
    bool                     exec    = false;
    std::vector<std::string> userArgs;
};

int cmd_preflight(Runner& r, const PreflightArgs& a)
{
    AugmentedMetadata m;
    if (!a.metadataFile.empty()) {
        m = parse_augmented(as_string(read_file(a.metadataFile)));
    } else if (a.analyze) {
        auto img = r.acquire(a.image, a.platform);
        auto rep = r.scan(img);
        LegacyPlatform base{img.architecture.empty() ? host_architecture() : img.architecture,
                            img.os.empty() ? "linux" : img.os,
                            {}};
        m = emit_augmented(rep, base);
        r.err() << "analyzed " << img.name << ": " << rep.detections.size() << " rule(s) evaluated\n";
    } else {
        throw Error(ErrorKind::Usage, "no hardware metadata for " + a.image +
                                          ": pass --metadata <file>, or --analyze to scan the image first");
    }

    auto caps   = probe(a.fixture);
    auto report = evaluate(m, caps, EvaluateOptions{&r.kb(), {}});

    std::optional<RunArgs> run;
    std::string            refusal;
    try {
        run = synthesize_run_args(report, a.userArgs, a.image, a.force);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Refused)
            throw;
        refusal = e.what();
    }

    std::vector<std::string> command;
    if (run) {
        command.push_back(a.engine);
        command.insert(command.end(), run->args.begin(), run->args.end());
        for (const auto& w : run->warnings)
            r.err() << w << "\n";
    }
    if (report.decision == Decision::RunDegraded)
        r.err() << "warning: running degraded; see advice\n";

    if (r.json_mode()) {
        json j{{"image", a.image},
               {"decision", to_string(report.decision)},
               {"report", json::parse(preflight_report_to_json(report))},
               {"command", run ? json(command) : json(nullptr)}};
        r.print_json(j.dump(2));
    } else {
        std::string text = render_preflight_text(report);
        if (r.color()) {
            const char* c = report.decision == Decision::Run ? "\033[32m"
                            : report.decision == Decision::RunDegraded ? "\033[33m"
                                                                       : "\033[31m";
            auto nl = text.find('\n');
            text    = c + text.substr(0, nl) + "\033[0m" + text.substr(nl);
        }
        r.out() << text;
        if (run)
            r.out() << join_command(command) << "\n";
    }
    if (!run) {
        r.err() << "hwdock: " << refusal << "\n";
        return exit_code(report.decision);
    }

    if (a.exec) {
        StdTerminal fallback;
        Terminal&   tty = r.mCtx.terminal ? *r.mCtx.terminal : fallback;
        if (!approve_interactively(report, tty, a.yes)) {
            r.err() << "hwdock: not approved; the container was not started\n";
            return 1;
        }
        return r.mCtx.exec(command);
    }
    return exit_code(report.decision);
}

struct MatrixArgs {
    std::string repo;
    std::string resume;
};

int cmd_matrix(Runner& r, const MatrixArgs& a)
{
    auto ref = resolve_ref(a.repo);
    auto m   = arch_matrix(ref, r.registry(), a.resume.empty() ? std::nullopt : std::optional(a.resume));
    if (r.json_mode())
        r.print_json(arch_matrix_to_json(m));
    else
        r.out() << render_arch_matrix_text(m);
    if (m.incomplete)
        r.err() << "warning: matrix incomplete (rate budget); resume with --resume '" << m.resumeToken.value_or("")
                << "'\n";
    return 0;
}

struct CollectArgs {
    std::string seed;
    std::string outDir;
    std::string note;
    bool        noExpand = false;
};

HubClient make_hub(Runner& r)
{
    HubConfig cfg;
    cfg.baseUrl   = r.mG.hub;
    cfg.authToken = r.env("HWDOCK_TOKEN");
    return HubClient(cfg, r.mCtx.transport, r.mCtx.clock, r.limiter());
}

int cmd_collect(Runner& r, const CollectArgs& a)
{
    auto hub  = make_hub(r);
    auto seed = read_seed_file(a.seed);
    Expansion exp;
    if (a.noExpand) {
        for (const auto& s : seed)
            exp.repos.push_back(normalize_repo_name(s));
    } else {
        exp = expand_sample(seed, hub);
    }
    for (const auto& f : exp.failures)
        r.err() << "warning: sister organization probe failed for " << f.name << ": " << f.reason << "\n";

    auto snap = take_snapshot(exp.repos, hub, a.note.empty() ? "seed " + a.seed : a.note);
    auto path = save_snapshot(a.outDir, snap);
    if (snap.partial)
        r.err() << "warning: snapshot is partial (rate budget exhausted); " << snap.absences.size()
                << " repositories not recorded\n";

    json summary{{"path", path},
                 {"takenAt", snap.takenAt},
                 {"repositories", exp.repos.size()},
                 {"records", snap.records.size()},
                 {"absences", snap.absences.size()},
                 {"partial", snap.partial}};
    if (r.json_mode())
        r.print_json(summary.dump(2));
    else
        r.out() << "snapshot " << path << ": " << snap.records.size() << " records, " << snap.absences.size()
                << " absences" << (snap.partial ? " (partial)" : "") << "\n";
    return 0;
}

struct TrendsArgs {
    std::string inDir;
};

int cmd_trends(Runner& r, const TrendsArgs& a)
{
    auto t = compute_trends(load_snapshots(a.inDir));
    for (const auto& n : t.notes)
        r.err() << "note: " << n << "\n";
    if (r.mG.output == "csv" || (r.mG.output.empty() && r.mCtx.stdoutIsTty) || r.mG.output == "text")
        r.out() << trends_to_csv(t);
    else
        r.print_json(trends_to_json(t));
    return 0;
}

struct KbArgs {
    std::string file;
};

int cmd_kb_validate(Runner& r, const KbArgs& a)
{
    if (!a.file.empty())
        r.mG.kb = a.file;
    const auto& kb       = r.kb();
    std::size_t patterns = 0;
    for (const auto& rule : kb.rules)
        patterns += rule.patterns.size();
    if (r.json_mode()) {
        json rules = json::array();
        for (const auto& rule : kb.rules)
            rules.push_back({{"id", rule.id},
                             {"feature", rule.feature},
                             {"patterns", rule.patterns.size()},
                             {"minMatches", rule.minMatches}});
        r.print_json(json{{"valid", true}, {"version", kb.version}, {"rules", rules}, {"patternCount", patterns}}.dump(2));
    } else {
        r.out() << "knowledge base " << kb.version << " is valid: " << kb.rules.size() << " rules, " << patterns
                << " patterns\n";
    }
    return 0;
}

} // namespace

CliContext CliContext::process()
{
    CliContext ctx;
    ctx.out         = &std::cout;
    ctx.err         = &std::cerr;
    ctx.getenv      = [](const char* n) -> std::optional<std::string> {
        const char* v = std::getenv(n);
        return v ? std::optional<std::string>(v) : std::nullopt;
    };
    ctx.stdoutIsTty = ::isatty(STDOUT_FILENO);
    ctx.transport   = std::make_shared<HttplibTransport>();
    ctx.clock       = std::make_shared<SystemClock>();
    ctx.exec        = run_child;
    return ctx;
}

int dispatch(const std::vector<std::string>& rawArgs, CliContext& ctx)
{
    // Everything after "--" belongs to the engine, not to us.
    std::vector<std::string> args, userArgs;
    bool                     passthrough = false;
    for (const auto& a : rawArgs) {
        if (!passthrough && a == "--") {
            passthrough = true;
            continue;
        }
        (passthrough ? userArgs : args).push_back(a);
    }

    Globals  g;
    CLI::App app{"Hardware-aware container image toolchain", "hwdock"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--kb", g.kb, "Knowledge base file, or 'default' (env HWDOCK_KB)");
    app.add_option("--output", g.output, "Output mode: json or text (default: text on a terminal, json otherwise)")
        ->check(CLI::IsMember({"json", "text", "csv"}));
    app.add_option("--cache", g.cache, "Layer cache directory (env HWDOCK_CACHE)");
    app.add_option("--registry", g.registry, "Registry base URL override, e.g. http://localhost:5000");
    app.add_option("--hub", g.hub, "Hub API base URL")->capture_default_str();
    app.add_option("--budget", g.budget, "Requests allowed per window")->capture_default_str();
    app.add_option("--budget-window", g.budgetWindow, "Budget window in seconds")->capture_default_str();
    app.add_option("--color", g.color, "auto, always or never")->check(CLI::IsMember({"auto", "always", "never"}));

    ScanArgs scanA;
    auto*    scan = app.add_subcommand("scan", "Detect hardware dependencies in images");
    scan->add_option("targets", scanA.targets, "Saved archive, layer tar, or registry reference")->required();
    scan->add_option("--platform", scanA.platform, "os/arch to select (default: this host)");

    ProbeArgs probeA;
    auto*     probeCmd = app.add_subcommand("probe", "Report host capabilities");
    probeCmd->add_option("--fixture", probeA.fixture, "Capability snapshot instead of the live host");

    PreflightArgs pfA;
    auto*         pf = app.add_subcommand("preflight", "Check an image against this host and build the run command");
    pf->add_option("image", pfA.image, "Image reference or archive")->required();
    pf->add_option("--fixture", pfA.fixture, "Capability snapshot instead of the live host");
    pf->add_option("--metadata", pfA.metadataFile, "Augmented metadata file");
    pf->add_option("--platform", pfA.platform, "os/arch to analyze (with --analyze)");
    pf->add_option("--engine", pfA.engine, "Container engine executable")->capture_default_str();
    pf->add_flag("--analyze", pfA.analyze, "Scan the image when no metadata is given");
    pf->add_flag("--yes,-y", pfA.yes, "Approve device and volume access without asking");
    pf->add_flag("--force", pfA.force, "Emit the command even when refused");
    pf->add_flag("--exec", pfA.exec, "Run the engine instead of printing the command");

    MatrixArgs mA;
    auto*      matrix = app.add_subcommand("matrix", "Tags x architectures availability of a repository");
    matrix->add_option("repo", mA.repo, "Repository")->required();
    matrix->add_option("--resume", mA.resume, "Resume token from an incomplete run");

    EmitArgs eA;
    auto*    emit = app.add_subcommand("emit-meta", "Emit augmented hardware metadata");
    emit->add_option("image", eA.image, "Image to scan");
    emit->add_option("--scan", eA.scanFile, "Scan report (JSON) instead of scanning");
    emit->add_option("--metadata", eA.metadataFile, "Existing augmented metadata (for --legacy)");
    emit->add_option("--base", eA.baseFile, "Base platform document");
    emit->add_option("--arch", eA.arch, "Base architecture");
    emit->add_option("--os", eA.os, "Base os")->capture_default_str();
    emit->add_option("--feature", eA.features, "Base (required) feature; repeatable");
    emit->add_option("--platform", eA.platform, "os/arch to select when scanning");
    emit->add_flag("--legacy", eA.legacy, "Print the downgraded legacy platform instead");

    CollectArgs cA;
    auto*       collect = app.add_subcommand("collect", "Take a metadata snapshot of a sampled repository set");
    collect->add_option("--seed", cA.seed, "Seed file, one repository per line")->required();
    collect->add_option("--out", cA.outDir, "Snapshot directory")->required();
    collect->add_option("--note", cA.note, "Source note stored with the snapshot");
    collect->add_flag("--no-expand", cA.noExpand, "Skip sister-organization expansion");

    TrendsArgs tA;
    auto*      trends = app.add_subcommand("trends", "Trend statistics over stored snapshots");
    trends->add_option("--in", tA.inDir, "Snapshot directory")->required();

    KbArgs kA;
    auto*  kbv = app.add_subcommand("kb-validate", "Validate a knowledge base");
    kbv->add_option("file", kA.file, "Knowledge base file (default: --kb, HWDOCK_KB, bundled)");

    std::vector<std::string> argvStore{"hwdock"};
    argvStore.insert(argvStore.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argvStore)
        argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        *ctx.out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        *ctx.out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        *ctx.err << "hwdock: " << e.what() << "\n\n";
        const CLI::App* failed = &app;
        for (auto* sub : app.get_subcommands())
            failed = sub;
        *ctx.err << failed->help();
        return 2;
    }

    if (!userArgs.empty() && !pf->parsed()) {
        *ctx.err << "hwdock: arguments after -- are only accepted by preflight\n";
        return 2;
    }
    pfA.userArgs = userArgs;

    Runner r(ctx, g);
    try {
        if (g.output == "csv" && !trends->parsed())
            throw Error(ErrorKind::Usage, "--output csv is only valid for trends");
        if (scan->parsed())
            return cmd_scan(r, scanA);
        if (probeCmd->parsed())
            return cmd_probe(r, probeA);
        if (pf->parsed())
            return cmd_preflight(r, pfA);
        if (matrix->parsed())
            return cmd_matrix(r, mA);
        if (emit->parsed())
            return cmd_emit_meta(r, eA);
        if (collect->parsed())
            return cmd_collect(r, cA);
        if (trends->parsed())
            return cmd_trends(r, tA);
        if (kbv->parsed())
            return cmd_kb_validate(r, kA);
    } catch (const Error& e) {
        *ctx.err << "hwdock: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        *ctx.err << "hwdock: " << e.what() << "\n";
        return 1;
    }
    *ctx.err << app.help();
    return 2;
}

int dispatch(int argc, char** argv)
{
    auto                     ctx = CliContext::process();
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, ctx);
}

} // namespace hwdock
