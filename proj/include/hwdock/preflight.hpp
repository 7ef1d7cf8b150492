#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "host_probe.hpp"
#include "hwmeta.hpp"
#include "image_ref.hpp"
#include "knowledge_base.hpp"
#include "registry.hpp"

namespace hwdock {

enum class Decision { Run, RunDegraded, Refuse };
const char* to_string(Decision d);

/// Process exit code for a decision: 0, 10, 20.
int exit_code(Decision d);

struct Missing {
    enum class Kind { Feature, Device, Arch, Hardware };
    Kind        kind = Kind::Feature;
    std::string name;
    std::string detail;
    bool operator==(const Missing&) const = default;
};
const char* to_string(Missing::Kind k);

struct PreflightReport {
    Decision                 decision = Decision::Run;
    std::vector<Missing>     missingRequired;
    std::vector<Missing>     missingSupported;
    /// "--device=<path>", one per declared device present on the host.
    std::vector<std::string> passthruArgs;
    /// "-v", "<path>:<path>" pairs, one pair per declared volume.
    std::vector<std::string> volumeArgs;
    std::vector<std::string> advice;
    /// Device arguments held back because of a Refuse; --force emits them.
    std::vector<std::string> withheldPassthruArgs;
};

struct EvaluateOptions {
    /// Source of the per-feature simulation flag; nullptr = bundled KB.
    const KnowledgeBase* kb = nullptr;
    /// Platforms the image is published for ("amd64/linux"), if known.
    std::vector<std::string> availablePlatforms;
};

PreflightReport evaluate(const AugmentedMetadata& m, const HostCapabilities& caps, const EvaluateOptions& options = {});

struct RunArgs {
    std::vector<std::string> args;
    std::vector<std::string> warnings;
};

/// run + device args + volume args + user args + image. Our arguments that
/// duplicate or conflict with user-supplied ones are dropped. Throws
/// Error(Refused) on a Refuse decision unless `force`.
RunArgs synthesize_run_args(const PreflightReport& report, const std::vector<std::string>& userArgs,
                            const std::string& image, bool force = false, const std::string& engineCommand = "run");

struct ArchCell {
    bool                       available = false;
    std::optional<std::string> digest;
};

struct ArchMatrix {
    std::string                                               repository;
    std::vector<std::string>                                  tags;
    std::vector<std::string>                                  architectures;
    std::map<std::string, std::map<std::string, std::string>> cells; // tag -> arch -> digest
    bool                                                      incomplete = false;
    /// Tag to resume from after a rate-budget stop.
    std::optional<std::string> resumeToken;
    bool                       emptyTagList = false;
    std::vector<std::string>   notes;

    ArchCell    cell(const std::string& tag, const std::string& arch) const;
    std::size_t cell_count() const;
};

/// Tags x architectures for one repository. Stops cleanly (incomplete +
/// resume token) when the rate budget runs out.
ArchMatrix arch_matrix(const ImageRef& repo, RegistryClient& client,
                       const std::optional<std::string>& resumeFrom = std::nullopt);

std::string preflight_report_to_json(const PreflightReport& r, int indent = 2);
std::string render_preflight_text(const PreflightReport& r);
std::string arch_matrix_to_json(const ArchMatrix& m, int indent = 2);
std::string render_arch_matrix_text(const ArchMatrix& m);

class Terminal {
public:
    virtual ~Terminal()                        = default;
    virtual bool                       is_tty()                      = 0;
    virtual void                       write(const std::string& text) = 0;
    virtual std::optional<std::string> read_line()                   = 0;
};

/// stdin/stderr terminal.
class StdTerminal : public Terminal {
public:
    bool                       is_tty() override;
    void                       write(const std::string& text) override;
    std::optional<std::string> read_line() override;
};

/// Shows the device and volume access the container would get and asks
/// for confirmation. `assumeYes` approves without prompting; no terminal
/// and no flag is an Error(Usage).
bool approve_interactively(const PreflightReport& report, Terminal& tty, bool assumeYes);

} // namespace hwdock
