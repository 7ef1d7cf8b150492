#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clock.hpp"
#include "http.hpp"
#include "preflight.hpp"

namespace hwdock {

/// Everything the CLI touches outside its arguments, so tests can run
/// commands in-process.
struct CliContext {
    std::ostream*                                              out = nullptr;
    std::ostream*                                              err = nullptr;
    std::function<std::optional<std::string>(const char* name)> getenv;
    bool                                                       stdoutIsTty = false;
    Terminal*                                                  terminal    = nullptr;
    std::shared_ptr<HttpTransport>                             transport;
    std::shared_ptr<Clock>                                     clock;
    /// Runs the engine command line; returns its exit status.
    std::function<int(const std::vector<std::string>&)> exec;

    /// Real process: std::cout/std::cerr, environment, httplib, system clock.
    static CliContext process();
};

/// Parses argv (without the program name) and runs one subcommand.
/// Returns 0/10/20 for preflight decisions, 2 for usage errors, 1 otherwise.
int dispatch(const std::vector<std::string>& args, CliContext& ctx);
int dispatch(int argc, char** argv);

} // namespace hwdock
