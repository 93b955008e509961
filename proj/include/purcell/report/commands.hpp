#ifndef PURCELL_REPORT_COMMANDS_HPP
#define PURCELL_REPORT_COMMANDS_HPP

#include "purcell/report/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace purcell::report
{
enum ExitCode : int
{
    kExitSuccess = 0,
    kExitAnalysisFailure = 1,
    kExitUsage = 2,
};

// Bad invocation or unreadable input; maps to kExitUsage.
class InputError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Every command reads its options from `config` ("section.key"; flags are
// mirrored into the same keys by the CLI) and writes into general.out_dir.
struct CommandContext
{
    Config config;
    std::ostream &out;
    std::ostream &err;
};

int cmd_fit_fano(CommandContext &ctx);
int cmd_fit_lifetime(CommandContext &ctx);
int cmd_fit_tuning(CommandContext &ctx);
int cmd_solve_br(CommandContext &ctx);
int cmd_purcell(CommandContext &ctx);
int cmd_synth(CommandContext &ctx);
int cmd_survey(CommandContext &ctx);

/// Runs a command, mapping exceptions onto the exit-code contract and
/// printing the message to ctx.err.
int run_guarded(CommandContext &ctx, int (*command)(CommandContext &));

} // namespace purcell::report

#endif // PURCELL_REPORT_COMMANDS_HPP
