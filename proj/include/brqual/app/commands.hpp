#pragma once

#include "brqual/app/config.hpp"
#include "brqual/improve/improver.hpp"
#include "brqual/provider/gateway.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace brqual::app {

enum ExitCode : int { kOk = 0, kConfigFailure = 1, kMissingArtifact = 2, kProviderFailure = 3 };

/// Test seams: a custom backend for live/record mode and the environment.
struct Hooks {
    std::function<std::unique_ptr<provider::Backend>(const PipelineConfig&)> backend;
    EnvLookup env;
};

struct GlobalOptions {
    bool json = false;
    bool dry_run = false;
};

struct CommandContext {
    PipelineConfig config;
    GlobalOptions options;
    std::ostream& out;
    std::ostream& err;
    Hooks hooks;

    EnvLookup env() const { return hooks.env ? hooks.env : process_env(); }
};

struct FetchArgs {};
struct SampleArgs {
    bool from_fetch = true;
};
struct PreprocessArgs {
    bool from_sample = false;
};
struct ImproveArgs {
    improve::Ablation ablation;
};

// Each command returns an exit status; library errors propagate to run_cli,
// which maps them onto exit codes.
int cmd_fetch(CommandContext& ctx);
int cmd_sample(CommandContext& ctx);
int cmd_preprocess(CommandContext& ctx, const PreprocessArgs& args);
int cmd_detect(CommandContext& ctx);
int cmd_improve(CommandContext& ctx, const ImproveArgs& args);
int cmd_evaluate(CommandContext& ctx);
int cmd_ablate(CommandContext& ctx);
int cmd_train_detector(CommandContext& ctx);
int cmd_build_kb(CommandContext& ctx);

/// Parses argv (without the program name) and runs one subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks = {});

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace brqual::app
