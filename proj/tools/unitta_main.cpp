#include <iostream>

#include <CLI11.hpp>

#include "unitta/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Markov-stream test-time-adaptation simulator"};
    app.require_subcommand(1);

    unitta::cli::GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a labeled stream from a scenario config");
    gen_cmd->add_option("--config", gen.config_path, "scenario config file")->required();
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    std::uint64_t gen_seed = 0;
    auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_seed, "override the config seed");
    gen_cmd->add_flag("--quota", gen.force_quota, "force exact-count masking");

    unitta::cli::VerifyOptions verify;
    auto* verify_cmd = app.add_subcommand("verify", "check a stream against its config");
    verify_cmd->add_option("stream", verify.stream_path, "stream CSV path")->required();
    verify_cmd->add_option("--config", verify.config_path, "scenario config file")->required();

    unitta::cli::RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run the adaptation engine over a stream");
    run_cmd->add_option("--config", run.config_path, "scenario config file")->required();
    run_cmd->add_option("--out", run.out_dir, "output directory")->required();
    run_cmd->add_option("--mode", run.mode,
                        "unitta|cofa_only|bdn_only|global_bn_baseline|test_baseline");
    std::uint64_t run_seed = 0;
    auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "override the config seed");
    run_cmd->add_flag("--quota", run.force_quota, "force exact-count masking");

    unitta::cli::SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "run every mode over the scenario grid");
    sweep_cmd->add_option("--out", sweep.out_dir, "output directory")->required();
    sweep_cmd->add_option("--grid", sweep.grid, "24 or 36");
    std::string sweep_config;
    auto* sweep_cfg_opt = sweep_cmd->add_option("--config", sweep_config,
                                                "optional overrides (length, world.*, ...)");
    std::uint64_t sweep_seed = 0;
    auto* sweep_seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "base stream seed");
    sweep_cmd->add_option("--threads", sweep.threads, "worker threads (0 = auto)");

    CLI11_PARSE(app, argc, argv);

    if (gen_cmd->parsed()) {
        if (gen_seed_opt->count()) gen.seed = gen_seed;
        return unitta::cli::cmd_gen(gen, std::cout);
    }
    if (verify_cmd->parsed()) return unitta::cli::cmd_verify(verify, std::cout);
    if (run_cmd->parsed()) {
        if (run_seed_opt->count()) run.seed = run_seed;
        return unitta::cli::cmd_run(run, std::cout);
    }
    if (sweep_cmd->parsed()) {
        if (sweep_cfg_opt->count()) sweep.config_path = sweep_config;
        if (sweep_seed_opt->count()) sweep.seed = sweep_seed;
        return unitta::cli::cmd_sweep(sweep, std::cout);
    }
    return unitta::cli::kExitInput;
}
