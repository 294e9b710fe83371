// actev: batch driver for the activated-Euler spectral solver.
//
// Subcommands: run, verify, props, gronwall, refine, sweep.
// Exit codes: 0 pass, 1 config error, 2 solver failure, 3 verification failure.

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "actev/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"activated-Euler pseudo-spectral solver and verification lab"};
    app.require_subcommand(1);

    std::string config_path, out_dir, run_dir, ladder_spec, props_out;
    std::uint64_t seed = 42;
    long samples = 100000;
    double scale = 1e-6;

    auto* run = app.add_subcommand("run", "integrate a scenario and persist diagnostics");
    run->add_option("--config", config_path, "scenario JSON")->required();
    run->add_option("--out", out_dir, "output directory (overrides output.dir)");

    auto* verify = app.add_subcommand("verify", "replay the a-priori bounds of a finished run");
    verify->add_option("--run", run_dir, "run directory produced by `run`")->required();

    auto* props = app.add_subcommand("props", "randomized constitutive certification");
    props->add_option("--seed", seed, "PRNG seed");
    props->add_option("--samples", samples, "samples per check");
    props->add_option("--out", props_out, "also write the report to this file");

    auto* gronwall =
        app.add_subcommand("gronwall", "two-trajectory stability experiment");
    gronwall->add_option("--config", config_path, "scenario JSON")->required();
    gronwall->add_option("--scale", scale, "relative L2 size of the perturbation");
    gronwall->add_option("--out", out_dir, "report directory");

    auto* refine = app.add_subcommand("refine", "(n, eps) refinement ladder");
    refine->add_option("--config", config_path, "scenario JSON")->required();
    refine->add_option("--ladder", ladder_spec, "comma list n1:eps1,n2:eps2,...")->required();
    refine->add_option("--out", out_dir, "report directory");

    auto* sweep = app.add_subcommand("sweep", "run every ladder level as a full run");
    sweep->add_option("--config", config_path, "scenario JSON")->required();
    sweep->add_option("--ladder", ladder_spec, "comma list n1:eps1,n2:eps2,...")->required();
    sweep->add_option("--out", out_dir, "parent output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return actev::cli::cmd_run(config_path, out_dir);
    if (verify->parsed()) return actev::cli::cmd_verify(run_dir);
    if (props->parsed()) return actev::cli::cmd_props(seed, samples, props_out);
    if (gronwall->parsed()) return actev::cli::cmd_gronwall(config_path, scale, out_dir);
    if (refine->parsed()) return actev::cli::cmd_refine(config_path, ladder_spec, out_dir);
    if (sweep->parsed()) return actev::cli::cmd_sweep(config_path, ladder_spec, out_dir);
    return actev::cli::kExitConfig;
}
