#include "codyad/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Bayesian composite dyadic regression"};
    app.require_subcommand(1);

    std::string config_path;
    codyad::CliOverrides overrides;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string out_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "Overrides sampler.seed");
        cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
        cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    };

    auto* validate = app.add_subcommand("validate", "Check a configuration without running");
    validate->add_option("--config", config_path, "Run configuration (JSON)")->required();

    auto* run = app.add_subcommand("run", "Build dyads, fit, and write all artifacts");
    add_common(run);

    auto* compare = app.add_subcommand("compare", "Fit the four weight models and write scores.csv");
    add_common(compare);

    std::string draws_dir;
    auto* surface = app.add_subcommand("surface", "Recompute surface.csv from stored draws");
    add_common(surface);
    surface->add_option("--draws", draws_dir, "Directory with the draw CSVs (default: output directory)");

    auto* simulate = app.add_subcommand("simulate", "Simulation studies");
    simulate->require_subcommand(1);
    codyad::AppendixACli appendix;
    std::size_t seed_count = 10;
    std::uint64_t first_seed = 1;
    std::size_t burn_in = 0;
    auto* appendix_cmd = simulate->add_subcommand("appendixA", "AR(1) weighted vs unweighted replication");
    appendix_cmd->add_option("--seeds", seed_count, "Number of replicate seeds")->capture_default_str();
    appendix_cmd->add_option("--seed", first_seed, "First seed")->capture_default_str();
    appendix_cmd->add_option("--iterations", appendix.options.iterations, "Sweeps per scenario")->capture_default_str();
    auto* burn_opt = appendix_cmd->add_option("--burn-in", burn_in, "Burn-in sweeps (default: half)");
    appendix_cmd->add_option("--thin", appendix.options.thin, "Thinning")->capture_default_str();
    appendix_cmd->add_option("--threads", appendix.options.threads, "Parallel seeds")->capture_default_str();
    appendix_cmd->add_option("--out", appendix.out_dir, "Output root")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed() || compare->parsed() || surface->parsed()) {
        CLI::App* cmd = run->parsed() ? run : compare->parsed() ? compare : surface;
        if (cmd->count("--seed")) overrides.seed = seed;
        if (cmd->count("--threads")) overrides.threads = threads;
        if (cmd->count("--out")) overrides.out = out_dir;
    }

    if (validate->parsed()) return codyad::cmd_validate(config_path, std::cout, std::cerr);
    if (run->parsed()) return codyad::cmd_run(config_path, overrides, std::cout, std::cerr);
    if (compare->parsed()) return codyad::cmd_compare(config_path, overrides, std::cout, std::cerr);
    if (surface->parsed()) return codyad::cmd_surface(config_path, draws_dir, overrides, std::cout, std::cerr);
    if (appendix_cmd->parsed()) {
        for (std::size_t k = 0; k < seed_count; ++k) appendix.seeds.push_back(first_seed + k);
        if (burn_opt->count()) appendix.options.burn_in = burn_in;
        return codyad::cmd_simulate_appendix_a(appendix, std::cout, std::cerr);
    }
    return 1;
}
