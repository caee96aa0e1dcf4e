#include "codyad/pipeline.hpp"

#include "codyad/artifacts.hpp"
#include "codyad/csv.hpp"
#include "codyad/diagnostics.hpp"
#include "codyad/errors.hpp"
#include "codyad/gp.hpp"
#include "codyad/kernels/kernels.hpp"
#include "codyad/log.hpp"
#include "codyad/scoring.hpp"
#include "codyad/surface.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

namespace codyad {
namespace {

using nlohmann::json;

std::string path_in(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

/// Node table, dyads, design, and the covariance cache for one configuration.
struct Prepared {
    NodeTable nodes;
    DyadSet all_dyads;
    DesignMatrix all_design;
    DyadSet fit_dyads;
    DesignMatrix fit_design;
    DyadSet test_dyads;
    DesignMatrix test_design;
    std::unique_ptr<CovarianceCache> cache;
    bool holdout = false;
};

DesignMatrix subset_design(const DesignMatrix& design, const std::vector<std::size_t>& rows) {
    DesignMatrix out = design;
    out.x.resize(Eigen::Index(rows.size()), design.x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.x.row(Eigen::Index(r)) = design.x.row(Eigen::Index(rows[r]));
    return out;
}

Prepared prepare(const RunConfig& config) {
    Prepared p;
    p.nodes = read_node_table(config.resolve(config.nodes_path));
    BuildOptions opts;
    opts.location_tolerance = config.location_tolerance;
    p.all_dyads = build_dyads(p.nodes, config.dissimilarity, config.mode, opts);
    p.all_design = build_design(p.nodes, p.all_dyads);
    if (config.holdout_fraction > 0.0) {
        Rng rng(config.sampler.seed, 0x5EED0000ULL);
        const auto [fit, test] = holdout_split(p.all_dyads.size(), config.holdout_fraction, rng);
        p.fit_dyads = p.all_dyads.subset(fit);
        p.fit_design = subset_design(p.all_design, fit);
        p.test_dyads = p.all_dyads.subset(test);
        p.test_design = subset_design(p.all_design, test);
        p.holdout = true;
    } else {
        p.fit_dyads = p.all_dyads;
        p.fit_design = p.all_design;
    }
    if (config.spatial_effects) {
        PhiSupport support;
        if (!config.phi.values.empty()) {
            support.values = config.phi.values;
        } else {
            support = PhiSupport::from_rule(p.all_dyads.scale.ds_max, *config.phi.step, config.phi.fraction);
        }
        support.validate();
        p.cache = std::make_unique<CovarianceCache>(p.all_dyads.locations, config.mode, support);
    }
    return p;
}

RunConfig load_validated(const std::string& path, const CliOverrides& overrides) {
    std::vector<std::string> issues;
    RunConfig config = load_config(path, issues);
    if (overrides.seed) {
        config.sampler.seed = *overrides.seed;
        config.source["sampler"]["seed"] = *overrides.seed;
    }
    if (overrides.threads) {
        config.sampler.threads = *overrides.threads;
        config.source["sampler"]["threads"] = *overrides.threads;
    }
    if (overrides.out) config.output_dir = *overrides.out;
    for (auto& s : validate_config(config)) issues.push_back(s);
    if (!issues.empty()) {
        std::string msg = "config has " + std::to_string(issues.size()) + " issue(s):";
        for (const auto& s : issues) msg += "\n  - " + s;
        throw ValidationError("cli", msg);
    }
    return config;
}

std::string output_dir(const RunConfig& config, const CliOverrides& overrides) {
    if (overrides.out) return *overrides.out;
    return config.resolve(config.output_dir);
}

json chain_records(const PosteriorDraws& draws) {
    json out = json::array();
    for (const auto& c : draws.chains) {
        json r = {{"chain", c.chain},
                  {"sweeps", c.sweeps},
                  {"draws", c.draws.size()},
                  {"burn_in_acceptance", c.burn_in_acceptance},
                  {"acceptance", c.acceptance},
                  {"proposal_scale", c.proposal_scale},
                  {"constraint_fallbacks", c.constraint_fallbacks},
                  {"seconds", c.seconds}};
        if (c.failure) r["failure"] = {{"module", c.failure_module}, {"message", *c.failure}};
        out.push_back(r);
    }
    return out;
}

json base_meta(const RunConfig& config, const Prepared& data) {
    json meta;
    meta["seed"] = config.sampler.seed;
    meta["config"] = config.source;
    meta["kernel"] = kernels::select(config.sampler.deterministic_reduction).name;
    meta["nodes"] = data.nodes.size();
    meta["dyads"] = data.all_dyads.size();
    meta["fit_dyads"] = data.fit_dyads.size();
    meta["locations"] = data.all_dyads.location_count();
    meta["covariates"] = data.all_design.names;
    meta["dropped_covariates"] = data.all_design.dropped_columns;
    meta["scale"] = {{"ds_max", data.all_dyads.scale.ds_max}, {"dt_max", data.all_dyads.scale.dt_max}};
    json jitter = json::array();
    if (data.cache) {
        meta["phi_support"] = data.cache->support().values;
        for (const auto& e : data.cache->jitter_events()) jitter.push_back({{"phi", e.phi}, {"jitter", e.jitter}});
    }
    meta["jitter_events"] = jitter;
    return meta;
}

void write_json(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cli", "cannot write " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cli", "failed writing " + path);
}

struct Fit {
    std::unique_ptr<DyadicModel> model;
    PosteriorDraws draws;
};

Fit fit(const RunConfig& config, const Prepared& data, const WeightSpec& weights) {
    ModelSpec spec = config.model_spec();
    spec.weights = weights;
    Fit f;
    f.model = std::make_unique<DyadicModel>(data.fit_dyads, data.fit_design, data.cache.get(), spec, config.priors);
    f.draws = run_chains(*f.model, config.sampler);
    f.draws.beta_names = data.fit_design.names;
    return f;
}

/// Draw files, summary and fitted means for one fitted model.
void write_fit_artifacts(const Fit& f, const Prepared& data, const std::string& dir, bool store_fitted) {
    ensure_directory(dir);
    write_draw_csvs(f.draws, dir);
    write_summary_csv(chain_summary(f.draws, f.model->spatial(), f.model->node_effects()), path_in(dir, "summary.csv"));
    if (store_fitted) write_fitted_csv(f.draws, data.fit_dyads, path_in(dir, "fitted.csv"));
}

[[noreturn]] void rethrow_failure(const PosteriorDraws& draws) {
    for (const auto& c : draws.chains) {
        if (!c.failure) continue;
        const std::string msg = "chain " + std::to_string(c.chain) + ": " + *c.failure;
        if (c.failure_module == "io") throw IoError(c.failure_module, msg);
        throw NumericalError(c.failure_module, msg);
    }
    throw NumericalError("mcmc-sampler", "sampler failed");
}

ModelScore score(const RunConfig& config, const Prepared& data, const Fit& f, const std::string& label) {
    const auto draws = f.draws.all();
    const DyadSet& dyads = data.holdout ? data.test_dyads : data.fit_dyads;
    const DesignMatrix& design = data.holdout ? data.test_design : data.fit_design;
    return score_model(dyads, design, f.model->spec().weights, draws, label, config.crps_mode, config.sampler.threads);
}

SurfaceGrid surface_for(const RunConfig& config, const Prepared& data, const std::vector<const Draw*>& draws) {
    SurfaceGrid grid = config.grid_path.empty()
                           ? observed_location_grid(data.nodes, data.all_dyads, data.all_design)
                           : read_surface_grid(config.resolve(config.grid_path), data.all_design);
    estimate_surface(draws, grid, data.cache.get(), config.surface_thin, config.sampler.threads);
    return grid;
}

struct ErrorInfo {
    int code;
    std::string kind;
    std::string module;
    std::string message;
};

ErrorInfo classify(const std::exception& e) {
    if (auto* v = dynamic_cast<const ValidationError*>(&e)) return {kExitValidation, "validation", v->module(), e.what()};
    if (auto* d = dynamic_cast<const DomainError*>(&e)) return {kExitValidation, "domain", d->module(), e.what()};
    if (auto* n = dynamic_cast<const NumericalError*>(&e)) return {kExitNumerical, "numerical", n->module(), e.what()};
    if (auto* i = dynamic_cast<const IoError*>(&e)) return {kExitIo, "io", i->module(), e.what()};
    if (auto* g = dynamic_cast<const Error*>(&e)) return {kExitNumerical, "runtime", g->module(), e.what()};
    return {kExitNumerical, "runtime", "unknown", e.what()};
}

/// Runs `body`; on failure prints a JSON error record to `err`, also storing it in
/// <out_dir>/run_meta.json when an output directory is known.
int guarded(std::ostream& err, const std::function<void(std::string& out_dir, json& meta)>& body) {
    std::string out_dir;
    json meta;
    try {
        body(out_dir, meta);
        return kExitOk;
    } catch (const std::exception& e) {
        const ErrorInfo info = classify(e);
        json record = {{"kind", info.kind}, {"module", info.module}, {"message", info.message}};
        err << json{{"error", record}}.dump() << '\n';
        if (!out_dir.empty()) {
            try {
                ensure_directory(out_dir);
                meta["status"] = "failed";
                meta["error"] = record;
                meta["warnings"] = drain_warnings();
                write_json(meta, path_in(out_dir, "run_meta.json"));
            } catch (const std::exception&) {
            }
        }
        return info.code;
    }
}

}  // namespace

int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err) {
    std::vector<std::string> issues;
    try {
        const RunConfig config = load_config(config_path, issues);
        for (auto& s : validate_config(config)) issues.push_back(s);
    } catch (const std::exception& e) {
        issues.push_back(e.what());
    }
    if (issues.empty()) {
        out << "config ok\n";
        return kExitOk;
    }
    for (const auto& s : issues) err << "issue: " << s << '\n';
    return kExitValidation;
}

int cmd_run(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err) {
    return guarded(err, [&](std::string& dir, json& meta) {
        const RunConfig config = load_validated(config_path, overrides);
        dir = output_dir(config, overrides);
        const auto start = std::chrono::steady_clock::now();
        const Prepared data = prepare(config);
        meta = base_meta(config, data);
        meta["model"] = to_string(config.weight_model);
        ensure_directory(dir);
        write_dyads_csv(data.all_dyads, path_in(dir, "dyads.csv"));

        const Fit f = fit(config, data, config.weight_spec());
        meta["chains"] = chain_records(f.draws);
        if (f.draws.failed()) {
            write_draw_csvs(f.draws, dir);
            rethrow_failure(f.draws);
        }
        write_fit_artifacts(f, data, dir, config.sampler.store_fitted);
        const auto draws = f.draws.all();
        write_surface_csv(surface_for(config, data, draws), path_in(dir, "surface.csv"));
        write_scores_csv({score(config, data, f, to_string(config.weight_model))}, path_in(dir, "scores.csv"));

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        meta["status"] = "ok";
        meta["wall_clock_seconds"] = wall;
        meta["sampler_seconds"] = f.draws.seconds;
        meta["iterations_per_second"] = f.draws.sweeps_per_second();
        meta["warnings"] = drain_warnings();
        write_json(meta, path_in(dir, "run_meta.json"));
        out << "wrote " << dir << " (" << f.draws.draw_count() << " draws, "
            << static_cast<long long>(f.draws.sweeps_per_second()) << " it/s)\n";
    });
}

int cmd_compare(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err) {
    return guarded(err, [&](std::string& dir, json& meta) {
        const RunConfig config = load_validated(config_path, overrides);
        dir = output_dir(config, overrides);
        const auto start = std::chrono::steady_clock::now();
        const Prepared data = prepare(config);
        meta = base_meta(config, data);
        ensure_directory(dir);
        write_dyads_csv(data.all_dyads, path_in(dir, "dyads.csv"));

        std::vector<ModelScore> scores;
        json models = json::object();
        for (WeightModel wm : {WeightModel::None, WeightModel::Time, WeightModel::Space, WeightModel::SpaceTime}) {
            const std::string label = to_string(wm);
            const Fit f = fit(config, data, config.weight_spec_for(wm));
            models[label] = {{"chains", chain_records(f.draws)},
                             {"iterations_per_second", f.draws.sweeps_per_second()}};
            meta["models"] = models;
            const std::string sub = path_in(path_in(dir, "models"), label);
            if (f.draws.failed()) {
                write_draw_csvs(f.draws, sub);
                rethrow_failure(f.draws);
            }
            write_fit_artifacts(f, data, sub, config.sampler.store_fitted);
            scores.push_back(score(config, data, f, label));
            out << label << ": crps " << format_double(scores.back().crps) << '\n';
        }
        write_scores_csv(scores, path_in(dir, "scores.csv"));
        meta["status"] = "ok";
        meta["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        meta["warnings"] = drain_warnings();
        write_json(meta, path_in(dir, "run_meta.json"));
    });
}

int cmd_surface(const std::string& config_path, const std::string& draws_dir, const CliOverrides& overrides,
                std::ostream& out, std::ostream& err) {
    return guarded(err, [&](std::string& dir, json&) {
        const RunConfig config = load_validated(config_path, overrides);
        const std::string out_dir = output_dir(config, overrides);
        const std::string source = draws_dir.empty() ? out_dir : draws_dir;
        const Prepared data = prepare(config);
        const PosteriorDraws draws = read_draw_csvs(source);
        const auto all = draws.all();
        if (!all.empty() && std::size_t(all.front()->beta_star.size()) != data.all_design.cols())
            throw ValidationError("potential-surface", "stored draws do not match the configured design");
        ensure_directory(out_dir);
        write_surface_csv(surface_for(config, data, all), path_in(out_dir, "surface.csv"));
        dir.clear();  // never overwrite the run's metadata from this subcommand
        out << "wrote " << path_in(out_dir, "surface.csv") << " from " << all.size() << " draws\n";
    });
}

int cmd_simulate_appendix_a(const AppendixACli& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&](std::string& dir, json& meta) {
        if (args.seeds.empty()) throw ValidationError("cli", "at least one seed is required");
        dir = path_in(path_in(args.out_dir, "sim"), "appendixA");
        const auto start = std::chrono::steady_clock::now();
        const auto reports = run_appendix_a(args.seeds, args.options);
        write_appendix_a(reports, dir);

        meta["seeds"] = args.seeds;
        meta["iterations"] = args.options.iterations;
        meta["burn_in"] = args.options.burn_in.value_or(args.options.iterations / 2);
        meta["thin"] = args.options.thin;
        meta["kernel"] = kernels::select(args.options.deterministic_reduction).name;
        json runs = json::array();
        for (const auto& r : reports) {
            json s = json::object();
            for (const ScenarioResult* sc : {&r.unweighted, &r.weighted}) {
                s[sc->label] = {{"covered", sc->covered},
                                {"points", r.data.potential.size()},
                                {"variance_multiplier_dt1", sc->variance_multiplier_dt1},
                                {"variance_multiplier_dt3", sc->variance_multiplier_dt3},
                                {"burn_in_acceptance", sc->burn_in_acceptance},
                                {"acceptance", sc->acceptance},
                                {"seconds", sc->seconds}};
            }
            runs.push_back({{"seed", r.seed}, {"scenarios", s}});
            out << "seed " << r.seed << ": unweighted covers " << r.unweighted.covered << "/"
                << r.data.potential.size() << ", weighted covers " << r.weighted.covered << "/"
                << r.data.potential.size() << ", variance x" << format_double(r.weighted.variance_multiplier_dt1)
                << " (dt=1) x" << format_double(r.weighted.variance_multiplier_dt3) << " (dt=3)\n";
        }
        meta["runs"] = runs;
        meta["status"] = "ok";
        meta["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        meta["warnings"] = drain_warnings();
        write_json(meta, path_in(dir, "run_meta.json"));
    });
}

}  // namespace codyad
