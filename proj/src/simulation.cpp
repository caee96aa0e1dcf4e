#include "codyad/simulation.hpp"

#include "codyad/artifacts.hpp"
#include "codyad/csv.hpp"
#include "codyad/diagnostics.hpp"
#include "codyad/errors.hpp"
#include "codyad/likelihood.hpp"
#include "codyad/parallel.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace codyad {
namespace {

constexpr const char* kModule = "sim-harness";

std::string path_in(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

ScenarioResult fit_scenario(const Ar1Data& data, const DyadSet& dyads, const DesignMatrix& design, WeightSpec weights,
                            std::string label, std::uint64_t seed, const AppendixAOptions& options) {
    ModelSpec spec;
    spec.weights = std::move(weights);
    spec.spatial_effects = false;
    spec.node_effects = false;
    spec.constraint = false;
    PriorConfig priors;
    priors.gamma = options.gamma_prior;
    const DyadicModel model(dyads, design, nullptr, spec, priors);

    SamplerConfig config;
    config.iterations = options.iterations;
    config.burn_in = options.burn_in;
    config.thin = options.thin;
    config.seed = seed;
    config.chains = 1;
    config.threads = 1;
    config.deterministic_reduction = options.deterministic_reduction;

    ScenarioResult result;
    result.label = std::move(label);
    result.draws = run_chains(model, config);
    result.draws.beta_names = design.names;
    const ChainResult& chain = result.draws.chains.front();
    if (chain.failure) throw NumericalError(chain.failure_module, *chain.failure);
    result.acceptance = chain.acceptance;
    result.burn_in_acceptance = chain.burn_in_acceptance;
    result.seconds = chain.seconds;

    const auto draws = result.draws.all();
    result.band = evaluate_potential_path(draws, data.x);
    for (Eigen::Index t = 0; t < data.potential.size(); ++t)
        if (result.band.lower[t] <= data.potential[t] && data.potential[t] <= result.band.upper[t]) ++result.covered;

    const auto steps = Eigen::Index(data.nodes.size());
    const auto q = Eigen::Index(spec.weights.size());
    result.gamma_mean = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(Eigen::Index(dyads.size()));
    Eigen::VectorXd var_mean = Eigen::VectorXd::Zero(Eigen::Index(dyads.size()));
    const Eigen::MatrixXd basis = basis_matrix(dyads, spec.weights);
    for (const Draw* d : draws) {
        result.sigma2_mean += d->sigma2_y;
        result.gamma_mean += d->gamma;
        const Eigen::ArrayXd lin = (basis * d->gamma).array();
        w_mean += (-lin).exp().matrix();
        var_mean += (d->sigma2_y * lin.exp()).matrix();
    }
    const double k = double(draws.size());
    result.sigma2_mean /= k;
    result.gamma_mean /= k;
    w_mean /= k;
    var_mean /= k;

    result.weight_matrix = Eigen::MatrixXd::Zero(steps, steps);
    double w1 = 0.0, w3 = 0.0, v1 = 0.0, v3 = 0.0;
    std::size_t n1 = 0, n3 = 0;
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        const auto i = dyads.node_i[r];
        const auto j = dyads.node_j[r];
        const double w = w_mean[Eigen::Index(r)];
        result.weight_matrix(i, j) = w;
        result.weight_matrix(j, i) = w;
        const double dt = dyads.dt[Eigen::Index(r)];
        const double v = var_mean[Eigen::Index(r)];
        if (dt == 1.0) w1 += w, v1 += v, ++n1;
        if (dt == 3.0) w3 += w, v3 += v, ++n3;
    }
    if (n1) result.variance_multiplier_dt1 = double(n1) / w1, result.variance_dt1 = v1 / double(n1);
    if (n3) result.variance_multiplier_dt3 = double(n3) / w3, result.variance_dt3 = v3 / double(n3);
    return result;
}

void write_scenario(const ScenarioResult& s, const AppendixAReport& report, const std::string& dir) {
    ensure_directory(dir);
    write_dyads_csv(report.dyads, path_in(dir, "dyads.csv"));
    write_draw_csvs(s.draws, dir);
    write_summary_csv(chain_summary(s.draws, false, false), path_in(dir, "summary.csv"));
}

}  // namespace

void Ar1Config::validate() const {
    if (steps < 2) throw DomainError(kModule, "the series needs at least 2 steps");
    if (!(sigma2_0 > 0.0)) throw DomainError(kModule, "sigma2_0 must be positive");
    if (!(innovation_sd >= 0.0)) throw DomainError(kModule, "innovation sd must be nonnegative");
}

Ar1Data generate_ar1(const Ar1Config& config, Rng& rng) {
    config.validate();
    const auto steps = Eigen::Index(config.steps);
    Ar1Data data;
    data.x.resize(steps, 2);
    data.y.resize(steps);
    data.potential.resize(steps);
    data.nodes.covariate_names = {"x_1", "x_2"};
    Eigen::Vector2d x_prev = Eigen::Vector2d::Zero();
    double y_prev = config.y0;
    const double noise_sd = std::sqrt(config.sigma2_0);
    for (Eigen::Index t = 0; t < steps; ++t) {
        Eigen::Vector2d x;
        for (int c = 0; c < 2; ++c) x[c] = x_prev[c] + config.innovation_sd * rng.normal();
        double y = y_prev + (x - x_prev).dot(config.beta);
        if (config.response_noise) y += noise_sd * rng.normal();
        data.x.row(t) = x.transpose();
        data.y[t] = y;
        data.potential[t] = x.dot(config.beta);

        Node node;
        node.id = t + 1;
        node.location = {double(t + 1), 0.0};
        node.time = double(t + 1);
        node.covariates = {x[0], x[1]};
        node.response = y;
        data.nodes.nodes.push_back(node);
        x_prev = x;
        y_prev = y;
    }
    return data;
}

AppendixAReport run_appendix_a(std::uint64_t seed, const AppendixAOptions& options) {
    AppendixAReport report;
    report.seed = seed;
    Rng data_rng(seed, 0xA11CE);
    report.data = generate_ar1(options.ar1, data_rng);
    report.dyads = build_dyads(report.data.nodes, Dissimilarity{}, CoordinateMode::Planar);
    report.design = build_design(report.data.nodes, report.dyads);
    if (options.raw_lags) {
        report.dyads.dt_scaled = report.dyads.dt;
        report.dyads.scale.dt_max = 1.0;
    }
    report.unweighted =
        fit_scenario(report.data, report.dyads, report.design, WeightSpec::unweighted(), "unweighted", seed, options);
    report.weighted = fit_scenario(report.data, report.dyads, report.design,
                                   WeightSpec::time_powers(options.basis_count), "weighted", seed, options);
    return report;
}

std::vector<AppendixAReport> run_appendix_a(const std::vector<std::uint64_t>& seeds, const AppendixAOptions& options) {
    std::vector<AppendixAReport> reports(seeds.size());
    parallel_for(seeds.size(), options.threads,
                 [&](std::size_t k) { reports[k] = run_appendix_a(seeds[k], options); });
    return reports;
}

void write_appendix_a(const std::vector<AppendixAReport>& reports, const std::string& dir) {
    ensure_directory(dir);
    const std::string summary_path = path_in(dir, "appendixA_summary.csv");
    std::ofstream summary(summary_path);
    if (!summary) throw IoError(kModule, "cannot write " + summary_path);
    summary << "seed,scenario,covered,points,variance_multiplier_dt1,variance_multiplier_dt3,variance_dt1,variance_dt3,"
               "sigma2_mean,"
               "acceptance,seconds\n";
    for (const auto& report : reports) {
        const auto points = report.data.potential.size();
        for (const ScenarioResult* s : {&report.unweighted, &report.weighted}) {
            summary << report.seed << ',' << s->label << ',' << s->covered << ',' << points << ','
                    << format_double(s->variance_multiplier_dt1) << ',' << format_double(s->variance_multiplier_dt3)
                    << ',' << format_double(s->variance_dt1) << ',' << format_double(s->variance_dt3) << ','
                    << format_double(s->sigma2_mean) << ',' << format_double(s->acceptance) << ','
                    << format_double(s->seconds) << '\n';
        }

        const std::string seed_dir = path_in(dir, "seed_" + std::to_string(report.seed));
        ensure_directory(seed_dir);
        {
            const std::string path = path_in(seed_dir, "truth.csv");
            std::ofstream out(path);
            if (!out) throw IoError(kModule, "cannot write " + path);
            out << "t,x_1,x_2,y,potential\n";
            for (Eigen::Index t = 0; t < points; ++t)
                out << t + 1 << ',' << format_double(report.data.x(t, 0)) << ',' << format_double(report.data.x(t, 1))
                    << ',' << format_double(report.data.y[t]) << ',' << format_double(report.data.potential[t]) << '\n';
        }
        {
            const std::string path = path_in(seed_dir, "potential_band.csv");
            std::ofstream out(path);
            if (!out) throw IoError(kModule, "cannot write " + path);
            out << "t,truth,unweighted_mean,unweighted_lower,unweighted_upper,weighted_mean,weighted_lower,"
                   "weighted_upper\n";
            for (Eigen::Index t = 0; t < points; ++t) {
                out << t + 1 << ',' << format_double(report.data.potential[t]);
                for (const ScenarioResult* s : {&report.unweighted, &report.weighted})
                    out << ',' << format_double(s->band.mean[t]) << ',' << format_double(s->band.lower[t]) << ','
                        << format_double(s->band.upper[t]);
                out << '\n';
            }
        }
        {
            const std::string path = path_in(seed_dir, "weight_matrix.csv");
            std::ofstream out(path);
            if (!out) throw IoError(kModule, "cannot write " + path);
            out << "t_row,t_col,weight\n";
            const Eigen::MatrixXd& w = report.weighted.weight_matrix;
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c)
                    out << r + 1 << ',' << c + 1 << ',' << format_double(w(r, c)) << '\n';
        }
        write_scenario(report.unweighted, report, path_in(seed_dir, "unweighted"));
        write_scenario(report.weighted, report, path_in(seed_dir, "weighted"));
    }
}

SimulatedDataset generate_full_model(const FullModelConfig& config, Rng& rng) {
    if (config.nodes < 3) throw DomainError(kModule, "the full model needs at least 3 nodes");
    const ParamState& t = config.truth;
    if (std::size_t(t.beta.size()) != config.covariates)
        throw DomainError(kModule, "true beta length must match the covariate count");
    if (!(t.sigma2_y > 0.0) || t.sigma2_eta < 0.0 || t.sigma2_theta < 0.0)
        throw DomainError(kModule, "true variances must be nonnegative (sigma2_y positive)");
    config.weights.validate();

    SimulatedDataset out;
    for (std::size_t c = 0; c < config.covariates; ++c) out.nodes.covariate_names.push_back("x_" + std::to_string(c + 1));
    for (std::size_t i = 0; i < config.nodes; ++i) {
        Node node;
        node.id = std::int64_t(i + 1);
        node.location = {config.box * rng.uniform(), config.box * rng.uniform()};
        node.time = config.time_span * rng.uniform();
        for (std::size_t c = 0; c < config.covariates; ++c) node.covariates.push_back(rng.normal());
        out.nodes.nodes.push_back(node);
    }
    out.dyads = build_dyads(out.nodes, Dissimilarity{}, CoordinateMode::Planar);
    out.design = build_design(out.nodes, out.dyads);
    out.truth = t;
    if (out.design.cols() != config.covariates) throw NumericalError(kModule, "a simulated covariate column vanished");

    const auto m = Eigen::Index(out.dyads.location_count());
    if (t.sigma2_eta > 0.0) {
        const CovarianceCache cache(out.dyads.locations, CoordinateMode::Planar, PhiSupport{{t.phi}});
        out.truth.eta = gp_simulate(cache.entry(0), t.sigma2_eta, rng);
    } else {
        out.truth.eta = Eigen::VectorXd::Zero(m);
    }
    out.truth.eta_star = out.truth.eta;
    out.truth.theta = Eigen::VectorXd::Zero(Eigen::Index(config.nodes));
    if (t.sigma2_theta > 0.0)
        for (Eigen::Index i = 0; i < out.truth.theta.size(); ++i) out.truth.theta[i] = std::sqrt(t.sigma2_theta) * rng.normal();

    Eigen::VectorXd gamma = t.gamma.size() ? t.gamma : Eigen::VectorXd::Zero(Eigen::Index(config.weights.size()));
    if (std::size_t(gamma.size()) != config.weights.size())
        throw DomainError(kModule, "true gamma length must match the weight specification");
    out.truth.gamma = gamma;
    const Eigen::VectorXd mu =
        dyad_means(out.dyads, out.design, MeanParams{t.beta, out.truth.eta, out.truth.theta, t.sigma2_y, gamma});
    const std::span<const double> g(gamma.data(), std::size_t(gamma.size()));
    for (std::size_t r = 0; r < out.dyads.size(); ++r) {
        const double w = config.weights.size()
                             ? composite_weight(out.dyads.dt_scaled[Eigen::Index(r)], out.dyads.ds_scaled[Eigen::Index(r)],
                                                config.weights, g)
                             : 1.0;
        out.dyads.y[Eigen::Index(r)] = mu[Eigen::Index(r)] + std::sqrt(t.sigma2_y / w) * rng.normal();
    }
    return out;
}

void write_truth_csv(const ParamState& truth, const std::vector<std::string>& beta_names, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(kModule, "cannot write " + path);
    out << "parameter,value\n";
    for (Eigen::Index k = 0; k < truth.beta.size(); ++k) {
        const std::string name = std::size_t(k) < beta_names.size() ? beta_names[std::size_t(k)] : std::to_string(k);
        out << "beta[" << name << "]," << format_double(truth.beta[k]) << '\n';
    }
    out << "sigma2_y," << format_double(truth.sigma2_y) << '\n';
    out << "sigma2_eta," << format_double(truth.sigma2_eta) << '\n';
    out << "sigma2_theta," << format_double(truth.sigma2_theta) << '\n';
    out << "phi," << format_double(truth.phi) << '\n';
    for (Eigen::Index k = 0; k < truth.gamma.size(); ++k)
        out << "gamma[" << k + 1 << "]," << format_double(truth.gamma[k]) << '\n';
    for (Eigen::Index k = 0; k < truth.eta.size(); ++k) out << "eta[" << k << "]," << format_double(truth.eta[k]) << '\n';
    for (Eigen::Index k = 0; k < truth.theta.size(); ++k)
        out << "theta[" << k << "]," << format_double(truth.theta[k]) << '\n';
    if (!out) throw IoError(kModule, "failed writing " + path);
}

}  // namespace codyad
