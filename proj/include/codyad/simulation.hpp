#pragma once

#include "codyad/domain.hpp"
#include "codyad/gp.hpp"
#include "codyad/network.hpp"
#include "codyad/random.hpp"
#include "codyad/sampler.hpp"
#include "codyad/surface.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace codyad {

// ---------------------------------------------------------------------------
// AR(1) series on a discrete time line

struct Ar1Config {
    std::size_t steps = 15;
    Eigen::Vector2d beta{1.3, 0.8};
    double sigma2_0 = 0.01;
    double innovation_sd = 0.5;
    double y0 = 0.0;
    bool response_noise = true;  // false drops the N(0, sigma2_0) term (testing only)

    void validate() const;
};

struct Ar1Data {
    NodeTable nodes;            // id = t, planar location (t, 0), time t, covariates x_1, x_2
    Eigen::MatrixXd x;          // steps x 2
    Eigen::VectorXd y;          // steps
    Eigen::VectorXd potential;  // x_t' beta
};

/// y_t ~ N(y_{t-1} + (x_t - x_{t-1})'beta, sigma2_0) with random-walk covariates, t = 1..steps.
Ar1Data generate_ar1(const Ar1Config& config, Rng& rng);

struct AppendixAOptions {
    std::size_t iterations = 50'000;
    std::optional<std::size_t> burn_in;
    std::size_t thin = 10;
    std::size_t basis_count = 6;
    GammaPrior gamma_prior{10.0, 2.0};
    Ar1Config ar1;
    std::size_t threads = 1;
    bool deterministic_reduction = true;
    // Evaluate the bases on integer time lags (dt^{p/3} with dt in 1..T-1) instead of lags
    // scaled to [0, 1]. The scaled form compresses every basis toward 1 at dt = T-1.
    bool raw_lags = true;
};

struct ScenarioResult {
    std::string label;
    PotentialBand band;
    std::size_t covered = 0;     // points with lower <= truth <= upper
    Eigen::VectorXd gamma_mean;  // posterior mean of gamma (empty when unweighted)
    Eigen::MatrixXd weight_matrix;  // steps x steps posterior mean w, zero diagonal
    double variance_multiplier_dt1 = 1.0;  // 1 / posterior mean w at dt = 1
    double variance_multiplier_dt3 = 1.0;
    double variance_dt1 = 0.0;  // posterior mean of sigma2_y / w at dt = 1
    double variance_dt3 = 0.0;
    double sigma2_mean = 0.0;
    double acceptance = 0.0;
    double burn_in_acceptance = 0.0;
    double seconds = 0.0;
    PosteriorDraws draws;
};

struct AppendixAReport {
    std::uint64_t seed = 0;
    Ar1Data data;
    DyadSet dyads;
    DesignMatrix design;
    ScenarioResult unweighted;
    ScenarioResult weighted;
};

/// Both scenarios (w = 1 and dt^(p/3) composite weights) on one simulated series.
AppendixAReport run_appendix_a(std::uint64_t seed, const AppendixAOptions& options);

/// One report per seed, run in parallel over seeds.
std::vector<AppendixAReport> run_appendix_a(const std::vector<std::uint64_t>& seeds, const AppendixAOptions& options);

/// Writes potential_band.csv, weight_matrix.csv, truth.csv, appendixA_summary.csv and the
/// per-scenario artifact sets under `dir`.
void write_appendix_a(const std::vector<AppendixAReport>& reports, const std::string& dir);

// ---------------------------------------------------------------------------
// Synthetic data from the full model

struct FullModelConfig {
    std::size_t nodes = 50;
    std::size_t covariates = 2;
    double box = 1.0;         // locations uniform on [0, box]^2 (planar)
    double time_span = 10.0;  // times uniform on [0, time_span]
    ParamState truth;         // beta, sigma2_*, phi, gamma used for generation
    WeightSpec weights;
};

struct SimulatedDataset {
    NodeTable nodes;
    DyadSet dyads;
    DesignMatrix design;
    ParamState truth;  // eta and theta filled in
};

/// Locations, times and covariates at random; eta from the GP at `truth.phi`, theta iid,
/// then y~ from the normalized weighted model.
SimulatedDataset generate_full_model(const FullModelConfig& config, Rng& rng);

/// `parameter,value`
void write_truth_csv(const ParamState& truth, const std::vector<std::string>& beta_names, const std::string& path);

}  // namespace codyad
