#pragma once

// Gibbs / Metropolis-within-Gibbs sampler for the composite dyadic model
//
//   y~_ij ~ N(x~_ij'beta + eta_loc(j) - eta_loc(i) + theta_i + theta_j, sigma2_y / w_ij)
//   w_ij = exp(-nu(d_ij)'gamma)
//   beta ~ N(0, v I), eta ~ N(0, sigma2_eta R(phi)), theta ~ N(0, sigma2_theta I)
//   sigma2_* ~ IG(a, b), phi ~ Gamma on a discrete support, gamma_p ~ Gamma(a, b)
//
// with eta optionally constrained orthogonal to C = (K'K)^+ K'X~ after every draw.

#include "codyad/gp.hpp"
#include "codyad/likelihood.hpp"
#include "codyad/network.hpp"
#include "codyad/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace codyad {

namespace kernels {
struct KernelTable;
}

/// Shape/rate gamma density.
struct GammaPrior {
    double shape = 2.0;
    double rate = 2.0;

    double log_density(double x) const;
    double mean() const { return shape / rate; }
    double sd() const;
};

/// Shape/scale inverse gamma.
struct InverseGammaPrior {
    double shape = 0.01;
    double scale = 0.01;
};

struct PriorConfig {
    double beta_variance = 1e6;
    InverseGammaPrior sigma2_y;
    InverseGammaPrior sigma2_eta;
    InverseGammaPrior sigma2_theta;
    GammaPrior phi{400.0, 250.0};
    GammaPrior gamma{2.0, 2.0};

    /// Lists every nonpositive hyperparameter.
    std::vector<std::string> issues() const;
};

struct ModelSpec {
    WeightSpec weights;
    bool spatial_effects = true;
    bool node_effects = true;
    bool constraint = true;
};

struct SamplerConfig {
    std::size_t iterations = 50'000;
    std::optional<std::size_t> burn_in;  // default iterations / 2
    std::size_t thin = 10;
    std::uint64_t seed = 1;
    std::size_t chains = 1;
    std::size_t adapt_window = 50;
    double target_accept = 0.44;
    double gamma_proposal_scale = 0.1;
    bool deterministic_reduction = true;
    bool propagate_beta_star = false;  // feed beta* (instead of beta) into later updates
    bool store_fitted = false;
    std::size_t threads = 0;

    std::size_t effective_burn_in() const { return burn_in ? *burn_in : iterations / 2; }
    std::vector<std::string> issues() const;
};

struct ParamState {
    Eigen::VectorXd beta;       // propagated coefficients
    Eigen::VectorXd beta_star;  // reported coefficients (variance-adjusted when constrained)
    Eigen::VectorXd eta;        // raw location effects
    Eigen::VectorXd eta_star;   // constrained location effects; enters all other updates
    Eigen::VectorXd theta;
    double sigma2_y = 1.0;
    double sigma2_eta = 1.0;
    double sigma2_theta = 1.0;
    std::size_t phi_index = 0;
    double phi = 0.0;
    Eigen::VectorXd gamma;
};

/// Data, cached matrices and configuration shared read-only by all chains.
class DyadicModel {
public:
    DyadicModel(const DyadSet& dyads, const DesignMatrix& design, const CovarianceCache* cache, ModelSpec spec,
                PriorConfig priors);

    const DyadSet& dyads() const { return *dyads_; }
    const DesignMatrix& design() const { return *design_; }
    const CovarianceCache* cache() const { return cache_; }
    const ModelSpec& spec() const { return spec_; }
    const PriorConfig& priors() const { return priors_; }
    const Eigen::MatrixXd& basis() const { return basis_; }
    const Eigen::MatrixXd& constraint_matrix() const { return c_; }

    bool spatial() const { return spec_.spatial_effects; }
    bool node_effects() const { return spec_.node_effects; }
    bool constrained() const { return spec_.spatial_effects && spec_.constraint && c_.cols() > 0; }
    std::size_t p() const { return std::size_t(design_->x.cols()); }
    std::size_t m() const { return dyads_->location_count(); }
    std::size_t n() const { return dyads_->node_count; }
    std::size_t q() const { return spec_.weights.size(); }

    ParamState initial_state() const;

private:
    const DyadSet* dyads_;
    const DesignMatrix* design_;
    const CovarianceCache* cache_;
    ModelSpec spec_;
    PriorConfig priors_;
    Eigen::MatrixXd basis_;
    Eigen::MatrixXd c_;
};

/// Normal full conditional N(mean, precision^{-1}) held through its Cholesky factor.
struct GaussianConditional {
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> precision;

    Eigen::MatrixXd covariance() const;
    /// covariance * rhs
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    Eigen::VectorXd draw(Rng& rng) const;
};

/// C = (K'K)^+ K'X~. The pseudo-inverse handles the constant null space of K'K;
/// a warning is emitted if K'K loses further rank.
Eigen::MatrixXd kriging_constraint_matrix(const DyadSet& dyads, const DesignMatrix& design);

/// beta | rest with A = X'WX/sigma2_y + I/v, b = X'W(y - K eta* - M theta)/sigma2_y.
GaussianConditional beta_conditional(const DyadicModel& model, const ParamState& state, const Eigen::VectorXd& w,
                                     const kernels::KernelTable& kt);

/// eta | rest with A = K'WK/sigma2_y + R(phi)^{-1}/sigma2_eta, b = K'W(y - X beta - M theta)/sigma2_y.
GaussianConditional eta_conditional(const DyadicModel& model, const ParamState& state, const Eigen::VectorXd& w,
                                    const kernels::KernelTable& kt);

/// theta | rest with A = M'WM/sigma2_y + I/sigma2_theta, b = M'W(y - X beta - K eta*)/sigma2_y.
GaussianConditional theta_conditional(const DyadicModel& model, const ParamState& state, const Eigen::VectorXd& w,
                                      const kernels::KernelTable& kt);

/// eta* = eta - S C (C' S C)^{-1} C' eta where `sigma_c` = S C for the eta full-conditional covariance S.
/// Falls back to a pseudo-inverse (and sets *rank_deficient) when C'SC is singular.
Eigen::VectorXd apply_kriging_constraint(const Eigen::VectorXd& eta, const Eigen::MatrixXd& sigma_c,
                                         const Eigen::MatrixXd& c, bool* rank_deficient = nullptr);

/// (C'C)^{-1} C' S C (C'C)^{-1}
Eigen::MatrixXd beta_adjustment_covariance(const Eigen::MatrixXd& sigma_c, const Eigen::MatrixXd& c);

/// beta* ~ N(beta, beta_adjustment_covariance(sigma_c, c)).
Eigen::VectorXd adjust_beta(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma_c, const Eigen::MatrixXd& c,
                            Rng& rng);

struct VarianceConditionals {
    InverseGammaPrior sigma2_y;
    InverseGammaPrior sigma2_eta;
    InverseGammaPrior sigma2_theta;
};

/// Inverse-gamma full conditionals given per-dyad residuals y - mu and weights.
VarianceConditionals variance_conditionals(const DyadicModel& model, const ParamState& state,
                                           const Eigen::VectorXd& resid, const Eigen::VectorXd& w,
                                           const kernels::KernelTable& kt);

/// Normalized probabilities over the phi support given eta* and sigma2_eta.
Eigen::VectorXd phi_probabilities(const DyadicModel& model, const ParamState& state);

/// Inverse-CDF draw from normalized probabilities; never returns a zero-mass index.
std::size_t draw_index(const Eigen::VectorXd& probs, Rng& rng);

/// sum of weighted log densities + sum of log gamma priors over free coordinates.
double gamma_log_target(const DyadicModel& model, const Eigen::VectorXd& resid, double sigma2_y,
                        const Eigen::VectorXd& gamma, const kernels::KernelTable& kt);

/// Metropolis-Hastings log ratio for a truncated-normal random-walk move `from` -> `to`
/// with per-coordinate proposal scales; includes the truncation normalizers.
double gamma_log_acceptance(const DyadicModel& model, const Eigen::VectorXd& resid, double sigma2_y,
                            const Eigen::VectorXd& from, const Eigen::VectorXd& to,
                            const Eigen::VectorXd& scales, const kernels::KernelTable& kt);

/// Draws from N(current, scale^2) restricted to (0, inf), coordinate-wise on free entries.
Eigen::VectorXd propose_gamma(const WeightSpec& spec, const Eigen::VectorXd& current, const Eigen::VectorXd& scales,
                              Rng& rng);

struct Draw {
    std::size_t chain = 0;
    std::size_t iteration = 0;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_star;
    Eigen::VectorXd eta_star;
    Eigen::VectorXd theta;
    Eigen::VectorXd gamma;
    double sigma2_y = 0.0;
    double sigma2_eta = 0.0;
    double sigma2_theta = 0.0;
    double phi = 0.0;
    std::size_t phi_index = 0;
    double constraint_residual = 0.0;  // max |C' eta*|
};

struct ChainResult {
    std::size_t chain = 0;
    std::vector<Draw> draws;
    std::size_t sweeps = 0;
    double burn_in_acceptance = 0.0;
    double acceptance = 0.0;  // post burn-in gamma acceptance rate
    double proposal_scale = 0.0;
    double seconds = 0.0;
    std::size_t constraint_fallbacks = 0;
    Eigen::VectorXd fitted_mean;  // per-dyad posterior mean of mu (store_fitted)
    std::optional<std::string> failure;
    std::string failure_module;
};

struct PosteriorDraws {
    std::vector<ChainResult> chains;
    std::vector<std::string> beta_names;
    double seconds = 0.0;
    std::size_t sweeps = 0;

    std::size_t draw_count() const;
    std::vector<const Draw*> all() const;
    double sweeps_per_second() const { return seconds > 0.0 ? double(sweeps) / seconds : 0.0; }
    bool failed() const;
};

/// One chain: sweeps eta -> constraint -> beta -> beta* -> theta -> variances -> phi -> gamma.
/// Exceptions are caught and recorded in `failure` together with the draws so far.
ChainResult run_chain(const DyadicModel& model, const SamplerConfig& config, std::size_t chain_index);

/// Runs config.chains chains on config.threads workers.
PosteriorDraws run_chains(const DyadicModel& model, const SamplerConfig& config);

/// Single-sweep access for tests and instrumentation.
class GibbsChain {
public:
    GibbsChain(const DyadicModel& model, const SamplerConfig& config, std::size_t chain_index);

    void sweep(bool adapt);
    const ParamState& state() const { return state_; }
    ParamState& state() { return state_; }
    const Eigen::VectorXd& weights() const { return w_; }
    double constraint_residual() const;
    /// Mean proposal sd over the free gamma coordinates.
    double proposal_scale() const;
    std::size_t accepted() const { return accepted_; }
    std::size_t proposals() const { return proposals_; }
    std::size_t constraint_fallbacks() const { return constraint_fallbacks_; }
    void reset_counters() { accepted_ = proposals_ = 0; }
    Rng& rng() { return rng_; }

private:
    void refresh_weights();
    void update_eta_block();
    void update_beta_block();
    void update_theta_block();
    void update_variance_block();
    void update_phi_block();
    void update_gamma_block(bool adapt);
    void compute_residuals(bool with_fixed, bool with_eta, bool with_theta, Eigen::VectorXd& out);

    const DyadicModel& model_;
    const SamplerConfig& config_;
    const kernels::KernelTable& kt_;
    Rng rng_;
    ParamState state_;
    Eigen::VectorXd s_, w_, s_prop_, w_prop_, resid_, fixed_;
    Eigen::MatrixXd sigma_c_;
    Eigen::VectorXd base_scales_;  // per-coordinate shape of the proposal
    Eigen::VectorXd gamma_mean_, gamma_m2_;  // running burn-in moments of gamma
    std::size_t gamma_seen_ = 0;
    double log_scale_ = 0.0;
    std::size_t window_accepts_ = 0;
    std::size_t window_count_ = 0;
    std::size_t windows_ = 0;
    std::size_t accepted_ = 0;
    std::size_t proposals_ = 0;
    std::size_t constraint_fallbacks_ = 0;
};

}  // namespace codyad
