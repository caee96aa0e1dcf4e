#pragma once

#include "codyad/likelihood.hpp"
#include "codyad/network.hpp"
#include "codyad/random.hpp"
#include "codyad/sampler.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace codyad {

/// CRPS of Normal(mu, sigma^2) at y. sigma = 0 gives |y - mu|; sigma < 0 throws DomainError.
double crps_gaussian(double y, double mu, double sigma);

enum class CrpsMode {
    Mixture,  // per-draw predictive Normal(mu^(k), sigma2_y^(k) / w^(k)), averaged over draws
    PlugIn,   // single predictive at the posterior means of mu, sigma2_y and gamma
};

struct ModelScore {
    std::string label;
    double crps = 0.0;
    std::size_t draws_used = 0;
    Eigen::VectorXd per_dyad;
};

/// Mean CRPS over dyads. Means use beta* and eta*.
ModelScore score_model(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                       const std::vector<const Draw*>& draws, std::string label, CrpsMode mode = CrpsMode::Mixture,
                       std::size_t threads = 1);

/// Random split of dyad rows into (fit, held-out) with `fraction` held out.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t dyad_count, double fraction,
                                                                           Rng& rng);

/// `model,crps,draws_used`
void write_scores_csv(const std::vector<ModelScore>& scores, const std::string& path);

}  // namespace codyad
