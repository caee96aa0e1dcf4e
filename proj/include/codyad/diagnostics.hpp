#pragma once

#include "codyad/sampler.hpp"

#include <string>
#include <vector>

namespace codyad {

/// Retained draws of one scalar parameter, one vector per chain.
using ChainSeries = std::vector<std::vector<double>>;

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q50 = 0.0;
    double q975 = 0.0;
    double rhat = 0.0;
    double ess = 0.0;
};

/// Split-chain potential scale reduction. Each chain is halved; NaN with fewer than 4 draws
/// per chain. Constant series give 1.
double split_rhat(const ChainSeries& chains);

/// Multi-chain effective sample size with Geyer's initial positive sequence truncation.
double effective_sample_size(const ChainSeries& chains);

ParameterSummary summarize(std::string name, const ChainSeries& chains);

/// Summaries of beta*, the variances, phi, gamma, eta* and theta across all chains.
std::vector<ParameterSummary> chain_summary(const PosteriorDraws& draws, bool spatial, bool node_effects);

/// `parameter,mean,sd,q2.5,q50,q97.5,rhat,ess`
void write_summary_csv(const std::vector<ParameterSummary>& rows, const std::string& path);

}  // namespace codyad
