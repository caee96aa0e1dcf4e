#pragma once

#include "codyad/network.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace codyad {

namespace kernels {
struct KernelTable;
}

/// One basis function nu_p over the scaled lags: lag^exponent (exponent 1 is the identity).
struct BasisFunction {
    enum class Lag { Time, Space };
    Lag lag = Lag::Time;
    double exponent = 1.0;

    double operator()(double dt_scaled, double ds_scaled) const;
};

/// Composite weights w = exp(-sum_p gamma_p nu_p(d)). `fixed[p]` pins gamma_p to 0.
struct WeightSpec {
    std::vector<BasisFunction> bases;
    std::vector<bool> fixed;

    std::size_t size() const { return bases.size(); }
    std::size_t free_count() const;
    bool is_fixed(std::size_t p) const { return p < fixed.size() && fixed[p]; }

    /// Throws DomainError on nonpositive exponents or a mask of the wrong length.
    void validate() const;

    static WeightSpec unweighted() { return {}; }
    /// The identity-basis (dt, ds) specification with optional masks.
    static WeightSpec time_space(bool time_free, bool space_free);
    /// dt^(p/3) for p = 1..count.
    static WeightSpec time_powers(std::size_t count);
};

/// gamma is valid when free entries are > 0 and fixed entries are exactly 0.
bool gamma_valid(const WeightSpec& spec, std::span<const double> gamma);

double composite_weight(double dt_scaled, double ds_scaled, const WeightSpec& spec, std::span<const double> gamma);

/// Column-major N x q matrix of basis values per dyad.
Eigen::MatrixXd basis_matrix(const DyadSet& dyads, const WeightSpec& spec);

/// Log density of the normalized weighted Gaussian: Normal(mu, sigma2 / w) at y.
double log_density(double y, double mu, double sigma2, double w);

/// Parameters entering the dyad mean and weights.
struct MeanParams {
    Eigen::VectorXd beta;
    Eigen::VectorXd eta;    // per location; empty means zero
    Eigen::VectorXd theta;  // per node; empty means zero
    double sigma2_y = 1.0;
    Eigen::VectorXd gamma;
};

/// mu_r = x~_r'beta + eta_loc(j) - eta_loc(i) + theta_i + theta_j.
Eigen::VectorXd dyad_means(const DyadSet& dyads, const DesignMatrix& design, const MeanParams& params);

/// Per-dyad log densities.
Eigen::VectorXd log_likelihood_terms(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                                     const MeanParams& params);

/// Sum of per-dyad log densities, compensated, in dyad order.
double total_log_likelihood(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                            const MeanParams& params, const kernels::KernelTable& kt);
double total_log_likelihood(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                            const MeanParams& params);

}  // namespace codyad
