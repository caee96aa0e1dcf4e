#include "codyad/likelihood.hpp"

#include "codyad/errors.hpp"
#include "codyad/kernels/kernels.hpp"

#include <cmath>
#include <numbers>

namespace codyad {
namespace {

constexpr const char* kModule = "composite-likelihood";

}  // namespace

double BasisFunction::operator()(double dt_scaled, double ds_scaled) const {
    const double d = lag == Lag::Time ? dt_scaled : ds_scaled;
    if (d < 0.0) throw DomainError(kModule, "lags must be nonnegative");
    return exponent == 1.0 ? d : std::pow(d, exponent);
}

std::size_t WeightSpec::free_count() const {
    std::size_t k = 0;
    for (std::size_t p = 0; p < bases.size(); ++p) k += is_fixed(p) ? 0 : 1;
    return k;
}

void WeightSpec::validate() const {
    if (!fixed.empty() && fixed.size() != bases.size())
        throw DomainError(kModule, "weight mask length must match the number of bases");
    for (const auto& b : bases)
        if (!(b.exponent > 0.0)) throw DomainError(kModule, "basis exponents must be positive");
}

WeightSpec WeightSpec::time_space(bool time_free, bool space_free) {
    WeightSpec spec;
    spec.bases = {{BasisFunction::Lag::Time, 1.0}, {BasisFunction::Lag::Space, 1.0}};
    spec.fixed = {!time_free, !space_free};
    return spec;
}

WeightSpec WeightSpec::time_powers(std::size_t count) {
    WeightSpec spec;
    for (std::size_t p = 1; p <= count; ++p)
        spec.bases.push_back({BasisFunction::Lag::Time, static_cast<double>(p) / 3.0});
    spec.fixed.assign(count, false);
    return spec;
}

bool gamma_valid(const WeightSpec& spec, std::span<const double> gamma) {
    if (gamma.size() != spec.size()) return false;
    for (std::size_t p = 0; p < gamma.size(); ++p) {
        if (spec.is_fixed(p) ? gamma[p] != 0.0 : !(gamma[p] > 0.0 && std::isfinite(gamma[p]))) return false;
    }
    return true;
}

double composite_weight(double dt_scaled, double ds_scaled, const WeightSpec& spec, std::span<const double> gamma) {
    if (dt_scaled < 0.0 || ds_scaled < 0.0) throw DomainError(kModule, "lags must be nonnegative");
    if (gamma.size() != spec.size()) throw DomainError(kModule, "gamma length must match the number of bases");
    double s = 0.0;
    for (std::size_t p = 0; p < spec.size(); ++p) s += gamma[p] * spec.bases[p](dt_scaled, ds_scaled);
    return std::exp(-s);
}

Eigen::MatrixXd basis_matrix(const DyadSet& dyads, const WeightSpec& spec) {
    const auto n = Eigen::Index(dyads.size());
    Eigen::MatrixXd b(n, Eigen::Index(spec.size()));
    for (std::size_t p = 0; p < spec.size(); ++p)
        for (Eigen::Index r = 0; r < n; ++r) b(r, Eigen::Index(p)) = spec.bases[p](dyads.dt_scaled[r], dyads.ds_scaled[r]);
    return b;
}

double log_density(double y, double mu, double sigma2, double w) {
    if (!(sigma2 > 0.0)) throw DomainError(kModule, "variance must be positive");
    if (!(w > 0.0)) throw DomainError(kModule, "composite weight must be positive");
    const double r = y - mu;
    return -0.5 * std::log(2.0 * std::numbers::pi * sigma2) + 0.5 * std::log(w) - 0.5 * w * r * r / sigma2;
}

Eigen::VectorXd dyad_means(const DyadSet& dyads, const DesignMatrix& design, const MeanParams& params) {
    if (params.beta.size() != design.x.cols()) throw DomainError(kModule, "beta length must match the design");
    Eigen::VectorXd mu = design.x * params.beta;
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        const auto e = Eigen::Index(r);
        if (params.eta.size()) mu[e] += params.eta[dyads.loc_j[r]] - params.eta[dyads.loc_i[r]];
        if (params.theta.size()) mu[e] += params.theta[dyads.node_i[r]] + params.theta[dyads.node_j[r]];
    }
    return mu;
}

Eigen::VectorXd log_likelihood_terms(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                                     const MeanParams& params) {
    const Eigen::VectorXd mu = dyad_means(dyads, design, params);
    const std::span<const double> g(params.gamma.data(), std::size_t(params.gamma.size()));
    Eigen::VectorXd out(mu.size());
    for (Eigen::Index r = 0; r < mu.size(); ++r)
        out[r] = log_density(dyads.y[r], mu[r], params.sigma2_y,
                             composite_weight(dyads.dt_scaled[r], dyads.ds_scaled[r], spec, g));
    return out;
}

double total_log_likelihood(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                            const MeanParams& params, const kernels::KernelTable& kt) {
    if (!(params.sigma2_y > 0.0)) throw DomainError(kModule, "variance must be positive");
    if (std::size_t(params.gamma.size()) != spec.size())
        throw DomainError(kModule, "gamma length must match the number of bases");
    const std::size_t n = dyads.size();
    const Eigen::MatrixXd basis = basis_matrix(dyads, spec);
    const Eigen::VectorXd mu = dyad_means(dyads, design, params);
    const Eigen::VectorXd resid = dyads.y - mu;
    Eigen::VectorXd s{Eigen::Index(n)}, w{Eigen::Index(n)};
    kt.composite_weights(basis.data(), n, spec.size(), params.gamma.data(), s.data(), w.data());
    return kt.weighted_gaussian_loglik(resid.data(), s.data(), w.data(), n, params.sigma2_y);
}

double total_log_likelihood(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                            const MeanParams& params) {
    return total_log_likelihood(dyads, design, spec, params, kernels::scalar_kernels());
}

}  // namespace codyad
