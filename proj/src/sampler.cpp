#include "codyad/sampler.hpp"

#include "codyad/errors.hpp"
#include "codyad/kernels/kernels.hpp"
#include "codyad/log.hpp"
#include "codyad/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace codyad {
namespace {

constexpr const char* kModule = "mcmc-sampler";
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_normal_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

kernels::ResidualArgs residual_args(const DyadicModel& model, const ParamState& state, const double* fixed,
                                    bool with_eta, bool with_theta) {
    const DyadSet& d = model.dyads();
    kernels::ResidualArgs a;
    a.y = d.y.data();
    a.fixed = fixed;
    if (with_eta && model.spatial()) {
        a.eta = state.eta_star.data();
        a.loc_i = d.loc_i.data();
        a.loc_j = d.loc_j.data();
    }
    if (with_theta && model.node_effects()) {
        a.theta = state.theta.data();
        a.node_i = d.node_i.data();
        a.node_j = d.node_j.data();
    }
    return a;
}

Eigen::VectorXd residuals(const DyadicModel& model, const ParamState& state, bool with_fixed, bool with_eta,
                          bool with_theta, const kernels::KernelTable& kt) {
    const std::size_t n = model.dyads().size();
    Eigen::VectorXd fixed;
    if (with_fixed && model.p() > 0) fixed = model.design().x * state.beta;
    Eigen::VectorXd out{Eigen::Index(n)};
    kt.residuals(residual_args(model, state, fixed.size() ? fixed.data() : nullptr, with_eta, with_theta), n,
                 out.data());
    return out;
}

GaussianConditional finish_conditional(Eigen::MatrixXd precision, const Eigen::VectorXd& b, const char* what) {
    GaussianConditional cond;
    cond.precision.compute(precision);
    if (cond.precision.info() != Eigen::Success)
        throw NumericalError(kModule, std::string(what) + " full-conditional precision is not positive definite");
    cond.mean = cond.precision.solve(b);
    return cond;
}

/// Eigen-decomposition based symmetric pseudo-inverse. Returns the numerical rank.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a, Eigen::Index* rank, double rel_tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    const Eigen::VectorXd& lambda = es.eigenvalues();
    const double cutoff = rel_tol * std::max(lambda.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        if (lambda[k] > cutoff) {
            inv[k] = 1.0 / lambda[k];
            ++r;
        }
    }
    if (rank) *rank = r;
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double GammaPrior::log_density(double x) const {
    if (x < 0.0 || !std::isfinite(x)) return -kInf;
    if (x == 0.0) {
        if (shape > 1.0) return -kInf;
        if (shape == 1.0) return std::log(rate);
        return kInf;
    }
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double GammaPrior::sd() const { return std::sqrt(shape) / rate; }

std::vector<std::string> PriorConfig::issues() const {
    std::vector<std::string> out;
    auto check = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be positive");
    };
    check(beta_variance, "priors.beta_variance");
    check(sigma2_y.shape, "priors.sigma2_y.shape");
    check(sigma2_y.scale, "priors.sigma2_y.scale");
    check(sigma2_eta.shape, "priors.sigma2_eta.shape");
    check(sigma2_eta.scale, "priors.sigma2_eta.scale");
    check(sigma2_theta.shape, "priors.sigma2_theta.shape");
    check(sigma2_theta.scale, "priors.sigma2_theta.scale");
    check(phi.shape, "priors.phi.shape");
    check(phi.rate, "priors.phi.rate");
    check(gamma.shape, "priors.gamma.shape");
    check(gamma.rate, "priors.gamma.rate");
    return out;
}

std::vector<std::string> SamplerConfig::issues() const {
    std::vector<std::string> out;
    if (iterations == 0) out.push_back("sampler.iterations must be positive");
    if (effective_burn_in() >= iterations) out.push_back("sampler.burn_in must be smaller than sampler.iterations");
    if (thin == 0) out.push_back("sampler.thin must be at least 1");
    if (chains == 0) out.push_back("sampler.chains must be at least 1");
    if (adapt_window == 0) out.push_back("sampler.adapt_window must be at least 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) out.push_back("sampler.target_accept must lie in (0, 1)");
    if (!(gamma_proposal_scale > 0.0)) out.push_back("sampler.gamma_proposal_scale must be positive");
    return out;
}

// ---------------------------------------------------------------------------
// Model

Eigen::MatrixXd kriging_constraint_matrix(const DyadSet& dyads, const DesignMatrix& design) {
    const auto m = Eigen::Index(dyads.location_count());
    Eigen::MatrixXd ktk = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        const auto a = dyads.loc_i[r];
        const auto b = dyads.loc_j[r];
        if (a == b) continue;
        ktk(a, a) += 1.0;
        ktk(b, b) += 1.0;
        ktk(a, b) -= 1.0;
        ktk(b, a) -= 1.0;
    }
    Eigen::Index rank = 0;
    const Eigen::MatrixXd pinv = symmetric_pinv(ktk, &rank, 1e-10);
    if (m > 1 && rank < m - 1) {
        std::ostringstream os;
        os << "K'K has rank " << rank << " (< m - 1 = " << m - 1
           << "); the constraint matrix uses a pseudo-inverse over the disconnected locations";
        warn(os.str());
    }
    return pinv * eta_incidence_transpose(dyads, design.x);
}

DyadicModel::DyadicModel(const DyadSet& dyads, const DesignMatrix& design, const CovarianceCache* cache,
                         ModelSpec spec, PriorConfig priors)
    : dyads_(&dyads), design_(&design), cache_(cache), spec_(std::move(spec)), priors_(priors) {
    spec_.weights.validate();
    if (design.x.rows() != Eigen::Index(dyads.size()))
        throw DomainError(kModule, "design rows must match the dyad count");
    if (spec_.spatial_effects) {
        if (!cache_) throw DomainError(kModule, "spatial effects require a covariance cache");
        if (cache_->location_count() != dyads.location_count())
            throw DomainError(kModule, "covariance cache locations do not match the dyad set");
    }
    if (auto issues = priors_.issues(); !issues.empty()) throw DomainError(kModule, issues.front());
    basis_ = basis_matrix(dyads, spec_.weights);
    if (spec_.spatial_effects && spec_.constraint && design.x.cols() > 0) {
        c_ = kriging_constraint_matrix(dyads, design);
        if (c_.cwiseAbs().maxCoeff() == 0.0) c_.resize(0, 0);
    }
}

ParamState DyadicModel::initial_state() const {
    ParamState s;
    s.beta = Eigen::VectorXd::Zero(Eigen::Index(p()));
    s.beta_star = s.beta;
    if (spatial()) {
        s.eta = Eigen::VectorXd::Zero(Eigen::Index(m()));
        s.eta_star = s.eta;
        s.phi_index = cache_->support().median_index();
        s.phi = cache_->support().values[s.phi_index];
    }
    if (node_effects()) s.theta = Eigen::VectorXd::Zero(Eigen::Index(n()));
    s.gamma = Eigen::VectorXd::Zero(Eigen::Index(q()));
    for (std::size_t k = 0; k < q(); ++k)
        if (!spec_.weights.is_fixed(k)) s.gamma[Eigen::Index(k)] = priors_.gamma.mean();
    return s;
}

// ---------------------------------------------------------------------------
// Full conditionals

Eigen::MatrixXd GaussianConditional::covariance() const {
    return precision.solve(Eigen::MatrixXd::Identity(mean.size(), mean.size()));
}

Eigen::MatrixXd GaussianConditional::solve(const Eigen::MatrixXd& rhs) const { return precision.solve(rhs); }

Eigen::VectorXd GaussianConditional::draw(Rng& rng) const {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    return mean + precision.matrixU().solve(z);
}

GaussianConditional beta_conditional(const DyadicModel& model, const ParamState& state, const Eigen::VectorXd& w,
                                     const kernels::KernelTable& kt) {
    const Eigen::VectorXd r = residuals(model, state, false, true, true, kt);
    const auto& x = model.design().x;
    const auto p = x.cols();
    const std::size_t n = model.dyads().size();
    const double inv_s2 = 1.0 / state.sigma2_y;
    Eigen::MatrixXd a(p, p);
    Eigen::VectorXd b(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        for (Eigen::Index d = 0; d <= c; ++d) {
            const double v = kt.weighted_dot(w.data(), x.col(c).data(), x.col(d).data(), n) * inv_s2;
            a(c, d) = v;
            a(d, c) = v;
        }
        a(c, c) += 1.0 / model.priors().beta_variance;
        b[c] = kt.weighted_dot(w.data(), x.col(c).data(), r.data(), n) * inv_s2;
    }
    return finish_conditional(std::move(a), b, "beta");
}

GaussianConditional eta_conditional(const DyadicModel& model, const ParamState& state, const Eigen::VectorXd& w,
                                    const kernels::KernelTable& kt) {
    if (!model.spatial()) throw DomainError(kModule, "eta update requested without spatial effects");
    const DyadSet& d = model.dyads();
    const Eigen::VectorXd r = residuals(model, state, true, false, true, kt);
    const auto m = Eigen::Index(model.m());
    const double inv_s2 = 1.0 / state.sigma2_y;
    Eigen::MatrixXd a = model.cache()->entry(state.phi_index).inverse / state.sigma2_eta;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto li = d.loc_i[k];
        const auto lj = d.loc_j[k];
        const double wk = w[Eigen::Index(k)] * inv_s2;
        const double wr = wk * r[Eigen::Index(k)];
        b[lj] += wr;
        b[li] -= wr;
        if (li == lj) continue;
        a(li, li) += wk;
        a(lj, lj) += wk;
        a(std::max(li, lj), std::min(li, lj)) -= wk;
    }
    a.triangularView<Eigen::StrictlyUpper>() = a.transpose().triangularView<Eigen::StrictlyUpper>();
    return finish_conditional(std::move(a), b, "eta");
}

GaussianConditional theta_conditional(const DyadicModel& model, const ParamState& state, const Eigen::VectorXd& w,
                                      const kernels::KernelTable& kt) {
    if (!model.node_effects()) throw DomainError(kModule, "theta update requested without node effects");
    const DyadSet& d = model.dyads();
    const Eigen::VectorXd r = residuals(model, state, true, true, false, kt);
    const auto n = Eigen::Index(model.n());
    const double inv_s2 = 1.0 / state.sigma2_y;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) / state.sigma2_theta;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto i = d.node_i[k];
        const auto j = d.node_j[k];
        const double wk = w[Eigen::Index(k)] * inv_s2;
        const double wr = wk * r[Eigen::Index(k)];
        b[i] += wr;
        b[j] += wr;
        a(i, i) += wk;
        a(j, j) += wk;
        a(std::max(i, j), std::min(i, j)) += wk;
    }
    a.triangularView<Eigen::StrictlyUpper>() = a.transpose().triangularView<Eigen::StrictlyUpper>();
    return finish_conditional(std::move(a), b, "theta");
}

Eigen::VectorXd apply_kriging_constraint(const Eigen::VectorXd& eta, const Eigen::MatrixXd& sigma_c,
                                         const Eigen::MatrixXd& c, bool* rank_deficient) {
    if (rank_deficient) *rank_deficient = false;
    if (c.cols() == 0) return eta;
    if (c.rows() != eta.size() || sigma_c.rows() != eta.size() || sigma_c.cols() != c.cols())
        throw DomainError(kModule, "constraint dimensions do not conform");
    const Eigen::MatrixXd g = c.transpose() * sigma_c;
    const Eigen::VectorXd ct_eta = c.transpose() * eta;
    Eigen::Index rank = 0;
    const Eigen::MatrixXd g_pinv = symmetric_pinv(g, &rank, 1e-12);
    Eigen::VectorXd coef;
    if (rank == g.rows()) {
        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (g + g.transpose()));
        coef = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(ct_eta)) : Eigen::VectorXd(g_pinv * ct_eta);
    } else {
        if (rank_deficient) *rank_deficient = true;
        coef = g_pinv * ct_eta;
    }
    return eta - sigma_c * coef;
}

Eigen::MatrixXd beta_adjustment_covariance(const Eigen::MatrixXd& sigma_c, const Eigen::MatrixXd& c) {
    const Eigen::MatrixXd ctc = c.transpose() * c;
    Eigen::LLT<Eigen::MatrixXd> llt(ctc);
    if (llt.info() != Eigen::Success) throw NumericalError(kModule, "C'C is singular; beta cannot be adjusted");
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(ctc.rows(), ctc.cols()));
    const Eigen::MatrixXd v = inv * (c.transpose() * sigma_c) * inv;
    return 0.5 * (v + v.transpose());
}

Eigen::VectorXd adjust_beta(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma_c, const Eigen::MatrixXd& c,
                            Rng& rng) {
    if (c.cols() == 0) return beta;
    const Eigen::MatrixXd v = beta_adjustment_covariance(sigma_c, c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    Eigen::VectorXd z(beta.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal() * std::sqrt(std::max(0.0, es.eigenvalues()[k]));
    return beta + es.eigenvectors() * z;
}

VarianceConditionals variance_conditionals(const DyadicModel& model, const ParamState& state,
                                           const Eigen::VectorXd& resid, const Eigen::VectorXd& w,
                                           const kernels::KernelTable& kt) {
    const PriorConfig& pr = model.priors();
    const std::size_t n_dyads = model.dyads().size();
    VarianceConditionals out;
    out.sigma2_y = {pr.sigma2_y.shape + 0.5 * double(n_dyads),
                    pr.sigma2_y.scale + 0.5 * kt.weighted_dot(w.data(), resid.data(), resid.data(), n_dyads)};
    if (model.spatial()) {
        const double quad = model.cache()->entry(state.phi_index).quadratic_form(state.eta_star);
        out.sigma2_eta = {pr.sigma2_eta.shape + 0.5 * double(model.m()), pr.sigma2_eta.scale + 0.5 * quad};
    }
    if (model.node_effects())
        out.sigma2_theta = {pr.sigma2_theta.shape + 0.5 * double(model.n()),
                            pr.sigma2_theta.scale + 0.5 * state.theta.squaredNorm()};
    return out;
}

Eigen::VectorXd phi_probabilities(const DyadicModel& model, const ParamState& state) {
    const CovarianceCache& cache = *model.cache();
    const auto k = Eigen::Index(cache.size());
    const double m = double(model.m());
    Eigen::VectorXd logp(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const CovarianceEntry& e = cache.entry(std::size_t(i));
        const double prior = model.priors().phi.log_density(e.phi);
        if (prior == kInf) throw NumericalError(kModule, "phi prior density is infinite on the support (phi = 0)");
        logp[i] = prior - 0.5 * m * std::log(state.sigma2_eta) - 0.5 * e.log_det -
                  0.5 * e.quadratic_form(state.eta_star) / state.sigma2_eta;
    }
    const double top = logp.maxCoeff();
    if (!std::isfinite(top)) {
        std::ostringstream os;
        os << "all phi masses underflow (log-mass range [" << logp.minCoeff() << ", " << top << "])";
        throw NumericalError(kModule, os.str());
    }
    Eigen::VectorXd p = (logp.array() - top).exp();
    return p / p.sum();
}

std::size_t draw_index(const Eigen::VectorXd& probs, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = std::size_t(probs.size()) - 1;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        cum += probs[k];
        if (u < cum) {
            pick = std::size_t(k);
            break;
        }
    }
    // Never land on a zero-mass entry through rounding in the running sum.
    while (probs[Eigen::Index(pick)] == 0.0 && pick > 0) --pick;
    return pick;
}

namespace {

double log_target_into(const DyadicModel& model, const Eigen::VectorXd& resid, double sigma2_y,
                       const Eigen::VectorXd& gamma, Eigen::VectorXd& s, Eigen::VectorXd& w,
                       const kernels::KernelTable& kt) {
    const WeightSpec& spec = model.spec().weights;
    double prior = 0.0;
    for (std::size_t p = 0; p < spec.size(); ++p) {
        if (spec.is_fixed(p)) continue;
        const double g = gamma[Eigen::Index(p)];
        if (!(g > 0.0)) return -kInf;
        prior += model.priors().gamma.log_density(g);
    }
    const std::size_t n = model.dyads().size();
    kt.composite_weights(model.basis().data(), n, spec.size(), gamma.data(), s.data(), w.data());
    return kt.weighted_gaussian_loglik(resid.data(), s.data(), w.data(), n, sigma2_y) + prior;
}

double truncation_correction(const WeightSpec& spec, const Eigen::VectorXd& from, const Eigen::VectorXd& to,
                             const Eigen::VectorXd& scales) {
    double acc = 0.0;
    for (std::size_t p = 0; p < spec.size(); ++p) {
        if (spec.is_fixed(p)) continue;
        const auto e = Eigen::Index(p);
        acc += log_normal_cdf(from[e] / scales[e]) - log_normal_cdf(to[e] / scales[e]);
    }
    return acc;
}

}  // namespace

double gamma_log_target(const DyadicModel& model, const Eigen::VectorXd& resid, double sigma2_y,
                        const Eigen::VectorXd& gamma, const kernels::KernelTable& kt) {
    const auto n = Eigen::Index(model.dyads().size());
    Eigen::VectorXd s(n), w(n);
    return log_target_into(model, resid, sigma2_y, gamma, s, w, kt);
}

double gamma_log_acceptance(const DyadicModel& model, const Eigen::VectorXd& resid, double sigma2_y,
                            const Eigen::VectorXd& from, const Eigen::VectorXd& to, const Eigen::VectorXd& scales,
                            const kernels::KernelTable& kt) {
    return gamma_log_target(model, resid, sigma2_y, to, kt) - gamma_log_target(model, resid, sigma2_y, from, kt) +
           truncation_correction(model.spec().weights, from, to, scales);
}

Eigen::VectorXd propose_gamma(const WeightSpec& spec, const Eigen::VectorXd& current, const Eigen::VectorXd& scales,
                              Rng& rng) {
    Eigen::VectorXd out = current;
    for (std::size_t p = 0; p < spec.size(); ++p) {
        if (spec.is_fixed(p)) continue;
        const auto e = Eigen::Index(p);
        double v;
        do {
            v = current[e] + scales[e] * rng.normal();
        } while (!(v > 0.0));
        out[e] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chain

GibbsChain::GibbsChain(const DyadicModel& model, const SamplerConfig& config, std::size_t chain_index)
    : model_(model),
      config_(config),
      kt_(kernels::select(config.deterministic_reduction)),
      rng_(config.seed, chain_index),
      state_(model.initial_state()) {
    const auto n = Eigen::Index(model.dyads().size());
    s_.resize(n);
    w_.resize(n);
    s_prop_.resize(n);
    w_prop_.resize(n);
    resid_.resize(n);
    base_scales_ = Eigen::VectorXd::Zero(Eigen::Index(model.q()));
    for (std::size_t p = 0; p < model.q(); ++p)
        if (!model.spec().weights.is_fixed(p)) base_scales_[Eigen::Index(p)] = config.gamma_proposal_scale;
    refresh_weights();
}

void GibbsChain::refresh_weights() {
    kt_.composite_weights(model_.basis().data(), model_.dyads().size(), model_.q(), state_.gamma.data(), s_.data(),
                          w_.data());
}

double GibbsChain::proposal_scale() const {
    const std::size_t free = model_.spec().weights.free_count();
    return free ? base_scales_.sum() / double(free) * std::exp(log_scale_) : 0.0;
}

double GibbsChain::constraint_residual() const {
    if (!model_.constrained()) return 0.0;
    return (model_.constraint_matrix().transpose() * state_.eta_star).cwiseAbs().maxCoeff();
}

void GibbsChain::update_eta_block() {
    const GaussianConditional cond = eta_conditional(model_, state_, w_, kt_);
    state_.eta = cond.draw(rng_);
    if (model_.constrained()) {
        sigma_c_ = cond.solve(model_.constraint_matrix());
        bool deficient = false;
        state_.eta_star = apply_kriging_constraint(state_.eta, sigma_c_, model_.constraint_matrix(), &deficient);
        if (deficient && constraint_fallbacks_++ == 0)
            warn("C' Sigma_eta C is rank deficient; using a pseudo-inverse in the constraint");
    } else {
        state_.eta_star = state_.eta;
    }
}

void GibbsChain::update_beta_block() {
    if (model_.p() == 0) return;
    const GaussianConditional cond = beta_conditional(model_, state_, w_, kt_);
    state_.beta = cond.draw(rng_);
    state_.beta_star =
        model_.constrained() ? adjust_beta(state_.beta, sigma_c_, model_.constraint_matrix(), rng_) : state_.beta;
    if (config_.propagate_beta_star) state_.beta = state_.beta_star;
}

void GibbsChain::update_theta_block() {
    const GaussianConditional cond = theta_conditional(model_, state_, w_, kt_);
    state_.theta = cond.draw(rng_);
}

void GibbsChain::compute_residuals(bool with_fixed, bool with_eta, bool with_theta, Eigen::VectorXd& out) {
    const double* fixed = nullptr;
    if (with_fixed && model_.p() > 0) {
        fixed_.noalias() = model_.design().x * state_.beta;
        fixed = fixed_.data();
    }
    kt_.residuals(residual_args(model_, state_, fixed, with_eta, with_theta), model_.dyads().size(), out.data());
}

void GibbsChain::update_variance_block() {
    compute_residuals(true, true, true, resid_);
    const VarianceConditionals vc = variance_conditionals(model_, state_, resid_, w_, kt_);
    state_.sigma2_y = rng_.inverse_gamma(vc.sigma2_y.shape, vc.sigma2_y.scale);
    if (model_.spatial()) state_.sigma2_eta = rng_.inverse_gamma(vc.sigma2_eta.shape, vc.sigma2_eta.scale);
    if (model_.node_effects())
        state_.sigma2_theta = rng_.inverse_gamma(vc.sigma2_theta.shape, vc.sigma2_theta.scale);
}

void GibbsChain::update_phi_block() {
    state_.phi_index = draw_index(phi_probabilities(model_, state_), rng_);
    state_.phi = model_.cache()->support().values[state_.phi_index];
}

void GibbsChain::update_gamma_block(bool adapt) {
    // resid_ holds y - mu at the current mean parameters (set by the variance block).
    const Eigen::VectorXd scales = base_scales_ * std::exp(log_scale_);
    const Eigen::VectorXd proposal = propose_gamma(model_.spec().weights, state_.gamma, scales, rng_);
    const double current = kt_.weighted_gaussian_loglik(resid_.data(), s_.data(), w_.data(), model_.dyads().size(),
                                                        state_.sigma2_y);
    double current_prior = 0.0;
    for (std::size_t p = 0; p < model_.q(); ++p)
        if (!model_.spec().weights.is_fixed(p))
            current_prior += model_.priors().gamma.log_density(state_.gamma[Eigen::Index(p)]);
    const double proposed = log_target_into(model_, resid_, state_.sigma2_y, proposal, s_prop_, w_prop_, kt_);
    const double log_alpha = proposed - (current + current_prior) +
                             truncation_correction(model_.spec().weights, state_.gamma, proposal, scales);
    const bool accept = std::log(rng_.uniform()) < log_alpha;
    if (accept) {
        state_.gamma = proposal;
        s_.swap(s_prop_);
        w_.swap(w_prop_);
    }
    ++proposals_;
    accepted_ += accept ? 1 : 0;

    if (adapt) {
        // Robbins-Monro on the overall log scale; the diagonal shape follows the running
        // posterior sd of each coordinate once two windows have been seen.
        if (gamma_seen_++ == 0) {
            gamma_mean_ = state_.gamma;
            gamma_m2_ = Eigen::VectorXd::Zero(state_.gamma.size());
        } else {
            const Eigen::VectorXd delta = state_.gamma - gamma_mean_;
            gamma_mean_ += delta / double(gamma_seen_);
            gamma_m2_ += delta.cwiseProduct(state_.gamma - gamma_mean_);
        }
        window_accepts_ += accept ? 1 : 0;
        if (++window_count_ == config_.adapt_window) {
            ++windows_;
            const double rate = double(window_accepts_) / double(window_count_);
            log_scale_ += std::min(1.0, 1.0 / std::sqrt(double(windows_))) * (rate - config_.target_accept);
            window_accepts_ = window_count_ = 0;
            if (windows_ >= 2) {
                for (std::size_t p = 0; p < model_.q(); ++p) {
                    const auto e = Eigen::Index(p);
                    const double sd = std::sqrt(gamma_m2_[e] / double(gamma_seen_ - 1));
                    if (!model_.spec().weights.is_fixed(p) && sd > 0.0) base_scales_[e] = sd;
                }
            }
        }
    }
}

void GibbsChain::sweep(bool adapt) {
    if (model_.spatial()) update_eta_block();
    update_beta_block();
    if (model_.node_effects()) update_theta_block();
    update_variance_block();
    if (model_.spatial()) update_phi_block();
    if (model_.spec().weights.free_count() > 0) update_gamma_block(adapt);
}

ChainResult run_chain(const DyadicModel& model, const SamplerConfig& config, std::size_t chain_index) {
    ChainResult result;
    result.chain = chain_index;
    const auto start = std::chrono::steady_clock::now();
    const std::size_t burn = config.effective_burn_in();
    try {
        GibbsChain chain(model, config, chain_index);
        if (config.store_fitted) result.fitted_mean = Eigen::VectorXd::Zero(Eigen::Index(model.dyads().size()));
        if (burn == 0) chain.reset_counters();
        for (std::size_t it = 1; it <= config.iterations; ++it) {
            chain.sweep(it <= burn);
            result.sweeps = it;
            if (it == burn) {
                result.burn_in_acceptance =
                    chain.proposals() ? double(chain.accepted()) / double(chain.proposals()) : 0.0;
                chain.reset_counters();
            }
            if (it <= burn || (it - burn) % config.thin != 0) continue;
            const ParamState& s = chain.state();
            Draw d;
            d.chain = chain_index;
            d.iteration = it;
            d.beta = s.beta;
            d.beta_star = s.beta_star;
            d.eta_star = s.eta_star;
            d.theta = s.theta;
            d.gamma = s.gamma;
            d.sigma2_y = s.sigma2_y;
            d.sigma2_eta = model.spatial() ? s.sigma2_eta : 0.0;
            d.sigma2_theta = model.node_effects() ? s.sigma2_theta : 0.0;
            d.phi = s.phi;
            d.phi_index = s.phi_index;
            d.constraint_residual = chain.constraint_residual();
            if (config.store_fitted) {
                MeanParams mp{s.beta_star, s.eta_star, s.theta, s.sigma2_y, s.gamma};
                result.fitted_mean += dyad_means(model.dyads(), model.design(), mp);
            }
            result.draws.push_back(std::move(d));
        }
        result.acceptance = chain.proposals() ? double(chain.accepted()) / double(chain.proposals()) : 0.0;
        result.proposal_scale = chain.proposal_scale();
        result.constraint_fallbacks = chain.constraint_fallbacks();
        if (config.store_fitted && !result.draws.empty()) result.fitted_mean /= double(result.draws.size());
    } catch (const Error& e) {
        result.failure = e.what();
        result.failure_module = e.module();
    } catch (const std::exception& e) {
        result.failure = e.what();
        result.failure_module = kModule;
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

PosteriorDraws run_chains(const DyadicModel& model, const SamplerConfig& config) {
    PosteriorDraws out;
    out.beta_names = model.design().names;
    out.chains.resize(config.chains);
    const auto start = std::chrono::steady_clock::now();
    parallel_for(config.chains, config.threads, [&](std::size_t c) { out.chains[c] = run_chain(model, config, c); });
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& c : out.chains) out.sweeps += c.sweeps;
    return out;
}

std::size_t PosteriorDraws::draw_count() const {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.draws.size();
    return n;
}

std::vector<const Draw*> PosteriorDraws::all() const {
    std::vector<const Draw*> out;
    out.reserve(draw_count());
    for (const auto& c : chains)
        for (const auto& d : c.draws) out.push_back(&d);
    return out;
}

bool PosteriorDraws::failed() const {
    return std::any_of(chains.begin(), chains.end(), [](const ChainResult& c) { return c.failure.has_value(); });
}

}  // namespace codyad
