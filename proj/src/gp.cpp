#include "codyad/gp.hpp"

#include "codyad/errors.hpp"
#include "codyad/kernels/kernels.hpp"
#include "codyad/log.hpp"
#include "codyad/parallel.hpp"

#include <cmath>
#include <sstream>

namespace codyad {
namespace {

constexpr const char* kModule = "gp-prior";
constexpr double kMinPivot = 1e-12;

}  // namespace

PhiSupport PhiSupport::from_rule(double max_ds, double step, double fraction) {
    if (!(step > 0.0)) throw DomainError(kModule, "phi increment must be positive");
    if (!(fraction > 0.0)) throw DomainError(kModule, "phi range fraction must be positive");
    if (!(max_ds >= 0.0)) throw DomainError(kModule, "maximum distance must be nonnegative");
    PhiSupport s;
    const double upper = max_ds * fraction;
    for (std::size_t k = 0;; ++k) {
        const double v = static_cast<double>(k) * step;
        if (v > upper * (1.0 + 1e-12)) break;
        s.values.push_back(v);
    }
    return s;
}

void PhiSupport::validate() const {
    if (values.empty()) throw DomainError(kModule, "phi support is empty");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] >= 0.0)) throw DomainError(kModule, "phi support values must be nonnegative");
        if (k > 0 && !(values[k] > values[k - 1]))
            throw DomainError(kModule, "phi support must be strictly ascending");
    }
}

Eigen::VectorXd CovarianceEntry::whiten(const Eigen::VectorXd& v) const {
    return lower.triangularView<Eigen::Lower>().solve(v);
}

double CovarianceEntry::quadratic_form(const Eigen::VectorXd& v) const { return whiten(v).squaredNorm(); }

Eigen::MatrixXd exponential_correlation(const Eigen::MatrixXd& distances, double phi) {
    const auto m = distances.rows();
    if (phi == 0.0) return Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd r(m, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        kernels::scalar_kernels().exp_neg_scaled(distances.col(c).data(), std::size_t(m), 1.0 / phi, r.col(c).data());
    }
    return r;
}

CovarianceEntry factorize_correlation(double phi, Eigen::MatrixXd correlation, const JitterPolicy& jitter) {
    CovarianceEntry e;
    e.phi = phi;
    const auto m = correlation.rows();
    double added = 0.0;
    for (;;) {
        Eigen::MatrixXd a = correlation;
        if (added > 0.0) a.diagonal().array() += added;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        bool ok = llt.info() == Eigen::Success;
        if (ok) {
            const Eigen::MatrixXd l = llt.matrixL();
            // A unit-diagonal correlation with a pivot this small is singular to working precision
            // (e.g. duplicated sites); treat it as a failed factorization and add jitter.
            ok = (l.diagonal().array().square() > kMinPivot).all() && l.allFinite();
            if (ok) {
                e.lower = l;
                e.inverse = llt.solve(Eigen::MatrixXd::Identity(m, m));
                e.log_det = 2.0 * l.diagonal().array().log().sum();
                e.jitter = added;
                e.correlation = std::move(correlation);
                return e;
            }
        }
        added = added == 0.0 ? jitter.initial : added * jitter.factor;
        if (added > jitter.max * (1.0 + 1e-9)) {
            std::ostringstream os;
            os << "R(phi) factorization failed for phi = " << phi << " after jitter up to " << jitter.max;
            throw NumericalError(kModule, os.str());
        }
    }
}

CovarianceCache::CovarianceCache(std::vector<Location> locations, CoordinateMode mode, PhiSupport support,
                                 JitterPolicy jitter)
    : locations_(std::move(locations)), mode_(mode), support_(std::move(support)) {
    support_.validate();
    const auto m = Eigen::Index(locations_.size());
    distances_.resize(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        distances_(a, a) = 0.0;
        for (Eigen::Index b = a + 1; b < m; ++b) {
            const double d = distance(locations_[std::size_t(a)], locations_[std::size_t(b)], mode_);
            distances_(a, b) = d;
            distances_(b, a) = d;
        }
    }
    entries_.resize(support_.values.size());
    parallel_for(entries_.size(), 0, [&](std::size_t k) {
        const double phi = support_.values[k];
        entries_[k] = factorize_correlation(phi, exponential_correlation(distances_, phi), jitter);
    });
    for (const auto& ev : jitter_events()) {
        std::ostringstream os;
        os << "R(phi = " << ev.phi << ") needed diagonal jitter " << ev.jitter;
        warn(os.str());
    }
}

std::vector<JitterEvent> CovarianceCache::jitter_events() const {
    std::vector<JitterEvent> out;
    for (const auto& e : entries_)
        if (e.jitter > 0.0) out.push_back({e.phi, e.jitter});
    return out;
}

Eigen::VectorXd gp_simulate(const CovarianceEntry& entry, double sigma2_eta, Rng& rng) {
    const auto m = entry.lower.rows();
    if (sigma2_eta == 0.0) return Eigen::VectorXd::Zero(m);
    if (!(sigma2_eta > 0.0)) throw DomainError(kModule, "sigma2_eta must be nonnegative");
    Eigen::VectorXd z(m);
    for (Eigen::Index k = 0; k < m; ++k) z[k] = rng.normal();
    const Eigen::VectorXd lz = entry.lower.triangularView<Eigen::Lower>() * z;
    return std::sqrt(sigma2_eta) * lz;
}

Eigen::VectorXd kriging_weights(const CovarianceEntry& entry, const Eigen::VectorXd& eta) {
    const Eigen::VectorXd half = entry.whiten(eta);
    return entry.lower.transpose().triangularView<Eigen::Upper>().solve(half);
}

double krige_predict(const Location& s, const Eigen::VectorXd& eta, const CovarianceCache& cache, std::size_t phi_index) {
    const auto m = Eigen::Index(cache.location_count());
    if (eta.size() != m) throw DomainError(kModule, "eta length must match the cached locations");
    Eigen::VectorXd d(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        d[k] = distance(s, cache.locations()[std::size_t(k)], cache.mode());
        if (d[k] == 0.0) return eta[k];
    }
    const CovarianceEntry& e = cache.entry(phi_index);
    if (e.phi == 0.0) return 0.0;
    Eigen::VectorXd r(m);
    kernels::scalar_kernels().exp_neg_scaled(d.data(), std::size_t(m), 1.0 / e.phi, r.data());
    return r.dot(kriging_weights(e, eta));
}

}  // namespace codyad
