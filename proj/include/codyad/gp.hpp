#pragma once

#include "codyad/domain.hpp"
#include "codyad/random.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace codyad {

/// Discrete support for the spatial range. A value of 0 is the independence limit R = I.
struct PhiSupport {
    std::vector<double> values;

    /// {0, step, 2 step, ...} up to max_ds * fraction (inclusive when it lands on the grid).
    static PhiSupport from_rule(double max_ds, double step, double fraction = 1.0 / 3.0);

    /// Throws DomainError unless nonempty, strictly ascending and nonnegative.
    void validate() const;
    std::size_t median_index() const { return (values.size() - 1) / 2; }
};

struct JitterPolicy {
    double initial = 1e-8;
    double factor = 10.0;
    double max = 1e-4;
};

/// R(phi), its Cholesky factor, inverse and log determinant.
struct CovarianceEntry {
    double phi = 0.0;
    Eigen::MatrixXd correlation;
    Eigen::MatrixXd lower;    // R + jitter I = L L'
    Eigen::MatrixXd inverse;  // (R + jitter I)^{-1}
    double log_det = 0.0;
    double jitter = 0.0;      // diagonal jitter actually added (0 when none was needed)

    /// Solves L x = v.
    Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;
    /// v' R^{-1} v via the factor.
    double quadratic_form(const Eigen::VectorXd& v) const;
};

struct JitterEvent {
    double phi;
    double jitter;
};

/// Correlation matrices for every phi in the support over fixed locations.
class CovarianceCache {
public:
    CovarianceCache() = default;
    CovarianceCache(std::vector<Location> locations, CoordinateMode mode, PhiSupport support,
                    JitterPolicy jitter = {});

    std::size_t size() const { return entries_.size(); }
    std::size_t location_count() const { return locations_.size(); }
    const CovarianceEntry& entry(std::size_t k) const { return entries_[k]; }
    const PhiSupport& support() const { return support_; }
    const std::vector<Location>& locations() const { return locations_; }
    CoordinateMode mode() const { return mode_; }
    const Eigen::MatrixXd& distances() const { return distances_; }
    std::vector<JitterEvent> jitter_events() const;

private:
    std::vector<Location> locations_;
    CoordinateMode mode_ = CoordinateMode::Planar;
    PhiSupport support_;
    Eigen::MatrixXd distances_;
    std::vector<CovarianceEntry> entries_;
};

/// R(phi) filled directly from pairwise distances.
Eigen::MatrixXd exponential_correlation(const Eigen::MatrixXd& distances, double phi);

/// Factorizes R(phi), escalating diagonal jitter on failure. Throws NumericalError.
CovarianceEntry factorize_correlation(double phi, Eigen::MatrixXd correlation, const JitterPolicy& jitter);

/// sigma_eta * L z with z standard normal.
Eigen::VectorXd gp_simulate(const CovarianceEntry& entry, double sigma2_eta, Rng& rng);

/// Kriging weights alpha = R(phi)^{-1} eta, reused across prediction sites.
Eigen::VectorXd kriging_weights(const CovarianceEntry& entry, const Eigen::VectorXd& eta);

/// Conditional mean of eta(s) given eta at the cached locations under R(phi).
/// Returns eta_k exactly when s coincides with location k.
double krige_predict(const Location& s, const Eigen::VectorXd& eta, const CovarianceCache& cache, std::size_t phi_index);

}  // namespace codyad
