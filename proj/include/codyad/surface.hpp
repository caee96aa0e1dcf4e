#pragma once

#include "codyad/gp.hpp"
#include "codyad/network.hpp"
#include "codyad/sampler.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace codyad {

/// Prediction sites with their covariates. A cell is masked when any covariate is missing.
struct SurfaceGrid {
    std::vector<Location> points;
    Eigen::MatrixXd covariates;  // cells x p, columns in design order
    std::vector<bool> masked;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    std::size_t size() const { return points.size(); }
};

/// Reads `lon,lat,<covariate columns>`; the covariate columns must match the fitted design.
SurfaceGrid read_surface_grid(const std::string& path, const DesignMatrix& design);

/// Distinct observed locations with the covariates of the first node seen at each.
SurfaceGrid observed_location_grid(const NodeTable& nodes, const DyadSet& dyads, const DesignMatrix& design);

/// rho(s) = x(s)'beta* + eta*(s) per draw, eta*(s) kriged under the draw's phi, averaged over
/// every `thin`-th draw. sd is the population standard deviation over the same draws.
void estimate_surface(const std::vector<const Draw*>& draws, SurfaceGrid& grid, const CovarianceCache* cache,
                      std::size_t thin = 1, std::size_t threads = 1);

void write_surface_csv(const SurfaceGrid& grid, const std::string& path);

struct PotentialBand {
    Eigen::VectorXd mean;
    Eigen::VectorXd lower;  // 2.5th percentile
    Eigen::VectorXd upper;  // 97.5th percentile
};

/// Posterior band of x'beta* (+ kriged eta* when a cache is supplied) along ordered points.
PotentialBand evaluate_potential_path(const std::vector<const Draw*>& draws, const Eigen::MatrixXd& covariates,
                                      const std::vector<Location>* points = nullptr,
                                      const CovarianceCache* cache = nullptr);

}  // namespace codyad
