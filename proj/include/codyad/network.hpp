#pragma once

#include "codyad/domain.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace codyad {

struct ScaleDenominators {
    double ds_max = 0.0;
    double dt_max = 0.0;
};

/// Fully connected dyad set in structure-of-arrays form, sorted by (i, j).
/// Node i is the earlier node of each dyad (ties: smaller id first).
///
/// The eta incidence K has +1 at loc(j) and -1 at loc(i) in each row; the
/// theta incidence M has +1 at i and at j. Both are kept implicit in the
/// index arrays.
struct DyadSet {
    std::size_t node_count = 0;
    std::vector<std::int64_t> node_ids;         // table order
    std::vector<std::int32_t> location_of_node; // node index -> location index
    std::vector<Location> locations;            // first-seen representative per location
    CoordinateMode mode = CoordinateMode::Planar;

    std::vector<std::int32_t> node_i, node_j;
    std::vector<std::int32_t> loc_i, loc_j;
    Eigen::VectorXd y, ds, dt, ds_scaled, dt_scaled;
    ScaleDenominators scale;

    std::size_t size() const { return node_i.size(); }
    std::size_t location_count() const { return locations.size(); }

    /// Subset of dyads (e.g. a held-out split) keeping node/location maps and scale denominators.
    DyadSet subset(const std::vector<std::size_t>& rows) const;
};

struct DesignMatrix {
    Eigen::MatrixXd x;                     // N x p, row r = x_j(r) - x_i(r)
    std::vector<std::string> names;        // retained covariate names, in table order
    std::vector<std::size_t> kept_columns; // indices into the node covariates
    std::vector<std::string> dropped_columns;

    std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
};

/// Location index per node: nodes within `tol` of each other (transitively) share
/// an index; indices are assigned in order of first appearance.
std::vector<std::int32_t> distinct_locations(const NodeTable& nodes, double tol, CoordinateMode mode);

struct BuildOptions {
    double location_tolerance = 0.0;
    std::optional<ScaleDenominators> scale;  // reuse stored denominators instead of the set maxima
};

DyadSet build_dyads(const NodeTable& nodes, const Dissimilarity& dissim, CoordinateMode mode,
                    const BuildOptions& opts = {});

/// Differenced covariates; zero columns are dropped with a warning.
DesignMatrix build_design(const NodeTable& nodes, const DyadSet& dyads);

/// Covariate matrix (n x p_kept) for the columns retained in `design`.
Eigen::MatrixXd node_covariates(const NodeTable& nodes, const DesignMatrix& design);

/// K' v for a per-dyad vector v (length m).
Eigen::VectorXd eta_incidence_transpose(const DyadSet& dyads, const Eigen::VectorXd& v);

/// K' X for a per-dyad matrix X (m x cols).
Eigen::MatrixXd eta_incidence_transpose(const DyadSet& dyads, const Eigen::MatrixXd& x);

/// Dense K (N x m); for tests and small problems.
Eigen::MatrixXd eta_incidence(const DyadSet& dyads);

/// Dense M (N x n); for tests and small problems.
Eigen::MatrixXd theta_incidence(const DyadSet& dyads);

/// Writes `i,j,y,ds,dt,ds_scaled,dt_scaled` with node ids.
void write_dyads_csv(const DyadSet& dyads, const std::string& path);

}  // namespace codyad
