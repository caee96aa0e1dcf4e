#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace codyad {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;

enum class CoordinateMode { GeodesicLonLat, Planar };

/// A coordinate pair: (lon, lat) in degrees in geodesic mode, (x, y) in planar mode.
struct Location {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Location&, const Location&) = default;
};

/// Node response: a scalar, or an embedding with optional per-dimension weights.
struct Embedding {
    std::vector<double> values;
    std::vector<double> weights;  // empty means unit weights
};

using Response = std::variant<double, Embedding>;

struct Node {
    std::int64_t id = 0;
    Location location;
    double time = 0.0;
    std::vector<double> covariates;
    Response response = 0.0;
};

struct NodeTable {
    std::vector<Node> nodes;
    std::vector<std::string> covariate_names;

    std::size_t size() const { return nodes.size(); }
};

enum class DissimilarityKind { SignedDifference, WeightedEuclidean, Manhattan };

struct Dissimilarity {
    DissimilarityKind kind = DissimilarityKind::SignedDifference;
    std::vector<double> weights;  // weighted-euclidean only; empty defers to the embedding's own weights
};

/// Throws DomainError if the location is invalid for `mode`.
void validate_location(const Location& loc, CoordinateMode mode);

/// Throws DomainError on non-finite time/covariates or negative embedding weights.
void validate_node(const Node& node, CoordinateMode mode);

/// Haversine great-circle distance in meters (geodesic mode) or Euclidean distance.
double distance(const Location& a, const Location& b, CoordinateMode mode);

/// Dyadic outcome from the responses of the earlier node `yi` and the later node `yj`.
double dissimilarity(const Response& yi, const Response& yj, const Dissimilarity& spec);

/// loadings * (raw - center); loadings is D x L.
Eigen::VectorXd project_embedding(const Eigen::VectorXd& raw, const Eigen::MatrixXd& loadings,
                                  const Eigen::VectorXd& center);

/// Reads a node table. Required columns: id, lon, lat, time. Covariates are `x_*`
/// columns; the response is `y` or `e_1..e_D` with optional `ew_1..ew_D`.
NodeTable read_node_table(const std::string& path);

}  // namespace codyad
