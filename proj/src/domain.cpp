#include "codyad/domain.hpp"

#include "codyad/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace codyad {
namespace {

constexpr const char* kModule = "domain-core";

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

const std::vector<double>& embedding_of(const Response& r) {
    if (const auto* e = std::get_if<Embedding>(&r)) return e->values;
    throw DomainError(kModule, "dissimilarity: embedding kinds require embedding responses");
}

}  // namespace

void validate_location(const Location& loc, CoordinateMode mode) {
    if (!std::isfinite(loc.x) || !std::isfinite(loc.y))
        throw DomainError(kModule, "location coordinates must be finite");
    if (mode == CoordinateMode::GeodesicLonLat) {
        if (loc.x < -180.0 || loc.x > 180.0) {
            std::ostringstream os;
            os << "longitude " << loc.x << " outside [-180, 180]";
            throw DomainError(kModule, os.str());
        }
        if (loc.y < -90.0 || loc.y > 90.0) {
            std::ostringstream os;
            os << "latitude " << loc.y << " outside [-90, 90]";
            throw DomainError(kModule, os.str());
        }
    }
}

void validate_node(const Node& node, CoordinateMode mode) {
    validate_location(node.location, mode);
    if (!std::isfinite(node.time))
        throw DomainError(kModule, "node " + std::to_string(node.id) + ": time must be finite");
    for (double x : node.covariates)
        if (!std::isfinite(x))
            throw DomainError(kModule, "node " + std::to_string(node.id) + ": covariates must be finite");
    if (const auto* e = std::get_if<Embedding>(&node.response)) {
        for (double w : e->weights)
            if (!(w >= 0.0))
                throw DomainError(kModule,
                                  "node " + std::to_string(node.id) + ": embedding weights must be nonnegative");
        if (!e->weights.empty() && e->weights.size() != e->values.size())
            throw DomainError(kModule, "node " + std::to_string(node.id) + ": embedding weight length mismatch");
    }
}

double distance(const Location& a, const Location& b, CoordinateMode mode) {
    if (mode == CoordinateMode::Planar) return std::hypot(b.x - a.x, b.y - a.y);

    validate_location(a, mode);
    validate_location(b, mode);
    if (a == b) return 0.0;
    const double lat1 = radians(a.y);
    const double lat2 = radians(b.y);
    const double sdlat = std::sin(0.5 * (lat2 - lat1));
    const double sdlon = std::sin(0.5 * radians(b.x - a.x));
    const double h = sdlat * sdlat + std::cos(lat1) * std::cos(lat2) * sdlon * sdlon;
    return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

double dissimilarity(const Response& yi, const Response& yj, const Dissimilarity& spec) {
    switch (spec.kind) {
    case DissimilarityKind::SignedDifference: {
        const auto* a = std::get_if<double>(&yi);
        const auto* b = std::get_if<double>(&yj);
        if (!a || !b) throw DomainError(kModule, "signed-difference requires scalar responses");
        return *b - *a;
    }
    case DissimilarityKind::WeightedEuclidean: {
        const auto& a = embedding_of(yi);
        const auto& b = embedding_of(yj);
        if (a.size() != b.size()) throw DomainError(kModule, "embedding length mismatch");
        const std::vector<double>* w = &spec.weights;
        if (w->empty()) w = &std::get<Embedding>(yi).weights;
        if (!w->empty() && w->size() != a.size())
            throw DomainError(kModule, "dissimilarity weight length mismatch");
        double acc = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) {
            const double diff = b[d] - a[d];
            acc += (w->empty() ? 1.0 : (*w)[d]) * diff * diff;
        }
        return std::sqrt(acc);
    }
    case DissimilarityKind::Manhattan: {
        const auto& a = embedding_of(yi);
        const auto& b = embedding_of(yj);
        if (a.size() != b.size()) throw DomainError(kModule, "embedding length mismatch");
        double acc = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) acc += std::abs(b[d] - a[d]);
        return acc;
    }
    }
    throw DomainError(kModule, "unknown dissimilarity kind");
}

Eigen::VectorXd project_embedding(const Eigen::VectorXd& raw, const Eigen::MatrixXd& loadings,
                                  const Eigen::VectorXd& center) {
    if (raw.size() != center.size() || loadings.cols() != raw.size())
        throw DomainError(kModule, "project_embedding: dimension mismatch");
    return loadings * (raw - center);
}

}  // namespace codyad
