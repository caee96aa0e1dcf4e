#pragma once

#include "codyad/domain.hpp"
#include "codyad/likelihood.hpp"
#include "codyad/sampler.hpp"
#include "codyad/scoring.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace codyad {

inline constexpr int kConfigSchemaVersion = 1;

/// The four comparison models plus user-defined bases.
enum class WeightModel { None, Time, Space, SpaceTime, Custom };

struct PhiRule {
    std::optional<double> step;        // {0, step, 2 step, ...} up to max_ds * fraction
    double fraction = 1.0 / 3.0;
    std::vector<double> values;        // explicit support; overrides the rule when nonempty
};

struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    std::string base_dir;  // directory of the config file; relative paths resolve against it
    std::string nodes_path;
    std::string grid_path;  // optional
    std::string output_dir = "out";
    CoordinateMode mode = CoordinateMode::GeodesicLonLat;
    double location_tolerance = 0.0;
    Dissimilarity dissimilarity;
    WeightModel weight_model = WeightModel::SpaceTime;
    WeightSpec custom_weights;
    bool spatial_effects = true;
    bool node_effects = true;
    bool constraint = true;
    PriorConfig priors;
    SamplerConfig sampler;
    PhiRule phi;
    std::size_t surface_thin = 1;
    CrpsMode crps_mode = CrpsMode::Mixture;
    double holdout_fraction = 0.0;
    nlohmann::json source;  // the document as read

    std::string resolve(const std::string& path) const;
    WeightSpec weight_spec() const { return weight_spec_for(weight_model); }
    WeightSpec weight_spec_for(WeightModel model) const;
    ModelSpec model_spec() const;
};

std::string to_string(WeightModel model);

/// Parses a config document. Structural problems (wrong types, unknown enum values) are
/// collected into `issues` instead of throwing.
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir, std::vector<std::string>& issues);

/// Reads and parses `path`. Throws IoError when unreadable and ValidationError when not JSON.
RunConfig load_config(const std::string& path, std::vector<std::string>& issues);

/// Semantic checks: files exist, priors positive, sampler settings, phi rule, and agreement of
/// the grid covariate columns with the node table. Returns every issue found.
std::vector<std::string> validate_config(const RunConfig& config);

}  // namespace codyad
