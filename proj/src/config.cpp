#include "codyad/config.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace codyad {
namespace {

constexpr const char* kModule = "cli";
using nlohmann::json;

/// Reads typed fields from one JSON object, reporting problems with their dotted path.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& issues)
        : obj_(obj), path_(std::move(path)), issues_(issues) {
        if (!obj_.is_object()) issues_.push_back(path_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) return;
        const json& v = obj_.at(key);
        bool ok = true;
        if constexpr (std::is_same_v<T, bool>) {
            ok = v.is_boolean();
        } else if constexpr (std::is_integral_v<T>) {
            ok = v.is_number_integer() && (!std::is_unsigned_v<T> || v.is_number_unsigned());
        } else if constexpr (std::is_floating_point_v<T>) {
            ok = v.is_number();
        }
        try {
            if (ok) out = v.get<T>();
        } catch (const json::exception&) {
            ok = false;
        }
        if (!ok) {
            issues_.push_back(key_path(key) + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
        return &obj_.at(key);
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void reject_unknown() {
        if (!obj_.is_object()) return;
        for (const auto& [k, v] : obj_.items())
            if (!seen_.count(k)) issues_.push_back("unknown key " + key_path(k));
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

void read_inverse_gamma(const json* node, const std::string& path, InverseGammaPrior& out,
                        std::vector<std::string>& issues) {
    if (!node) return;
    Reader r(*node, path, issues);
    r.get("shape", out.shape);
    r.get("scale", out.scale);
    r.reject_unknown();
}

void read_gamma(const json* node, const std::string& path, GammaPrior& out, std::vector<std::string>& issues) {
    if (!node) return;
    Reader r(*node, path, issues);
    r.get("shape", out.shape);
    r.get("rate", out.rate);
    r.reject_unknown();
}

std::optional<WeightModel> parse_weight_model(const std::string& s) {
    if (s == "none") return WeightModel::None;
    if (s == "time") return WeightModel::Time;
    if (s == "space") return WeightModel::Space;
    if (s == "space-time") return WeightModel::SpaceTime;
    if (s == "custom") return WeightModel::Custom;
    return std::nullopt;
}

bool file_exists(const std::string& path) { return std::filesystem::is_regular_file(path); }

std::vector<std::string> covariate_columns(const std::vector<std::string>& header) {
    std::vector<std::string> out;
    for (const auto& h : header)
        if (h.rfind("x_", 0) == 0 && h.size() > 2) out.push_back(h);
    return out;
}

}  // namespace

std::string to_string(WeightModel model) {
    switch (model) {
        case WeightModel::None: return "none";
        case WeightModel::Time: return "time";
        case WeightModel::Space: return "space";
        case WeightModel::SpaceTime: return "space-time";
        case WeightModel::Custom: return "custom";
    }
    return "unknown";
}

std::string RunConfig::resolve(const std::string& path) const {
    if (path.empty()) return path;
    const std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

WeightSpec RunConfig::weight_spec_for(WeightModel model) const {
    switch (model) {
        case WeightModel::None: return WeightSpec::unweighted();
        case WeightModel::Time: return WeightSpec::time_space(true, false);
        case WeightModel::Space: return WeightSpec::time_space(false, true);
        case WeightModel::SpaceTime: return WeightSpec::time_space(true, true);
        case WeightModel::Custom: return custom_weights;
    }
    return {};
}

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.weights = weight_spec();
    spec.spatial_effects = spatial_effects;
    spec.node_effects = node_effects;
    spec.constraint = constraint;
    return spec;
}

RunConfig parse_config(const json& doc, const std::string& base_dir, std::vector<std::string>& issues) {
    RunConfig c;
    c.base_dir = base_dir;
    c.source = doc;
    Reader top(doc, "", issues);
    if (!doc.is_object()) return c;
    if (!doc.contains("schema_version")) issues.push_back("schema_version is required");
    top.get("schema_version", c.schema_version);
    top.get("output_dir", c.output_dir);

    if (const json* in = top.child("input")) {
        Reader r(*in, "input", issues);
        r.get("nodes", c.nodes_path);
        r.get("grid", c.grid_path);
        r.reject_unknown();
    } else {
        issues.push_back("input.nodes is required");
    }

    if (const json* coords = top.child("coordinates")) {
        Reader r(*coords, "coordinates", issues);
        std::string mode = "geodesic";
        r.get("mode", mode);
        if (mode == "geodesic") c.mode = CoordinateMode::GeodesicLonLat;
        else if (mode == "planar") c.mode = CoordinateMode::Planar;
        else issues.push_back("coordinates.mode must be 'geodesic' or 'planar'");
        r.get("location_tolerance", c.location_tolerance);
        r.reject_unknown();
    }

    if (const json* d = top.child("dissimilarity")) {
        Reader r(*d, "dissimilarity", issues);
        std::string kind = "signed_difference";
        r.get("kind", kind);
        if (kind == "signed_difference") c.dissimilarity.kind = DissimilarityKind::SignedDifference;
        else if (kind == "weighted_euclidean") c.dissimilarity.kind = DissimilarityKind::WeightedEuclidean;
        else if (kind == "manhattan") c.dissimilarity.kind = DissimilarityKind::Manhattan;
        else issues.push_back("dissimilarity.kind must be signed_difference, weighted_euclidean or manhattan");
        r.get("weights", c.dissimilarity.weights);
        r.reject_unknown();
    }

    if (const json* w = top.child("weights")) {
        Reader r(*w, "weights", issues);
        std::string model = "space-time";
        r.get("model", model);
        if (auto m = parse_weight_model(model)) c.weight_model = *m;
        else issues.push_back("weights.model must be one of none, time, space, space-time, custom");
        if (const json* bases = r.child("bases")) {
            if (!bases->is_array()) issues.push_back("weights.bases must be an array");
            else {
                for (std::size_t k = 0; k < bases->size(); ++k) {
                    Reader b((*bases)[k], "weights.bases[" + std::to_string(k) + "]", issues);
                    std::string lag = "time";
                    double exponent = 1.0;
                    bool fixed = false;
                    b.get("lag", lag);
                    b.get("exponent", exponent);
                    b.get("fixed", fixed);
                    b.reject_unknown();
                    BasisFunction f;
                    if (lag == "time") f.lag = BasisFunction::Lag::Time;
                    else if (lag == "space") f.lag = BasisFunction::Lag::Space;
                    else issues.push_back(b.key_path("lag") + " must be 'time' or 'space'");
                    f.exponent = exponent;
                    c.custom_weights.bases.push_back(f);
                    c.custom_weights.fixed.push_back(fixed);
                }
            }
        }
        r.reject_unknown();
    }

    if (const json* e = top.child("effects")) {
        Reader r(*e, "effects", issues);
        r.get("spatial", c.spatial_effects);
        r.get("node", c.node_effects);
        r.get("constraint", c.constraint);
        r.reject_unknown();
    }

    if (const json* p = top.child("priors")) {
        Reader r(*p, "priors", issues);
        r.get("beta_variance", c.priors.beta_variance);
        read_inverse_gamma(r.child("sigma2_y"), "priors.sigma2_y", c.priors.sigma2_y, issues);
        read_inverse_gamma(r.child("sigma2_eta"), "priors.sigma2_eta", c.priors.sigma2_eta, issues);
        read_inverse_gamma(r.child("sigma2_theta"), "priors.sigma2_theta", c.priors.sigma2_theta, issues);
        read_gamma(r.child("phi"), "priors.phi", c.priors.phi, issues);
        read_gamma(r.child("gamma"), "priors.gamma", c.priors.gamma, issues);
        r.reject_unknown();
    }

    if (const json* s = top.child("sampler")) {
        Reader r(*s, "sampler", issues);
        auto& sc = c.sampler;
        r.get("iterations", sc.iterations);
        std::size_t burn = 0;
        if (s->is_object() && s->contains("burn_in")) {
            r.get("burn_in", burn);
            sc.burn_in = burn;
        }
        r.get("thin", sc.thin);
        r.get("seed", sc.seed);
        r.get("chains", sc.chains);
        r.get("adapt_window", sc.adapt_window);
        r.get("target_accept", sc.target_accept);
        r.get("gamma_proposal_scale", sc.gamma_proposal_scale);
        r.get("deterministic_reduction", sc.deterministic_reduction);
        r.get("propagate_beta_star", sc.propagate_beta_star);
        r.get("store_fitted", sc.store_fitted);
        r.get("threads", sc.threads);
        r.reject_unknown();
    }

    if (const json* p = top.child("phi_support")) {
        Reader r(*p, "phi_support", issues);
        double step = 0.0;
        if (p->is_object() && p->contains("step")) {
            r.get("step", step);
            c.phi.step = step;
        }
        r.get("fraction", c.phi.fraction);
        r.get("values", c.phi.values);
        r.reject_unknown();
    }

    if (const json* s = top.child("surface")) {
        Reader r(*s, "surface", issues);
        r.get("thin", c.surface_thin);
        r.reject_unknown();
    }

    if (const json* s = top.child("scoring")) {
        Reader r(*s, "scoring", issues);
        std::string mode = "mixture";
        r.get("mode", mode);
        if (mode == "mixture") c.crps_mode = CrpsMode::Mixture;
        else if (mode == "plugin") c.crps_mode = CrpsMode::PlugIn;
        else issues.push_back("scoring.mode must be 'mixture' or 'plugin'");
        r.get("holdout_fraction", c.holdout_fraction);
        r.reject_unknown();
    }
    top.reject_unknown();
    return c;
}

RunConfig load_config(const std::string& path, std::vector<std::string>& issues) {
    std::ifstream in(path);
    if (!in) throw IoError(kModule, "cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(kModule, "config " + path + " is not valid JSON: " + e.what());
    }
    const auto base = std::filesystem::path(path).parent_path().string();
    return parse_config(doc, base, issues);
}

std::vector<std::string> validate_config(const RunConfig& c) {
    std::vector<std::string> issues;
    if (c.schema_version != kConfigSchemaVersion)
        issues.push_back("schema_version must be " + std::to_string(kConfigSchemaVersion));
    for (auto& s : c.priors.issues()) issues.push_back(s);
    for (auto& s : c.sampler.issues()) issues.push_back(s);
    if (!(c.location_tolerance >= 0.0)) issues.push_back("coordinates.location_tolerance must be nonnegative");
    if (c.surface_thin == 0) issues.push_back("surface.thin must be at least 1");
    if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0))
        issues.push_back("scoring.holdout_fraction must lie in [0, 1)");
    for (double w : c.dissimilarity.weights)
        if (!(w >= 0.0)) issues.push_back("dissimilarity.weights must be nonnegative");

    if (c.weight_model == WeightModel::Custom) {
        if (c.custom_weights.bases.empty()) issues.push_back("weights.bases is required for the custom model");
        for (const auto& b : c.custom_weights.bases)
            if (!(b.exponent > 0.0)) issues.push_back("weights.bases exponents must be positive");
    } else if (!c.custom_weights.bases.empty()) {
        issues.push_back("weights.bases is only allowed with weights.model = custom");
    }

    if (c.spatial_effects) {
        if (!c.phi.values.empty()) {
            for (std::size_t k = 0; k < c.phi.values.size(); ++k) {
                if (!(c.phi.values[k] >= 0.0)) issues.push_back("phi_support.values must be nonnegative");
                if (k > 0 && !(c.phi.values[k] > c.phi.values[k - 1]))
                    issues.push_back("phi_support.values must be strictly ascending");
            }
            if (c.phi.values.front() == 0.0 && c.priors.phi.shape < 1.0)
                issues.push_back("phi = 0 is in the support but the phi prior density is infinite there (shape < 1)");
        } else if (!c.phi.step) {
            issues.push_back("phi_support needs either values or a positive step");
        } else {
            if (!(*c.phi.step > 0.0)) issues.push_back("phi_support.step must be positive");
            if (!(c.phi.fraction > 0.0)) issues.push_back("phi_support.fraction must be positive");
            if (c.priors.phi.shape < 1.0)
                issues.push_back("phi = 0 is in the support but the phi prior density is infinite there (shape < 1)");
        }
    }

    const std::string nodes = c.resolve(c.nodes_path);
    std::vector<std::string> node_covariates;
    std::set<std::string> constant_covariates;
    if (c.nodes_path.empty()) {
        issues.push_back("input.nodes is required");
    } else if (!file_exists(nodes)) {
        issues.push_back("input.nodes file does not exist: " + nodes);
    } else {
        try {
            const CsvTable csv = read_csv(nodes);
            for (const char* col : {"id", "lon", "lat", "time"})
                if (!csv.column(col)) issues.push_back(std::string("missing required column '") + col + "' in " + nodes);
            if (!csv.column("y") && !csv.column("e_1"))
                issues.push_back("missing required column 'y' (or embedding columns 'e_1..e_D') in " + nodes);
            node_covariates = covariate_columns(csv.header);
            for (const auto& name : node_covariates) {
                const std::size_t col = *csv.column(name);
                bool constant = true;
                for (const auto& row : csv.rows)
                    if (col >= row.size() || row[col] != csv.rows.front()[col]) constant = false;
                if (constant) constant_covariates.insert(name);
            }
        } catch (const Error& e) {
            issues.push_back(e.what());
        }
    }

    if (!c.grid_path.empty()) {
        const std::string grid = c.resolve(c.grid_path);
        if (!file_exists(grid)) {
            issues.push_back("input.grid file does not exist: " + grid);
        } else {
            try {
                const CsvTable csv = read_csv(grid);
                for (const char* col : {"lon", "lat"})
                    if (!csv.column(col)) issues.push_back(std::string("missing required column '") + col + "' in " + grid);
                const auto grid_cols = covariate_columns(csv.header);
                const std::set<std::string> grid_set(grid_cols.begin(), grid_cols.end());
                const std::set<std::string> node_set(node_covariates.begin(), node_covariates.end());
                for (const auto& name : node_covariates)
                    if (!grid_set.count(name) && !constant_covariates.count(name))
                        issues.push_back("grid is missing covariate column '" + name + "'");
                for (const auto& name : grid_cols)
                    if (!node_set.count(name) && !c.nodes_path.empty())
                        issues.push_back("grid covariate column '" + name + "' is not in the node table");
            } catch (const Error& e) {
                issues.push_back(e.what());
            }
        }
    }
    return issues;
}

}  // namespace codyad
