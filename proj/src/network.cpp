#include "codyad/network.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace codyad {
namespace {

constexpr const char* kModule = "network-builder";

}  // namespace

std::vector<std::int32_t> distinct_locations(const NodeTable& nodes, double tol, CoordinateMode mode) {
    if (!(tol >= 0.0)) throw DomainError(kModule, "location tolerance must be nonnegative");
    const std::size_t n = nodes.size();
    std::vector<std::int32_t> label(n, -1);
    std::int32_t next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (label[start] >= 0) continue;
        label[start] = next;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            for (std::size_t b = start + 1; b < n; ++b) {
                if (label[b] >= 0) continue;
                if (distance(nodes.nodes[a].location, nodes.nodes[b].location, mode) <= tol) {
                    label[b] = next;
                    stack.push_back(b);
                }
            }
        }
        ++next;
    }
    return label;
}

DyadSet build_dyads(const NodeTable& nodes, const Dissimilarity& dissim, CoordinateMode mode,
                    const BuildOptions& opts) {
    const std::size_t n = nodes.size();
    if (n < 2) throw DomainError(kModule, "at least two nodes are required");
    std::set<std::int64_t> ids;
    for (const auto& node : nodes.nodes) {
        validate_node(node, mode);
        if (!ids.insert(node.id).second)
            throw DomainError(kModule, "duplicate node id " + std::to_string(node.id));
    }

    DyadSet set;
    set.node_count = n;
    set.mode = mode;
    set.node_ids.reserve(n);
    for (const auto& node : nodes.nodes) set.node_ids.push_back(node.id);
    set.location_of_node = distinct_locations(nodes, opts.location_tolerance, mode);
    const auto m = static_cast<std::size_t>(*std::max_element(set.location_of_node.begin(), set.location_of_node.end()) + 1);
    set.locations.resize(m);
    std::vector<bool> placed(m, false);
    for (std::size_t k = 0; k < n; ++k) {
        const auto loc = static_cast<std::size_t>(set.location_of_node[k]);
        if (!placed[loc]) {
            set.locations[loc] = nodes.nodes[k].location;
            placed[loc] = true;
        }
    }

    const std::size_t count = n * (n - 1) / 2;
    struct Pair {
        std::int32_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(count);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const Node& na = nodes.nodes[a];
            const Node& nb = nodes.nodes[b];
            const bool a_first = na.time < nb.time || (na.time == nb.time && na.id < nb.id);
            pairs.push_back(a_first ? Pair{std::int32_t(a), std::int32_t(b)} : Pair{std::int32_t(b), std::int32_t(a)});
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& l, const Pair& r) { return l.i != r.i ? l.i < r.i : l.j < r.j; });

    set.node_i.resize(count);
    set.node_j.resize(count);
    set.loc_i.resize(count);
    set.loc_j.resize(count);
    set.y.resize(count);
    set.ds.resize(count);
    set.dt.resize(count);
    for (std::size_t r = 0; r < count; ++r) {
        const auto [i, j] = pairs[r];
        const Node& ni = nodes.nodes[std::size_t(i)];
        const Node& nj = nodes.nodes[std::size_t(j)];
        set.node_i[r] = i;
        set.node_j[r] = j;
        set.loc_i[r] = set.location_of_node[std::size_t(i)];
        set.loc_j[r] = set.location_of_node[std::size_t(j)];
        set.y[r] = dissimilarity(ni.response, nj.response, dissim);
        if (!std::isfinite(set.y[r]))
            throw DomainError(kModule, "non-finite dyadic outcome for nodes " + std::to_string(ni.id) + " and " +
                                           std::to_string(nj.id));
        set.ds[r] = distance(ni.location, nj.location, mode);
        set.dt[r] = std::abs(nj.time - ni.time);
    }

    if (opts.scale) {
        set.scale = *opts.scale;
    } else {
        set.scale.ds_max = set.ds.size() ? set.ds.maxCoeff() : 0.0;
        set.scale.dt_max = set.dt.size() ? set.dt.maxCoeff() : 0.0;
    }
    auto scaled = [](const Eigen::VectorXd& v, double denom) -> Eigen::VectorXd {
        if (denom > 0.0) return (v / denom).cwiseMin(1.0);
        return Eigen::VectorXd::Zero(v.size());
    };
    set.ds_scaled = scaled(set.ds, set.scale.ds_max);
    set.dt_scaled = scaled(set.dt, set.scale.dt_max);
    return set;
}

DyadSet DyadSet::subset(const std::vector<std::size_t>& rows) const {
    DyadSet out;
    out.node_count = node_count;
    out.node_ids = node_ids;
    out.location_of_node = location_of_node;
    out.locations = locations;
    out.mode = mode;
    out.scale = scale;
    const auto k = static_cast<Eigen::Index>(rows.size());
    out.y.resize(k);
    out.ds.resize(k);
    out.dt.resize(k);
    out.ds_scaled.resize(k);
    out.dt_scaled.resize(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const std::size_t src = rows[std::size_t(r)];
        out.node_i.push_back(node_i[src]);
        out.node_j.push_back(node_j[src]);
        out.loc_i.push_back(loc_i[src]);
        out.loc_j.push_back(loc_j[src]);
        out.y[r] = y[Eigen::Index(src)];
        out.ds[r] = ds[Eigen::Index(src)];
        out.dt[r] = dt[Eigen::Index(src)];
        out.ds_scaled[r] = ds_scaled[Eigen::Index(src)];
        out.dt_scaled[r] = dt_scaled[Eigen::Index(src)];
    }
    return out;
}

DesignMatrix build_design(const NodeTable& nodes, const DyadSet& dyads) {
    if (nodes.size() != dyads.node_count) throw DomainError(kModule, "design: node table does not match dyad set");
    const std::size_t p = nodes.covariate_names.size();
    for (const auto& node : nodes.nodes)
        if (node.covariates.size() != p) throw DomainError(kModule, "design: ragged covariate rows");

    DesignMatrix design;
    const auto rows = static_cast<Eigen::Index>(dyads.size());
    for (std::size_t c = 0; c < p; ++c) {
        bool constant = true;
        for (Eigen::Index r = 0; r < rows && constant; ++r) {
            const double d = nodes.nodes[std::size_t(dyads.node_j[std::size_t(r)])].covariates[c] -
                             nodes.nodes[std::size_t(dyads.node_i[std::size_t(r)])].covariates[c];
            constant = d == 0.0;
        }
        if (constant)
            design.dropped_columns.push_back(nodes.covariate_names[c]);
        else {
            design.kept_columns.push_back(c);
            design.names.push_back(nodes.covariate_names[c]);
        }
    }
    if (!design.dropped_columns.empty()) {
        std::string msg = "dropping zero-variance differenced covariates:";
        for (const auto& name : design.dropped_columns) msg += " " + name;
        warn(msg);
    }

    design.x.resize(rows, static_cast<Eigen::Index>(design.kept_columns.size()));
    for (std::size_t k = 0; k < design.kept_columns.size(); ++k) {
        const std::size_t c = design.kept_columns[k];
        for (Eigen::Index r = 0; r < rows; ++r)
            design.x(r, Eigen::Index(k)) = nodes.nodes[std::size_t(dyads.node_j[std::size_t(r)])].covariates[c] -
                                           nodes.nodes[std::size_t(dyads.node_i[std::size_t(r)])].covariates[c];
    }
    return design;
}

Eigen::MatrixXd node_covariates(const NodeTable& nodes, const DesignMatrix& design) {
    Eigen::MatrixXd x(Eigen::Index(nodes.size()), Eigen::Index(design.kept_columns.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t k = 0; k < design.kept_columns.size(); ++k)
            x(Eigen::Index(i), Eigen::Index(k)) = nodes.nodes[i].covariates[design.kept_columns[k]];
    return x;
}

Eigen::VectorXd eta_incidence_transpose(const DyadSet& dyads, const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(dyads.location_count()));
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        out[dyads.loc_j[r]] += v[Eigen::Index(r)];
        out[dyads.loc_i[r]] -= v[Eigen::Index(r)];
    }
    return out;
}

Eigen::MatrixXd eta_incidence_transpose(const DyadSet& dyads, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Eigen::Index(dyads.location_count()), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = eta_incidence_transpose(dyads, Eigen::VectorXd(x.col(c)));
    return out;
}

Eigen::MatrixXd eta_incidence(const DyadSet& dyads) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(Eigen::Index(dyads.size()), Eigen::Index(dyads.location_count()));
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        k(Eigen::Index(r), dyads.loc_j[r]) += 1.0;
        k(Eigen::Index(r), dyads.loc_i[r]) -= 1.0;
    }
    return k;
}

Eigen::MatrixXd theta_incidence(const DyadSet& dyads) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(dyads.size()), Eigen::Index(dyads.node_count));
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        m(Eigen::Index(r), dyads.node_i[r]) += 1.0;
        m(Eigen::Index(r), dyads.node_j[r]) += 1.0;
    }
    return m;
}

void write_dyads_csv(const DyadSet& dyads, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(kModule, "cannot write '" + path + "'");
    out << "i,j,y,ds,dt,ds_scaled,dt_scaled\n";
    for (std::size_t r = 0; r < dyads.size(); ++r) {
        const auto e = Eigen::Index(r);
        out << dyads.node_ids[std::size_t(dyads.node_i[r])] << ',' << dyads.node_ids[std::size_t(dyads.node_j[r])]
            << ',' << format_double(dyads.y[e]) << ',' << format_double(dyads.ds[e]) << ','
            << format_double(dyads.dt[e]) << ',' << format_double(dyads.ds_scaled[e]) << ','
            << format_double(dyads.dt_scaled[e]) << '\n';
    }
}

}  // namespace codyad
