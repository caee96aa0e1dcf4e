#include "codyad/surface.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/kernels/kernels.hpp"
#include "codyad/parallel.hpp"
#include "codyad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace codyad {
namespace {

constexpr const char* kModule = "potential-surface";

bool is_covariate(const std::string& name) { return name.rfind("x_", 0) == 0; }

/// Draw indices grouped by phi index, keeping draw order within each group.
std::map<std::size_t, std::vector<std::size_t>> group_by_phi(const std::vector<const Draw*>& draws) {
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < draws.size(); ++k) groups[draws[k]->phi_index].push_back(k);
    return groups;
}

}  // namespace

SurfaceGrid read_surface_grid(const std::string& path, const DesignMatrix& design) {
    const CsvTable csv = read_csv(path);
    const std::size_t lon = csv.require_column("lon", kModule);
    const std::size_t lat = csv.require_column("lat", kModule);
    std::vector<std::size_t> cols;
    for (const auto& name : design.names) {
        const auto c = csv.column(name);
        if (!c) throw DomainError(kModule, "grid is missing covariate column '" + name + "'");
        cols.push_back(*c);
    }
    for (const auto& name : csv.header) {
        if (!is_covariate(name)) continue;
        const bool known = std::find(design.names.begin(), design.names.end(), name) != design.names.end() ||
                           std::find(design.dropped_columns.begin(), design.dropped_columns.end(), name) !=
                               design.dropped_columns.end();
        if (!known) throw DomainError(kModule, "grid covariate column '" + name + "' is not in the fitted design");
    }

    SurfaceGrid grid;
    const auto n = Eigen::Index(csv.rows.size());
    grid.covariates.resize(n, Eigen::Index(cols.size()));
    grid.masked.assign(std::size_t(n), false);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = csv.rows[std::size_t(r)];
        const std::string ctx = path + " row " + std::to_string(r + 2);
        grid.points.push_back({parse_double(row[lon], ctx), parse_double(row[lat], ctx)});
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double v = parse_double(row[cols[c]], ctx);
            grid.covariates(r, Eigen::Index(c)) = v;
            if (!std::isfinite(v)) grid.masked[std::size_t(r)] = true;
        }
    }
    return grid;
}

SurfaceGrid observed_location_grid(const NodeTable& nodes, const DyadSet& dyads, const DesignMatrix& design) {
    const Eigen::MatrixXd x = node_covariates(nodes, design);
    SurfaceGrid grid;
    grid.points = dyads.locations;
    grid.covariates.resize(Eigen::Index(dyads.location_count()), x.cols());
    std::vector<bool> seen(dyads.location_count(), false);
    for (std::size_t i = 0; i < dyads.location_of_node.size(); ++i) {
        const auto l = std::size_t(dyads.location_of_node[i]);
        if (seen[l]) continue;
        seen[l] = true;
        grid.covariates.row(Eigen::Index(l)) = x.row(Eigen::Index(i));
    }
    grid.masked.assign(grid.points.size(), false);
    return grid;
}

void estimate_surface(const std::vector<const Draw*>& all_draws, SurfaceGrid& grid, const CovarianceCache* cache,
                      std::size_t thin, std::size_t threads) {
    if (thin == 0) throw DomainError(kModule, "surface thinning must be at least 1");
    std::vector<const Draw*> draws;
    for (std::size_t k = 0; k < all_draws.size(); k += thin) draws.push_back(all_draws[k]);
    const auto cells = Eigen::Index(grid.size());
    grid.mean = Eigen::VectorXd::Constant(cells, std::numeric_limits<double>::quiet_NaN());
    grid.sd = grid.mean;
    if (draws.empty()) return;
    const auto p = draws.front()->beta_star.size();
    if (grid.covariates.cols() != p) throw DomainError(kModule, "grid covariates do not conform to the fitted design");

    const bool spatial = cache != nullptr && draws.front()->eta_star.size() > 0;
    const auto groups = group_by_phi(draws);
    // alpha_k = R(phi_k)^{-1} eta*_k, computed once per draw.
    std::vector<Eigen::VectorXd> alpha(draws.size());
    if (spatial) {
        for (std::size_t k = 0; k < draws.size(); ++k)
            alpha[k] = kriging_weights(cache->entry(draws[k]->phi_index), draws[k]->eta_star);
    }
    Eigen::MatrixXd betas(p, Eigen::Index(draws.size()));
    for (std::size_t k = 0; k < draws.size(); ++k) betas.col(Eigen::Index(k)) = draws[k]->beta_star;

    const auto& kt = kernels::scalar_kernels();
    parallel_for(std::size_t(cells), threads, [&](std::size_t cell) {
        const auto c = Eigen::Index(cell);
        if (grid.masked[cell]) return;
        Eigen::VectorXd rho = (grid.covariates.row(c) * betas).transpose();
        if (spatial) {
            const auto m = Eigen::Index(cache->location_count());
            Eigen::VectorXd d(m), r(m);
            Eigen::Index exact = -1;
            for (Eigen::Index l = 0; l < m; ++l) {
                d[l] = distance(grid.points[cell], cache->locations()[std::size_t(l)], cache->mode());
                if (d[l] == 0.0 && exact < 0) exact = l;
            }
            for (const auto& [phi_index, members] : groups) {
                const double phi = cache->entry(phi_index).phi;
                if (exact >= 0) {
                    for (auto k : members) rho[Eigen::Index(k)] += draws[k]->eta_star[exact];
                    continue;
                }
                if (phi == 0.0) continue;
                kt.exp_neg_scaled(d.data(), std::size_t(m), 1.0 / phi, r.data());
                for (auto k : members) rho[Eigen::Index(k)] += r.dot(alpha[k]);
            }
        }
        const std::span<const double> v(rho.data(), std::size_t(rho.size()));
        grid.mean[c] = stats::mean(v);
        grid.sd[c] = std::sqrt(stats::variance(v, 0));
    });
}

void write_surface_csv(const SurfaceGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(kModule, "cannot write " + path);
    out << "lon,lat,mean,sd,masked\n";
    for (std::size_t c = 0; c < grid.size(); ++c) {
        const auto e = Eigen::Index(c);
        out << format_double(grid.points[c].x) << ',' << format_double(grid.points[c].y) << ',';
        if (grid.masked[c]) {
            out << "NA,NA,1\n";
        } else {
            out << format_double(grid.mean[e]) << ',' << format_double(grid.sd[e]) << ",0\n";
        }
    }
    if (!out) throw IoError(kModule, "failed writing " + path);
}

PotentialBand evaluate_potential_path(const std::vector<const Draw*>& draws, const Eigen::MatrixXd& covariates,
                                      const std::vector<Location>* points, const CovarianceCache* cache) {
    const auto n = covariates.rows();
    PotentialBand band;
    band.mean = Eigen::VectorXd::Zero(n);
    band.lower = band.mean;
    band.upper = band.mean;
    if (draws.empty()) return band;
    const bool spatial = cache && points && draws.front()->eta_star.size() > 0;
    if (spatial && points->size() != std::size_t(n))
        throw DomainError(kModule, "path points and covariates differ in length");
    std::vector<std::vector<double>> values(std::size_t(n), std::vector<double>(draws.size()));
    for (std::size_t k = 0; k < draws.size(); ++k) {
        const Eigen::VectorXd rho = covariates * draws[k]->beta_star;
        for (Eigen::Index t = 0; t < n; ++t) {
            double v = rho[t];
            if (spatial) v += krige_predict((*points)[std::size_t(t)], draws[k]->eta_star, *cache, draws[k]->phi_index);
            values[std::size_t(t)][k] = v;
        }
    }
    for (Eigen::Index t = 0; t < n; ++t) {
        auto& v = values[std::size_t(t)];
        band.mean[t] = stats::mean(v);
        std::sort(v.begin(), v.end());
        band.lower[t] = stats::quantile_sorted(v, 0.025);
        band.upper[t] = stats::quantile_sorted(v, 0.975);
    }
    return band;
}

}  // namespace codyad
