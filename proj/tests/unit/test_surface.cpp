#include "test_support.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/surface.hpp"

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>

using namespace codyad;

namespace {

struct Setup {
    NodeTable nodes;
    DyadSet dyads;
    DesignMatrix design;
    CovarianceCache cache;
    std::vector<Draw> storage;

    std::vector<const Draw*> draws() const {
        std::vector<const Draw*> out;
        for (const auto& d : storage) out.push_back(&d);
        return out;
    }
};

Setup make_setup(std::size_t n_draws, std::uint64_t seed, bool zero_eta = false) {
    Rng rng(seed);
    Setup s;
    s.nodes = test::random_nodes(6, 2, rng);
    s.dyads = build_dyads(s.nodes, {}, CoordinateMode::Planar);
    s.design = build_design(s.nodes, s.dyads);
    s.cache = CovarianceCache(s.dyads.locations, CoordinateMode::Planar, PhiSupport{{0.0, 2.0, 6.0}});
    for (std::size_t k = 0; k < n_draws; ++k) {
        Draw d;
        d.beta_star = Eigen::Vector2d(rng.normal(), rng.normal());
        d.eta_star = zero_eta ? Eigen::VectorXd::Zero(6) : Eigen::VectorXd(Eigen::VectorXd::Random(6));
        d.phi_index = std::size_t(rng.uniform() * 3);
        d.phi = s.cache.support().values[d.phi_index];
        s.storage.push_back(d);
    }
    return s;
}

SurfaceGrid random_grid(std::size_t cells, Rng& rng) {
    SurfaceGrid g;
    g.covariates.resize(Eigen::Index(cells), 2);
    for (std::size_t c = 0; c < cells; ++c) {
        g.points.push_back({10.0 * rng.uniform(), 10.0 * rng.uniform()});
        g.covariates.row(Eigen::Index(c)) << rng.normal(), rng.normal();
    }
    g.masked.assign(cells, false);
    return g;
}

// Independent kriged value: conditional-normal mean with a dense LU solve.
double krige_dense(const Location& s, const Draw& d, const CovarianceCache& cache) {
    const auto& locs = cache.locations();
    const auto m = Eigen::Index(locs.size());
    for (Eigen::Index a = 0; a < m; ++a)
        if (locs[std::size_t(a)] == s) return d.eta_star[a];
    if (d.phi == 0.0) return 0.0;
    Eigen::MatrixXd r(m, m);
    Eigen::VectorXd c(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        c[a] = std::exp(-std::hypot(s.x - locs[std::size_t(a)].x, s.y - locs[std::size_t(a)].y) / d.phi);
        for (Eigen::Index b = 0; b < m; ++b)
            r(a, b) = std::exp(-std::hypot(locs[std::size_t(a)].x - locs[std::size_t(b)].x,
                                           locs[std::size_t(a)].y - locs[std::size_t(b)].y) /
                               d.phi);
    }
    return c.dot(r.fullPivLu().solve(d.eta_star));
}

}  // namespace

TEST_CASE("zero spatial draws give x'mean(beta)") {
    Rng rng(81);
    const Setup s = make_setup(50, 81, true);
    SurfaceGrid g = random_grid(20, rng);
    estimate_surface(s.draws(), g, &s.cache);
    Eigen::Vector2d mean_beta = Eigen::Vector2d::Zero();
    for (const auto& d : s.storage) mean_beta += d.beta_star;
    mean_beta /= 50.0;
    for (Eigen::Index c = 0; c < 20; ++c) CHECK(std::abs(g.mean[c] - g.covariates.row(c).dot(mean_beta)) < 1e-12);
}

TEST_CASE("zero model surface is identically zero") {
    Rng rng(82);
    Setup s = make_setup(10, 82, true);
    for (auto& d : s.storage) d.beta_star.setZero();
    SurfaceGrid g = random_grid(15, rng);
    estimate_surface(s.draws(), g, &s.cache);
    CHECK(g.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.sd.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("observed locations interpolate the eta draws") {
    const Setup s = make_setup(30, 83);
    SurfaceGrid g = observed_location_grid(s.nodes, s.dyads, s.design);
    g.covariates.setZero();
    std::vector<const Draw*> one = {&s.storage[4]};
    estimate_surface(one, g, &s.cache);
    for (Eigen::Index l = 0; l < 6; ++l) CHECK(g.mean[l] == s.storage[4].eta_star[l]);
    CHECK(g.sd.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("surface is linear in beta") {
    Rng rng(84);
    Setup s = make_setup(40, 84);
    SurfaceGrid a = random_grid(25, rng);
    SurfaceGrid b = a;
    estimate_surface(s.draws(), a, &s.cache);
    const Eigen::Vector2d shift(0.7, -2.2);
    for (auto& d : s.storage) d.beta_star += shift;
    estimate_surface(s.draws(), b, &s.cache, 1, 3);
    for (Eigen::Index c = 0; c < 25; ++c) {
        CHECK(std::abs(b.mean[c] - a.mean[c] - a.covariates.row(c).dot(shift)) < 1e-10);
        CHECK(std::abs(b.sd[c] - a.sd[c]) < 1e-10);
    }
}

TEST_CASE("cell means and sds match a two-pass reference") {
    Rng rng(85);
    const Setup s = make_setup(60, 85);
    SurfaceGrid g = random_grid(12, rng);
    g.points[3] = s.cache.locations()[2];
    estimate_surface(s.draws(), g, &s.cache);
    for (Eigen::Index c = 0; c < 12; ++c) {
        std::vector<double> v;
        for (const auto& d : s.storage)
            v.push_back(g.covariates.row(c).dot(d.beta_star) + krige_dense(g.points[std::size_t(c)], d, s.cache));
        double m = 0.0;
        for (double x : v) m += x;
        m /= double(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        CHECK(std::abs(g.mean[c] - m) < 1e-10);
        CHECK(std::abs(g.sd[c] - std::sqrt(ss / double(v.size()))) < 1e-10);
    }
}

TEST_CASE("thinning and masking") {
    Rng rng(86);
    const Setup s = make_setup(20, 86);
    SurfaceGrid g = random_grid(5, rng);
    g.masked[1] = true;
    estimate_surface(s.draws(), g, &s.cache, 20);
    CHECK(g.sd[0] == 0.0);  // a single retained draw
    CHECK(std::isnan(g.mean[1]));
    CHECK_THROWS_AS(estimate_surface(s.draws(), g, &s.cache, 0), DomainError);
}

TEST_CASE("grid files") {
    const Setup s = make_setup(5, 87);
    const auto dir = test::scratch_dir("surface_grid");
    test::write_text(dir + "/grid.csv", "lon,lat,x_2,x_1\n1,2,0.5,0.25\n3,4,NA,1\n");
    SurfaceGrid g = read_surface_grid(dir + "/grid.csv", s.design);
    REQUIRE(g.size() == 2);
    CHECK(g.covariates(0, 0) == 0.25);  // columns follow the design order
    CHECK(g.covariates(0, 1) == 0.5);
    CHECK(g.masked == std::vector<bool>{false, true});

    estimate_surface(s.draws(), g, &s.cache);
    write_surface_csv(g, dir + "/surface.csv");
    const CsvTable out = read_csv(dir + "/surface.csv");
    CHECK(out.header == std::vector<std::string>{"lon", "lat", "mean", "sd", "masked"});
    CHECK(out.rows[1] == std::vector<std::string>{"3", "4", "NA", "NA", "1"});
    CHECK(parse_double(out.rows[0][2], "t") == g.mean[0]);

    test::write_text(dir + "/extra.csv", "lon,lat,x_1,x_2,x_3\n1,2,0,0,0\n");
    CHECK_THROWS_AS(read_surface_grid(dir + "/extra.csv", s.design), DomainError);
    test::write_text(dir + "/short.csv", "lon,lat,x_1\n1,2,0\n");
    CHECK_THROWS_AS(read_surface_grid(dir + "/short.csv", s.design), DomainError);
}

TEST_CASE("potential path bands") {
    Rng rng(88);
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 0, 1, 1, 1, -2, 0.5;

    std::vector<Draw> constant(50);
    for (auto& d : constant) d.beta_star = Eigen::Vector2d(0.3, 0.9);
    std::vector<const Draw*> cp;
    for (const auto& d : constant) cp.push_back(&d);
    const PotentialBand flat = evaluate_potential_path(cp, x);
    CHECK((flat.upper - flat.lower).cwiseAbs().maxCoeff() == 0.0);

    // beta_1 ~ N(5, 1): the band at x = (1, 0) has the normal quantiles.
    std::vector<Draw> normal(10'000);
    for (auto& d : normal) d.beta_star = Eigen::Vector2d(5.0 + rng.normal(), rng.normal());
    std::vector<const Draw*> np;
    for (const auto& d : normal) np.push_back(&d);
    const PotentialBand band = evaluate_potential_path(np, x);
    for (Eigen::Index t = 0; t < 4; ++t) {
        CHECK(band.lower[t] <= band.mean[t]);
        CHECK(band.mean[t] <= band.upper[t]);
    }
    const boost::math::normal dist(5.0, 1.0);
    CHECK(std::abs(band.lower[0] / boost::math::quantile(dist, 0.025) - 1.0) < 0.01);
    CHECK(std::abs(band.upper[0] / boost::math::quantile(dist, 0.975) - 1.0) < 0.01);
}
