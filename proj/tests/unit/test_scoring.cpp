#include "test_support.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/scoring.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace codyad;

namespace {

// CRPS from its integral definition, split at the observation.
double crps_quadrature(double y, double mu, double sigma) {
    auto f = [&](double u) { return 0.5 * std::erfc(-(u - mu) / (sigma * std::numbers::sqrt2)); };
    auto g = [&](double u) { return 0.5 * std::erfc((u - mu) / (sigma * std::numbers::sqrt2)); };
    const double lo = std::min(y, mu - 14.0 * sigma), hi = std::max(y, mu + 14.0 * sigma);
    return test::simpson([&](double u) { return f(u) * f(u); }, lo, y, 20000) +
           test::simpson([&](double u) { return g(u) * g(u); }, y, hi, 20000);
}

struct Instance {
    NodeTable nodes;
    DyadSet dyads;
    DesignMatrix design;
};

Instance three_dyads() {
    Instance in;
    in.nodes.covariate_names = {"x_1"};
    in.nodes.nodes.push_back(test::scalar_node(1, 0, 0, 0, {0.2}, 0.1));
    in.nodes.nodes.push_back(test::scalar_node(2, 1, 0, 1, {1.0}, 1.3));
    in.nodes.nodes.push_back(test::scalar_node(3, 0, 2, 3, {-0.4}, -0.6));
    in.dyads = build_dyads(in.nodes, {}, CoordinateMode::Planar);
    in.design = build_design(in.nodes, in.dyads);
    return in;
}

}  // namespace

TEST_CASE("closed-form CRPS values") {
    CHECK(std::abs(crps_gaussian(0.0, 0.0, 1.0) - 0.23370) < 1e-5);
    CHECK(std::abs(crps_gaussian(1.0, 0.0, 1.0) - 0.60244) < 1e-5);
    CHECK(std::abs(crps_quadrature(0.0, 0.0, 1.0) - 0.23370) < 1e-5);
    CHECK(std::abs(crps_quadrature(1.0, 0.0, 1.0) - 0.60244) < 1e-5);
    CHECK(crps_gaussian(2.5, -1.0, 0.0) == 3.5);
    CHECK_THROWS_AS(crps_gaussian(0.0, 0.0, -1.0), DomainError);
}

TEST_CASE("closed form matches the integral definition") {
    Rng rng(91);
    for (int k = 0; k < 100; ++k) {
        const double mu = 3.0 * rng.normal(), sigma = 0.05 + 3.0 * rng.uniform();
        const double y = mu + sigma * 3.0 * rng.normal();
        CHECK(std::abs(crps_gaussian(y, mu, sigma) - crps_quadrature(y, mu, sigma)) < 1e-8);
    }
}

TEST_CASE("CRPS translation and scale") {
    Rng rng(92);
    for (int k = 0; k < 100; ++k) {
        const double y = rng.normal(), mu = rng.normal(), sigma = 0.1 + rng.uniform();
        const double c = 10.0 * rng.normal(), a = 0.1 + 5.0 * rng.uniform();
        const double base = crps_gaussian(y, mu, sigma);
        CHECK(crps_gaussian(y + c, mu + c, sigma) == doctest::Approx(base).epsilon(1e-10));
        CHECK(crps_gaussian(a * y, a * mu, a * sigma) == doctest::Approx(a * base).epsilon(1e-12));
    }
    // At y = mu the score grows with sigma.
    double prev = 0.0;
    for (double s : {0.0, 0.1, 0.5, 1.0, 3.0}) {
        const double v = crps_gaussian(1.0, 1.0, s);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("mixture score against a quadrature double loop") {
    const Instance in = three_dyads();
    const WeightSpec spec = WeightSpec::time_space(true, false);
    std::vector<Draw> draws(2);
    draws[0].beta_star = Eigen::VectorXd::Constant(1, 1.1);
    draws[0].sigma2_y = 0.4;
    draws[0].gamma = Eigen::Vector2d(0.5, 0.0);
    draws[1].beta_star = Eigen::VectorXd::Constant(1, 0.7);
    draws[1].sigma2_y = 0.9;
    draws[1].gamma = Eigen::Vector2d(1.5, 0.0);
    const std::vector<const Draw*> ptrs{&draws[0], &draws[1]};

    double want = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
        const Node& ni = in.nodes.nodes[std::size_t(in.dyads.node_i[r])];
        const Node& nj = in.nodes.nodes[std::size_t(in.dyads.node_j[r])];
        const double y = std::get<double>(nj.response) - std::get<double>(ni.response);
        const double dx = nj.covariates[0] - ni.covariates[0];
        const double dt = std::abs(nj.time - ni.time) / 3.0;
        for (const auto& d : draws) {
            const double w = std::exp(-d.gamma[0] * dt);
            want += crps_quadrature(y, d.beta_star[0] * dx, std::sqrt(d.sigma2_y / w)) / 6.0;
        }
    }
    const ModelScore got = score_model(in.dyads, in.design, spec, ptrs, "time");
    CHECK(std::abs(got.crps - want) < 1e-6);
    CHECK(got.draws_used == 2);
    CHECK(got.label == "time");
    CHECK(std::abs(score_model(in.dyads, in.design, spec, ptrs, "time", CrpsMode::Mixture, 3).crps - got.crps) < 1e-15);

    // Plug-in: one predictive at the posterior means.
    double plug = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
        const Node& ni = in.nodes.nodes[std::size_t(in.dyads.node_i[r])];
        const Node& nj = in.nodes.nodes[std::size_t(in.dyads.node_j[r])];
        const double y = std::get<double>(nj.response) - std::get<double>(ni.response);
        const double dt = std::abs(nj.time - ni.time) / 3.0;
        const double w = std::exp(-1.0 * dt);
        plug += crps_quadrature(y, 0.9 * (nj.covariates[0] - ni.covariates[0]), std::sqrt(0.65 / w)) / 3.0;
    }
    CHECK(std::abs(score_model(in.dyads, in.design, spec, ptrs, "t", CrpsMode::PlugIn).crps - plug) < 1e-6);
}

TEST_CASE("perfect point predictions score near zero") {
    const Instance in = three_dyads();
    // y = x~ * beta exactly for this beta? Fit the single-covariate least squares solution instead.
    Draw d;
    d.beta_star = Eigen::VectorXd::Constant(1, 0.0);
    d.sigma2_y = 1e-14;
    Instance exact = in;
    exact.dyads.y = exact.design.x.col(0) * 1.7;
    d.beta_star[0] = 1.7;
    const ModelScore s = score_model(exact.dyads, exact.design, {}, {&d}, "none");
    CHECK(s.crps < 1e-6);
    CHECK(std::isnan(score_model(in.dyads, in.design, {}, {}, "none").crps));
}

TEST_CASE("holdout split") {
    Rng rng(93);
    const auto [fit, test] = holdout_split(100, 0.2, rng);
    CHECK(test.size() == 20);
    CHECK(fit.size() == 80);
    CHECK(std::is_sorted(fit.begin(), fit.end()));
    std::set<std::size_t> all(fit.begin(), fit.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == 100);
    CHECK(holdout_split(10, 0.0, rng).second.empty());
    CHECK_THROWS_AS(holdout_split(10, 1.0, rng), DomainError);
}

TEST_CASE("scores file") {
    const auto dir = test::scratch_dir("scores");
    write_scores_csv({{"none", 0.25, 10, {}}, {"space-time", 0.125, 10, {}}}, dir + "/scores.csv");
    const CsvTable t = read_csv(dir + "/scores.csv");
    CHECK(t.header == std::vector<std::string>{"model", "crps", "draws_used"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][0] == "space-time");
    CHECK(parse_double(t.rows[1][1], "t") == 0.125);
}
