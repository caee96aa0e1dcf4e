#include "test_support.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace codyad;

TEST_CASE("noise-free series follow the potential") {
    Ar1Config cfg;
    cfg.response_noise = false;
    cfg.y0 = 0.0;
    Rng rng(41);
    const Ar1Data d = generate_ar1(cfg, rng);
    REQUIRE(d.nodes.nodes.size() == 15);
    for (Eigen::Index t = 0; t < 15; ++t) {
        CHECK(std::abs(d.y[t] - d.x.row(t).dot(cfg.beta)) < 1e-12);
        CHECK(d.potential[t] == doctest::Approx(d.x.row(t).dot(cfg.beta)));
        CHECK(d.nodes.nodes[std::size_t(t)].time == double(t + 1));
    }
}

TEST_CASE("series are reproducible from the seed") {
    Rng a(42), b(42), c(43);
    const Ar1Data x = generate_ar1({}, a), y = generate_ar1({}, b), z = generate_ar1({}, c);
    CHECK(x.y == y.y);
    CHECK(x.x == y.x);
    CHECK(x.y != z.y);
}

TEST_CASE("series innovation variance") {
    Ar1Config cfg;
    Rng rng(44);
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 7000; ++rep) {
        const Ar1Data d = generate_ar1(cfg, rng);
        Eigen::Vector2d x_prev = Eigen::Vector2d::Zero();
        double y_prev = cfg.y0;
        for (Eigen::Index t = 0; t < 15; ++t) {
            const Eigen::Vector2d x = d.x.row(t).transpose();
            const double e = d.y[t] - y_prev - (x - x_prev).dot(cfg.beta);
            sum += e;
            sum2 += e * e;
            ++count;
            x_prev = x;
            y_prev = d.y[t];
        }
    }
    const double mean = sum / double(count);
    CHECK(std::abs(mean) < 0.002);
    CHECK(std::abs((sum2 / double(count) - mean * mean) / 0.01 - 1.0) < 0.03);
}

TEST_CASE("series configuration checks") {
    Ar1Config bad;
    bad.steps = 1;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = {};
    bad.sigma2_0 = -1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("full-model generator reduces to the regression when effects are off") {
    FullModelConfig cfg;
    cfg.nodes = 20;
    cfg.truth.beta = Eigen::Vector2d(0.5, -1.0);
    cfg.truth.sigma2_y = 0.3;
    cfg.truth.sigma2_eta = 0.0;
    cfg.truth.sigma2_theta = 0.0;
    Rng rng(45);
    double sum2 = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const SimulatedDataset s = generate_full_model(cfg, rng);
        CHECK(s.dyads.size() == 190);
        const Eigen::VectorXd r = s.dyads.y - s.design.x * cfg.truth.beta;
        sum2 += r.squaredNorm();
        count += std::size_t(r.size());
    }
    CHECK(std::abs(sum2 / double(count) / 0.3 - 1.0) < 0.05);
}

TEST_CASE("full-model dyad variance scales with the inverse weight") {
    FullModelConfig cfg;
    cfg.nodes = 20;
    cfg.truth.beta = Eigen::Vector2d(0.5, -1.0);
    cfg.truth.sigma2_y = 0.3;
    cfg.truth.sigma2_eta = 0.0;
    cfg.truth.sigma2_theta = 0.0;
    cfg.weights = WeightSpec::time_space(true, true);
    cfg.truth.gamma = Eigen::Vector2d(1.5, 0.7);
    Rng rng(46);
    double sum2 = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const SimulatedDataset s = generate_full_model(cfg, rng);
        const Eigen::VectorXd r = s.dyads.y - s.design.x * cfg.truth.beta;
        for (Eigen::Index k = 0; k < r.size(); ++k) {
            const double w = std::exp(-1.5 * s.dyads.dt_scaled[k] - 0.7 * s.dyads.ds_scaled[k]);
            sum2 += r[k] * r[k] * w / 0.3;
            ++count;
        }
    }
    CHECK(std::abs(sum2 / double(count) - 1.0) < 0.05);
}

TEST_CASE("full-model truth and orientation") {
    FullModelConfig cfg;
    cfg.nodes = 15;
    cfg.truth.beta = Eigen::Vector2d(1.0, 2.0);
    cfg.truth.sigma2_y = 0.1;
    cfg.truth.sigma2_eta = 0.5;
    cfg.truth.sigma2_theta = 0.2;
    cfg.truth.phi = 3.0;
    Rng rng(47);
    const SimulatedDataset s = generate_full_model(cfg, rng);
    CHECK(s.dyads.size() == 105);
    CHECK(s.truth.eta.size() == Eigen::Index(s.dyads.location_count()));
    CHECK(s.truth.theta.size() == 15);
    for (std::size_t r = 0; r < s.dyads.size(); ++r) {
        const auto& ni = s.nodes.nodes[std::size_t(s.dyads.node_i[r])];
        const auto& nj = s.nodes.nodes[std::size_t(s.dyads.node_j[r])];
        CHECK(ni.time <= nj.time);
        CHECK(s.design.x(Eigen::Index(r), 0) == doctest::Approx(nj.covariates[0] - ni.covariates[0]));
    }
    cfg.truth.beta = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(generate_full_model(cfg, rng), DomainError);

    const auto dir = test::scratch_dir("truth");
    write_truth_csv(s.truth, s.design.names, dir + "/truth.csv");
    const CsvTable t = read_csv(dir + "/truth.csv");
    CHECK(t.header == std::vector<std::string>{"parameter", "value"});
    CHECK(t.rows.front()[0].find("x_1") != std::string::npos);
}

TEST_CASE("appendix run shapes and artifacts") {
    AppendixAOptions opt;
    opt.iterations = 2000;
    opt.thin = 5;
    const AppendixAReport r = run_appendix_a(7, opt);
    CHECK(r.dyads.size() == 105);
    CHECK(r.weighted.gamma_mean.size() == 6);
    CHECK(r.unweighted.gamma_mean.size() == 0);
    CHECK(r.unweighted.variance_multiplier_dt1 == 1.0);
    REQUIRE(r.weighted.weight_matrix.rows() == 15);
    for (Eigen::Index t = 0; t < 15; ++t) CHECK(r.weighted.weight_matrix(t, t) == 0.0);
    CHECK((r.weighted.weight_matrix - r.weighted.weight_matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.weighted.variance_multiplier_dt3 >= r.weighted.variance_multiplier_dt1);
    for (const ScenarioResult* s : {&r.unweighted, &r.weighted}) {
        CHECK(s->band.mean.size() == 15);
        CHECK((s->band.lower.array() <= s->band.upper.array()).all());
        CHECK(s->covered <= 15);
    }

    const auto dir = test::scratch_dir("appendix");
    write_appendix_a({r}, dir);
    namespace fs = std::filesystem;
    CHECK(fs::exists(dir + "/appendixA_summary.csv"));
    for (const char* f : {"truth.csv", "potential_band.csv", "weight_matrix.csv"})
        CHECK(fs::exists(dir + "/seed_7/" + std::string(f)));
    const CsvTable sum = read_csv(dir + "/appendixA_summary.csv");
    CHECK(sum.rows.size() == 2);
    CHECK(read_csv(dir + "/seed_7/weight_matrix.csv").rows.size() == 225);
    CHECK(read_csv(dir + "/seed_7/potential_band.csv").rows.size() == 15);
}
