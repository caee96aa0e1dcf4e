#include "test_support.hpp"

#include "codyad/errors.hpp"
#include "codyad/gp.hpp"
#include "codyad/log.hpp"

#include <doctest.h>

#include <cmath>

using namespace codyad;

namespace {

std::vector<Location> random_locations(std::size_t m, Rng& rng, double box = 100.0) {
    std::vector<Location> out(m);
    for (auto& l : out) l = {box * rng.uniform(), box * rng.uniform()};
    return out;
}

}  // namespace

TEST_CASE("phi support rule") {
    const PhiSupport s = PhiSupport::from_rule(300.0, 10.0);
    CHECK(s.values.front() == 0.0);
    CHECK(s.values.back() == doctest::Approx(100.0));
    CHECK(s.values.size() == 11);
    CHECK(s.median_index() == 5);
    CHECK_THROWS_AS(PhiSupport::from_rule(300.0, 0.0), DomainError);
    CHECK_THROWS_AS(PhiSupport::from_rule(300.0, -1.0), DomainError);
    CHECK_THROWS_AS((PhiSupport{{1.0, 1.0}}.validate()), DomainError);
    CHECK_THROWS_AS((PhiSupport{{}}.validate()), DomainError);
}

TEST_CASE("correlation entries") {
    Rng rng(51);
    auto locs = random_locations(5, rng);
    locs.push_back(locs[1]);  // a ds = 0 pair
    set_warning_echo(false);
    const CovarianceCache cache(locs, CoordinateMode::Planar, PhiSupport{{0.0, 50.0}});
    set_warning_echo(true);
    CHECK((cache.entry(0).correlation - Eigen::MatrixXd::Identity(6, 6)).norm() == 0.0);
    const Eigen::MatrixXd& r = cache.entry(1).correlation;
    CHECK(r(1, 5) == 1.0);
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
            const double d = std::hypot(locs[a].x - locs[b].x, locs[a].y - locs[b].y);
            CHECK(r(a, b) == doctest::Approx(std::exp(-d / 50.0)).epsilon(1e-14));
        }
    // Duplicated site makes R singular; the factor needed jitter and it was reported.
    CHECK(cache.entry(1).jitter > 0.0);
    CHECK(cache.jitter_events().size() == 1);
}

TEST_CASE("log determinant from the factor matches eigenvalues") {
    Rng rng(52);
    for (std::size_t m : {3u, 10u, 50u}) {
        const CovarianceCache cache(random_locations(m, rng), CoordinateMode::Planar, PhiSupport{{0.0, 5.0, 20.0}});
        for (std::size_t k = 0; k < cache.size(); ++k) {
            const auto& e = cache.entry(k);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(e.correlation);
            CHECK(std::abs(e.log_det - eig.eigenvalues().array().log().sum()) < 1e-6);
            CHECK((e.inverse * e.correlation - Eigen::MatrixXd::Identity(Eigen::Index(m), Eigen::Index(m)))
                      .cwiseAbs()
                      .maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("correlation decays with distance and grows with phi") {
    Eigen::MatrixXd d(1, 1);
    double prev = 1.0;
    for (double ds : {0.0, 0.5, 1.0, 4.0, 30.0}) {
        d(0, 0) = ds;
        const double v = exponential_correlation(d, 3.0)(0, 0);
        CHECK(v <= prev);
        prev = v;
    }
    d(0, 0) = 2.0;
    prev = 0.0;
    for (double phi : {0.1, 1.0, 3.0, 10.0}) {
        const double v = exponential_correlation(d, phi)(0, 0);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("gp simulation") {
    Rng rng(53);
    const CovarianceCache one({{0, 0}}, CoordinateMode::Planar, PhiSupport{{1.0}});
    CHECK(gp_simulate(one.entry(0), 0.0, rng).norm() == 0.0);
    CHECK_THROWS_AS(gp_simulate(one.entry(0), -1.0, rng), DomainError);

    const int draws = 100'000;
    double ss = 0.0;
    for (int k = 0; k < draws; ++k) ss += std::pow(gp_simulate(one.entry(0), 2.5, rng)[0], 2);
    CHECK(std::abs(ss / draws / 2.5 - 1.0) < 0.03);

    const CovarianceCache four(random_locations(4, rng, 10.0), CoordinateMode::Planar, PhiSupport{{8.0}});
    std::vector<Eigen::VectorXd> xs;
    for (int k = 0; k < draws; ++k) xs.push_back(gp_simulate(four.entry(0), 1.5, rng));
    const auto m = test::moments(xs);
    const Eigen::MatrixXd want = 1.5 * four.entry(0).correlation;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) CHECK(std::abs(m.cov(a, b) - want(a, b)) < 0.05 * want(a, b));
}

TEST_CASE("kriging") {
    Rng rng(54);
    const auto locs = random_locations(7, rng, 20.0);
    const CovarianceCache cache(locs, CoordinateMode::Planar, PhiSupport{{0.0, 6.0}});
    const Eigen::VectorXd eta = Eigen::VectorXd::Random(7);
    for (std::size_t k = 0; k < 7; ++k) CHECK(krige_predict(locs[k], eta, cache, 1) == eta[Eigen::Index(k)]);
    CHECK(krige_predict({3, 4}, Eigen::VectorXd::Zero(7), cache, 1) == 0.0);
    CHECK(krige_predict({3, 4}, eta, cache, 0) == 0.0);

    // Conditional-normal mean solved with a generic LU on a freshly filled R.
    for (int k = 0; k < 20; ++k) {
        const Location s{20.0 * rng.uniform(), 20.0 * rng.uniform()};
        Eigen::MatrixXd r(7, 7);
        Eigen::VectorXd c(7);
        for (int a = 0; a < 7; ++a) {
            c[a] = std::exp(-std::hypot(s.x - locs[a].x, s.y - locs[a].y) / 6.0);
            for (int b = 0; b < 7; ++b)
                r(a, b) = std::exp(-std::hypot(locs[a].x - locs[b].x, locs[a].y - locs[b].y) / 6.0);
        }
        const double want = c.dot(r.fullPivLu().solve(eta));
        CHECK(std::abs(krige_predict(s, eta, cache, 1) - want) < 1e-8);

        // Linearity in eta.
        const Eigen::VectorXd e2 = Eigen::VectorXd::Random(7);
        const double a = rng.normal(), b = rng.normal();
        CHECK(std::abs(krige_predict(s, a * eta + b * e2, cache, 1) -
                       (a * krige_predict(s, eta, cache, 1) + b * krige_predict(s, e2, cache, 1))) < 1e-10);
    }
    CHECK_THROWS_AS(krige_predict({0, 0}, Eigen::VectorXd::Zero(3), cache, 1), DomainError);
}
