#include "test_support.hpp"

#include "codyad/kernels/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

using namespace codyad;
using kernels::KernelTable;

namespace {

struct Data {
    std::vector<double> a, b, w, basis, gamma, d, y, fixed, eta, theta;
    std::vector<std::int32_t> loc_i, loc_j, node_i, node_j;
};

Data make(std::size_t n, std::size_t q, Rng& rng) {
    Data x;
    auto fill = [&](std::vector<double>& v, std::size_t len, double lo, double hi) {
        v.resize(len);
        for (auto& e : v) e = lo + (hi - lo) * rng.uniform();
    };
    fill(x.a, n, -3, 3);
    fill(x.b, n, -3, 3);
    fill(x.w, n, 0.01, 1);
    fill(x.basis, n * q, 0, 1);
    fill(x.gamma, q, 0, 2);
    fill(x.d, n, 0, 500);
    fill(x.y, n, -2, 2);
    fill(x.fixed, n, -1, 1);
    fill(x.eta, 7, -1, 1);
    fill(x.theta, 9, -1, 1);
    for (std::size_t r = 0; r < n; ++r) {
        x.loc_i.push_back(std::int32_t(rng.uniform() * 7));
        x.loc_j.push_back(std::int32_t(rng.uniform() * 7));
        x.node_i.push_back(std::int32_t(rng.uniform() * 9));
        x.node_j.push_back(std::int32_t(rng.uniform() * 9));
    }
    return x;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Plain reference loops, independent of both tables.
double ref_loglik(const std::vector<double>& r, const std::vector<double>& s, const std::vector<double>& w,
                  double sigma2) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < r.size(); ++i) acc += -0.5L * s[i] - w[i] * r[i] * r[i] / (2.0L * sigma2);
    return double(acc - 0.5L * r.size() * std::log(2.0L * std::numbers::pi_v<long double> * sigma2));
}

void check_table(const KernelTable& kt, const Data& x, std::size_t n, std::size_t q) {
    long double sum = 0.0L, dot = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        sum += x.a[i];
        dot += (long double)x.w[i] * x.a[i] * x.b[i];
    }
    CHECK(rel(kt.sum(x.a.data(), n), double(sum)) < 1e-13);
    CHECK(rel(kt.weighted_dot(x.w.data(), x.a.data(), x.b.data(), n), double(dot)) < 1e-13);

    std::vector<double> s(n), w(n);
    kt.composite_weights(x.basis.data(), n, q, x.gamma.data(), s.data(), w.data());
    for (std::size_t i = 0; i < n; ++i) {
        double want = 0.0;
        for (std::size_t p = 0; p < q; ++p) want += x.gamma[p] * x.basis[p * n + i];
        CHECK(rel(s[i], want) < 1e-14);
        CHECK(rel(w[i], std::exp(-want)) < 1e-13);
    }
    CHECK(rel(kt.weighted_gaussian_loglik(x.a.data(), s.data(), w.data(), n, 0.37), ref_loglik(x.a, s, w, 0.37)) <
          1e-12);

    std::vector<double> e(n);
    kt.exp_neg_scaled(x.d.data(), n, 0.013, e.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(rel(e[i], std::exp(-x.d[i] * 0.013)) < 1e-13);

    kernels::ResidualArgs args{x.y.data(),      x.fixed.data(), x.eta.data(),    x.loc_i.data(),
                               x.loc_j.data(),  x.theta.data(), x.node_i.data(), x.node_j.data()};
    std::vector<double> out(n);
    kt.residuals(args, n, out.data());
    for (std::size_t i = 0; i < n; ++i) {
        const double want = x.y[i] - x.fixed[i] - (x.eta[x.loc_j[i]] - x.eta[x.loc_i[i]]) -
                            (x.theta[x.node_i[i]] + x.theta[x.node_j[i]]);
        CHECK(std::abs(out[i] - want) < 1e-14);
    }
    // Optional blocks may be absent.
    kernels::ResidualArgs bare{x.y.data()};
    kt.residuals(bare, n, out.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == x.y[i]);
}

}  // namespace

TEST_CASE("scalar kernels match reference loops") {
    Rng rng(41);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 1000u}) {
        const Data x = make(n, 3, rng);
        check_table(kernels::scalar_kernels(), x, n, 3);
    }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
    const KernelTable* v = kernels::avx2_kernels();
    if (!v) {
        MESSAGE("AVX2 kernels unavailable on this machine; skipped");
        return;
    }
    const KernelTable& s = kernels::scalar_kernels();
    Rng rng(42);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 4096u, 19'900u}) {
        for (std::size_t q : {1u, 2u, 6u}) {
            const Data x = make(n, q, rng);
            check_table(*v, x, n, q);
            CHECK(rel(v->sum(x.a.data(), n), s.sum(x.a.data(), n)) < 1e-14);
            CHECK(rel(v->weighted_dot(x.w.data(), x.a.data(), x.b.data(), n),
                      s.weighted_dot(x.w.data(), x.a.data(), x.b.data(), n)) < 1e-14);
            std::vector<double> s1(n), w1(n), s2(n), w2(n);
            s.composite_weights(x.basis.data(), n, q, x.gamma.data(), s1.data(), w1.data());
            v->composite_weights(x.basis.data(), n, q, x.gamma.data(), s2.data(), w2.data());
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(rel(s1[i], s2[i]) < 1e-14);
                CHECK(rel(w1[i], w2[i]) < 1e-13);
            }
        }
    }
    CHECK(v->name != s.name);
}

TEST_CASE("dispatch") {
    CHECK(&kernels::select(true) == &kernels::scalar_kernels());
    if (kernels::avx2_kernels() && !std::getenv("CODYAD_KERNELS"))
        CHECK(&kernels::select(false) == kernels::avx2_kernels());
}
