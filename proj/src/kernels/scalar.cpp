#include "codyad/kernels/kernels.hpp"

#include <cmath>
#include <numbers>

namespace codyad::kernels {
namespace {

struct Neumaier {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

double sum(const double* x, std::size_t n) {
    Neumaier acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(x[i]);
    return acc.value();
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
    Neumaier acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(w[i] * a[i] * b[i]);
    return acc.value();
}

void composite_weights(const double* basis, std::size_t n, std::size_t q, const double* gamma,
                       double* s, double* w) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < q; ++p) acc += gamma[p] * basis[p * n + i];
        s[i] = acc;
        w[i] = std::exp(-acc);
    }
}

double weighted_gaussian_loglik(const double* resid, const double* s, const double* w,
                                std::size_t n, double sigma2) {
    Neumaier acc;
    const double half_inv = 0.5 / sigma2;
    for (std::size_t i = 0; i < n; ++i) acc.add(-0.5 * s[i] - w[i] * resid[i] * resid[i] * half_inv);
    return acc.value() - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * sigma2);
}

void exp_neg_scaled(const double* d, std::size_t n, double scale, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-d[i] * scale);
}

void residuals(const ResidualArgs& a, std::size_t n, double* out) {
    for (std::size_t r = 0; r < n; ++r) {
        double v = a.y[r];
        if (a.fixed) v -= a.fixed[r];
        if (a.eta) v -= a.eta[a.loc_j[r]] - a.eta[a.loc_i[r]];
        if (a.theta) v -= a.theta[a.node_i[r]] + a.theta[a.node_j[r]];
        out[r] = v;
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar", &sum, &weighted_dot, &composite_weights, &weighted_gaussian_loglik, &exp_neg_scaled,
        &residuals};
    return table;
}

}  // namespace codyad::kernels
