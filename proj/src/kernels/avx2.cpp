// AVX2 + FMA kernel variants. This translation unit is compiled with -mavx2 -mfma
// and only reached through avx2_kernels() after a CPUID check.

#include "codyad/kernels/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <numbers>

namespace codyad::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d x) {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

// Per-lane Neumaier accumulator.
struct LaneSum {
    __m256d sum = _mm256_setzero_pd();
    __m256d comp = _mm256_setzero_pd();

    void add(__m256d x) {
        const __m256d t = _mm256_add_pd(sum, x);
        const __m256d big_sum = _mm256_cmp_pd(abs_pd(sum), abs_pd(x), _CMP_GE_OQ);
        const __m256d a = _mm256_add_pd(_mm256_sub_pd(sum, t), x);
        const __m256d b = _mm256_add_pd(_mm256_sub_pd(x, t), sum);
        comp = _mm256_add_pd(comp, _mm256_blendv_pd(b, a, big_sum));
        sum = t;
    }

    // Fold lanes and the scalar tail in a fixed order.
    template <class Tail>
    double finish(std::size_t begin, std::size_t n, Tail tail) const {
        alignas(32) double s[kLanes];
        alignas(32) double c[kLanes];
        _mm256_store_pd(s, sum);
        _mm256_store_pd(c, comp);
        double total = 0.0;
        double total_comp = 0.0;
        auto add = [&](double x) {
            const double t = total + x;
            if (std::abs(total) >= std::abs(x))
                total_comp += (total - t) + x;
            else
                total_comp += (x - t) + total;
            total = t;
        };
        for (std::size_t l = 0; l < kLanes; ++l) add(s[l]);
        for (std::size_t i = begin; i < n; ++i) add(tail(i));
        for (std::size_t l = 0; l < kLanes; ++l) total_comp += c[l];
        return total + total_comp;
    }
};

// exp(x) for x in [-708.39, 709]; below that range the result is flushed to 0.
// Cody-Waite reduction by ln 2 and a degree-13 Taylor polynomial on |r| <= ln2/2.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(-708.3964185322641);
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(std::numbers::log2e)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

    static constexpr double c[] = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
        1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
        1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         0.5,
        1.0,                1.0};
    __m256d p = _mm256_set1_pd(c[0]);
    for (std::size_t k = 1; k < std::size(c); ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[k]));

    const __m128i ni = _mm256_cvtpd_epi32(n);
    __m256i bits = _mm256_cvtepi32_epi64(ni);
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(underflow, result);
}

double sum(const double* x, std::size_t n) {
    LaneSum acc;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) acc.add(_mm256_loadu_pd(x + i));
    return acc.finish(i, n, [&](std::size_t k) { return x[k]; });
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
    LaneSum acc;
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
        acc.add(_mm256_mul_pd(wa, _mm256_loadu_pd(b + i)));
    }
    return acc.finish(i, n, [&](std::size_t k) { return w[k] * a[k] * b[k]; });
}

void composite_weights(const double* basis, std::size_t n, std::size_t q, const double* gamma,
                       double* s, double* w) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t p = 0; p < q; ++p)
            acc = _mm256_fmadd_pd(_mm256_set1_pd(gamma[p]), _mm256_loadu_pd(basis + p * n + i), acc);
        _mm256_storeu_pd(s + i, acc);
        _mm256_storeu_pd(w + i, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), acc)));
    }
    for (; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < q; ++p) acc = std::fma(gamma[p], basis[p * n + i], acc);
        s[i] = acc;
        w[i] = std::exp(-acc);
    }
}

double weighted_gaussian_loglik(const double* resid, const double* s, const double* w,
                                std::size_t n, double sigma2) {
    LaneSum acc;
    const double half_inv = 0.5 / sigma2;
    const __m256d vhalf_inv = _mm256_set1_pd(half_inv);
    const __m256d vmhalf = _mm256_set1_pd(-0.5);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d r = _mm256_loadu_pd(resid + i);
        const __m256d wr2 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(r, r));
        const __m256d term = _mm256_fnmadd_pd(wr2, vhalf_inv, _mm256_mul_pd(vmhalf, _mm256_loadu_pd(s + i)));
        acc.add(term);
    }
    const double total = acc.finish(i, n, [&](std::size_t k) {
        return -0.5 * s[k] - w[k] * resid[k] * resid[k] * half_inv;
    });
    return total - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * sigma2);
}

void exp_neg_scaled(const double* d, std::size_t n, double scale, double* out) {
    const __m256d vscale = _mm256_set1_pd(-scale);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        _mm256_storeu_pd(out + i, exp_pd(_mm256_mul_pd(_mm256_loadu_pd(d + i), vscale)));
    for (; i < n; ++i) out[i] = std::exp(-d[i] * scale);
}

void residuals(const ResidualArgs& a, std::size_t n, double* out) {
    std::size_t r = 0;
    for (; r + kLanes <= n; r += kLanes) {
        __m256d v = _mm256_loadu_pd(a.y + r);
        if (a.fixed) v = _mm256_sub_pd(v, _mm256_loadu_pd(a.fixed + r));
        if (a.eta) {
            const __m128i li = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.loc_i + r));
            const __m128i lj = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.loc_j + r));
            const __m256d ej = _mm256_i32gather_pd(a.eta, lj, 8);
            const __m256d ei = _mm256_i32gather_pd(a.eta, li, 8);
            v = _mm256_sub_pd(v, _mm256_sub_pd(ej, ei));
        }
        if (a.theta) {
            const __m128i ni = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.node_i + r));
            const __m128i nj = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.node_j + r));
            const __m256d ti = _mm256_i32gather_pd(a.theta, ni, 8);
            const __m256d tj = _mm256_i32gather_pd(a.theta, nj, 8);
            v = _mm256_sub_pd(v, _mm256_add_pd(ti, tj));
        }
        _mm256_storeu_pd(out + r, v);
    }
    for (; r < n; ++r) {
        double v = a.y[r];
        if (a.fixed) v -= a.fixed[r];
        if (a.eta) v -= a.eta[a.loc_j[r]] - a.eta[a.loc_i[r]];
        if (a.theta) v -= a.theta[a.node_i[r]] + a.theta[a.node_j[r]];
        out[r] = v;
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        "avx2", &sum, &weighted_dot, &composite_weights, &weighted_gaussian_loglik, &exp_neg_scaled,
        &residuals};
    return table;
}

}  // namespace codyad::kernels
