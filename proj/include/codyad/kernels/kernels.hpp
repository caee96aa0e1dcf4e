#pragma once

// Per-dyad inner loops. Every kernel has a scalar reference implementation
// and, where the CPU supports it, an AVX2+FMA variant selected at runtime.
// The scalar table sums strictly left to right with Neumaier compensation;
// the vector tables keep one compensated accumulator per lane and fold the
// lanes at the end, so results agree with the scalar table to rounding but
// are not bit-identical.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace codyad::kernels {

struct ResidualArgs {
    const double* y = nullptr;        // dyadic outcomes
    const double* fixed = nullptr;    // x~'beta per dyad (may be null)
    const double* eta = nullptr;      // location effects (may be null)
    const std::int32_t* loc_i = nullptr;
    const std::int32_t* loc_j = nullptr;
    const double* theta = nullptr;    // node effects (may be null)
    const std::int32_t* node_i = nullptr;
    const std::int32_t* node_j = nullptr;
};

struct KernelTable {
    std::string_view name;

    // sum_i x_i
    double (*sum)(const double* x, std::size_t n);

    // sum_i w_i a_i b_i
    double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);

    // s_i = sum_p gamma_p basis[p*n + i];  w_i = exp(-s_i).  `basis` is column-major n x q.
    void (*composite_weights)(const double* basis, std::size_t n, std::size_t q,
                              const double* gamma, double* s, double* w);

    // sum_i ( -s_i/2 - w_i r_i^2 / (2 sigma2) ) - n/2 log(2 pi sigma2),
    // i.e. the normalized weighted Gaussian log likelihood with log w_i = -s_i.
    double (*weighted_gaussian_loglik)(const double* resid, const double* s, const double* w,
                                       std::size_t n, double sigma2);

    // out_i = exp(-d_i * scale)
    void (*exp_neg_scaled)(const double* d, std::size_t n, double scale, double* out);

    // out_i = y_i - fixed_i - (eta[loc_j] - eta[loc_i]) - (theta[node_i] + theta[node_j])
    void (*residuals)(const ResidualArgs& args, std::size_t n, double* out);
};

const KernelTable& scalar_kernels();

/// The AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// Scalar table when `deterministic` is set (or CODYAD_KERNELS=scalar), otherwise
/// the widest table the CPU supports.
const KernelTable& select(bool deterministic);

}  // namespace codyad::kernels
