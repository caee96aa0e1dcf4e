#pragma once

#include <cstdint>
#include <random>

namespace codyad {

/// Seeded generator with the draws the samplers need.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                          std::uint32_t(stream >> 32), 0x9e3779b9u};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    /// Gamma with shape/rate parametrization.
    double gamma(double shape, double rate) {
        std::gamma_distribution<double> g(shape, 1.0 / rate);
        return g(engine_);
    }

    /// Inverse gamma with shape/scale: 1 / Gamma(shape, rate = scale).
    double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace codyad
