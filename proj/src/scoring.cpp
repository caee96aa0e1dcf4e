#include "codyad/scoring.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/kernels/kernels.hpp"
#include "codyad/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace codyad {
namespace {

constexpr const char* kModule = "scoring-diagnostics";

void weights_for(const Eigen::MatrixXd& basis, const Eigen::VectorXd& gamma, Eigen::VectorXd& s, Eigen::VectorXd& w) {
    const auto n = basis.rows();
    s.resize(n);
    w.resize(n);
    kernels::scalar_kernels().composite_weights(basis.data(), std::size_t(n), std::size_t(basis.cols()), gamma.data(),
                                                s.data(), w.data());
}

}  // namespace

double crps_gaussian(double y, double mu, double sigma) {
    if (sigma < 0.0 || std::isnan(sigma)) throw DomainError(kModule, "predictive sd must be nonnegative");
    if (sigma == 0.0) return std::abs(y - mu);
    const double z = (y - mu) / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

ModelScore score_model(const DyadSet& dyads, const DesignMatrix& design, const WeightSpec& spec,
                       const std::vector<const Draw*>& draws, std::string label, CrpsMode mode, std::size_t threads) {
    ModelScore score;
    score.label = std::move(label);
    score.draws_used = draws.size();
    const auto n = Eigen::Index(dyads.size());
    score.per_dyad = Eigen::VectorXd::Zero(n);
    if (draws.empty() || n == 0) {
        score.crps = std::numeric_limits<double>::quiet_NaN();
        return score;
    }
    const Eigen::MatrixXd basis = basis_matrix(dyads, spec);
    Eigen::VectorXd s, w;

    auto mean_of = [&](const Draw& d) {
        return dyad_means(dyads, design, MeanParams{d.beta_star, d.eta_star, d.theta, d.sigma2_y, d.gamma});
    };

    if (mode == CrpsMode::PlugIn) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd gamma = Eigen::VectorXd::Zero(Eigen::Index(spec.size()));
        double sigma2 = 0.0;
        for (const Draw* d : draws) {
            mu += mean_of(*d);
            gamma += d->gamma;
            sigma2 += d->sigma2_y;
        }
        const double k = double(draws.size());
        mu /= k;
        gamma /= k;
        sigma2 /= k;
        weights_for(basis, gamma, s, w);
        for (Eigen::Index r = 0; r < n; ++r) score.per_dyad[r] = crps_gaussian(dyads.y[r], mu[r], std::sqrt(sigma2 / w[r]));
    } else {
        for (const Draw* d : draws) {
            const Eigen::VectorXd mu = mean_of(*d);
            weights_for(basis, d->gamma, s, w);
            const std::size_t blocks = std::max<std::size_t>(1, threads);
            parallel_for(blocks, threads, [&](std::size_t b) {
                const auto begin = n * Eigen::Index(b) / Eigen::Index(blocks);
                const auto end = n * Eigen::Index(b + 1) / Eigen::Index(blocks);
                for (Eigen::Index r = begin; r < end; ++r)
                    score.per_dyad[r] += crps_gaussian(dyads.y[r], mu[r], std::sqrt(d->sigma2_y / w[r]));
            });
        }
        score.per_dyad /= double(draws.size());
    }
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) total += score.per_dyad[r];
    score.crps = total / double(n);
    return score;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t dyad_count, double fraction,
                                                                           Rng& rng) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError(kModule, "holdout fraction must lie in [0, 1)");
    std::vector<std::size_t> order(dyad_count);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    const auto held = std::size_t(std::round(fraction * double(dyad_count)));
    std::vector<std::size_t> test(order.begin(), order.begin() + std::ptrdiff_t(held));
    std::vector<std::size_t> fit(order.begin() + std::ptrdiff_t(held), order.end());
    std::sort(test.begin(), test.end());
    std::sort(fit.begin(), fit.end());
    return {fit, test};
}

void write_scores_csv(const std::vector<ModelScore>& scores, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(kModule, "cannot write " + path);
    out << "model,crps,draws_used\n";
    for (const auto& s : scores) out << s.label << ',' << format_double(s.crps) << ',' << s.draws_used << '\n';
    if (!out) throw IoError(kModule, "failed writing " + path);
}

}  // namespace codyad
