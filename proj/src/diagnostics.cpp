#include "codyad/diagnostics.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"
#include "codyad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

namespace codyad {
namespace {

constexpr const char* kModule = "scoring-diagnostics";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
    double w = 0.0;         // mean within-chain variance
    double b_over_n = 0.0;  // variance of chain means
    double var_plus = 0.0;
    std::size_t n = 0;
};

Moments moments(const ChainSeries& chains) {
    Moments out;
    out.n = chains.front().size();
    std::vector<double> means;
    for (const auto& c : chains) {
        means.push_back(stats::mean(c));
        out.w += stats::variance(c, 1);
    }
    out.w /= double(chains.size());
    out.b_over_n = chains.size() > 1 ? stats::variance(means, 1) : 0.0;
    out.var_plus = (double(out.n) - 1.0) / double(out.n) * out.w + out.b_over_n;
    return out;
}

ChainSeries truncate_to_common_length(const ChainSeries& chains) {
    std::size_t n = std::numeric_limits<std::size_t>::max();
    for (const auto& c : chains) n = std::min(n, c.size());
    ChainSeries out;
    for (const auto& c : chains) out.emplace_back(c.begin(), c.begin() + std::ptrdiff_t(n));
    return out;
}

}  // namespace

double split_rhat(const ChainSeries& input) {
    if (input.empty()) return kNaN;
    const ChainSeries chains = truncate_to_common_length(input);
    const std::size_t half = chains.front().size() / 2;
    if (half < 2) return kNaN;
    ChainSeries split;
    for (const auto& c : chains) {
        split.emplace_back(c.begin(), c.begin() + std::ptrdiff_t(half));
        split.emplace_back(c.end() - std::ptrdiff_t(half), c.end());
    }
    const Moments m = moments(split);
    if (m.w == 0.0) return m.b_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(m.var_plus / m.w);
}

double effective_sample_size(const ChainSeries& input) {
    if (input.empty()) return kNaN;
    const ChainSeries chains = truncate_to_common_length(input);
    const std::size_t n = chains.front().size();
    const double total = double(n * chains.size());
    if (n < 4) return kNaN;
    const Moments m = moments(chains);
    if (m.var_plus == 0.0) return total;

    std::vector<double> centred_means;
    for (const auto& c : chains) centred_means.push_back(stats::mean(c));
    auto mean_autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < chains.size(); ++c) {
            const auto& x = chains[c];
            const double mu = centred_means[c];
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
            acc += s / double(n);
        }
        return acc / double(chains.size());
    };
    // W in the autocorrelation uses the biased within-chain variance to match acov(0).
    const double w_biased = m.w * (double(n) - 1.0) / double(n);
    auto rho = [&](std::size_t lag) { return 1.0 - (w_biased - mean_autocov(lag)) / m.var_plus; };

    double tau = -1.0;
    double previous_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, previous_pair);  // initial monotone sequence
        tau += 2.0 * pair;
        previous_pair = pair;
    }
    return total / std::max(tau, 1.0 / std::log10(std::max(total, 10.0)));
}

ParameterSummary summarize(std::string name, const ChainSeries& chains) {
    ParameterSummary s;
    s.name = std::move(name);
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    if (pooled.empty()) {
        s.mean = s.sd = s.q025 = s.q50 = s.q975 = s.rhat = s.ess = kNaN;
        return s;
    }
    s.mean = stats::mean(pooled);
    s.sd = pooled.size() > 1 ? std::sqrt(stats::variance(pooled, 1)) : 0.0;
    std::sort(pooled.begin(), pooled.end());
    s.q025 = stats::quantile_sorted(pooled, 0.025);
    s.q50 = stats::quantile_sorted(pooled, 0.5);
    s.q975 = stats::quantile_sorted(pooled, 0.975);
    s.rhat = split_rhat(chains);
    s.ess = effective_sample_size(chains);
    return s;
}

std::vector<ParameterSummary> chain_summary(const PosteriorDraws& draws, bool spatial, bool node_effects) {
    std::vector<ParameterSummary> rows;
    auto add = [&](std::string name, const std::function<double(const Draw&)>& get) {
        ChainSeries series;
        for (const auto& c : draws.chains) {
            std::vector<double> v;
            v.reserve(c.draws.size());
            for (const auto& d : c.draws) v.push_back(get(d));
            series.push_back(std::move(v));
        }
        rows.push_back(summarize(std::move(name), series));
    };
    const Draw* first = nullptr;
    for (const auto& c : draws.chains)
        if (!c.draws.empty()) {
            first = &c.draws.front();
            break;
        }
    if (!first) return rows;

    for (Eigen::Index k = 0; k < first->beta_star.size(); ++k) {
        const std::string label =
            std::size_t(k) < draws.beta_names.size() ? draws.beta_names[std::size_t(k)] : std::to_string(k);
        add("beta[" + label + "]", [k](const Draw& d) { return d.beta_star[k]; });
    }
    add("sigma2_y", [](const Draw& d) { return d.sigma2_y; });
    if (spatial) add("sigma2_eta", [](const Draw& d) { return d.sigma2_eta; });
    if (node_effects) add("sigma2_theta", [](const Draw& d) { return d.sigma2_theta; });
    if (spatial) add("phi", [](const Draw& d) { return d.phi; });
    for (Eigen::Index k = 0; k < first->gamma.size(); ++k)
        add("gamma[" + std::to_string(k + 1) + "]", [k](const Draw& d) { return d.gamma[k]; });
    for (Eigen::Index k = 0; k < first->eta_star.size(); ++k)
        add("eta[" + std::to_string(k) + "]", [k](const Draw& d) { return d.eta_star[k]; });
    for (Eigen::Index k = 0; k < first->theta.size(); ++k)
        add("theta[" + std::to_string(k) + "]", [k](const Draw& d) { return d.theta[k]; });
    return rows;
}

void write_summary_csv(const std::vector<ParameterSummary>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(kModule, "cannot write " + path);
    out << "parameter,mean,sd,q2.5,q50,q97.5,rhat,ess\n";
    for (const auto& r : rows) {
        out << r.name << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ',' << format_double(r.q025)
            << ',' << format_double(r.q50) << ',' << format_double(r.q975) << ',' << format_double(r.rhat) << ','
            << format_double(r.ess) << '\n';
    }
    if (!out) throw IoError(kModule, "failed writing " + path);
}

}  // namespace codyad
