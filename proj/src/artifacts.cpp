#include "codyad/artifacts.hpp"

#include "codyad/csv.hpp"
#include "codyad/errors.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace codyad {
namespace {

constexpr const char* kModule = "artifacts";

using Getter = std::function<Eigen::VectorXd(const Draw&)>;
using Setter = std::function<void(Draw&, const Eigen::VectorXd&)>;

struct Block {
    std::string file;
    std::function<std::vector<std::string>(const PosteriorDraws&, const Draw&)> columns;
    Getter get;
    Setter set;
};

std::vector<std::string> indexed(const std::string& stem, Eigen::Index n, int base) {
    std::vector<std::string> out;
    for (Eigen::Index k = 0; k < n; ++k) out.push_back(stem + "[" + std::to_string(k + base) + "]");
    return out;
}

Eigen::VectorXd scalars(std::initializer_list<double> v) {
    Eigen::VectorXd out(Eigen::Index(v.size()));
    Eigen::Index k = 0;
    for (double x : v) out[k++] = x;
    return out;
}

const std::vector<Block>& blocks() {
    static const std::vector<Block> table = {
        {"beta.csv", [](const PosteriorDraws& p, const Draw&) { return p.beta_names; },
         [](const Draw& d) { return d.beta; }, [](Draw& d, const Eigen::VectorXd& v) { d.beta = v; }},
        {"beta_star.csv", [](const PosteriorDraws& p, const Draw&) { return p.beta_names; },
         [](const Draw& d) { return d.beta_star; }, [](Draw& d, const Eigen::VectorXd& v) { d.beta_star = v; }},
        {"eta.csv", [](const PosteriorDraws&, const Draw& d) { return indexed("eta", d.eta_star.size(), 0); },
         [](const Draw& d) { return d.eta_star; }, [](Draw& d, const Eigen::VectorXd& v) { d.eta_star = v; }},
        {"theta.csv", [](const PosteriorDraws&, const Draw& d) { return indexed("theta", d.theta.size(), 0); },
         [](const Draw& d) { return d.theta; }, [](Draw& d, const Eigen::VectorXd& v) { d.theta = v; }},
        {"variances.csv",
         [](const PosteriorDraws&, const Draw&) {
             return std::vector<std::string>{"sigma2_y", "sigma2_eta", "sigma2_theta"};
         },
         [](const Draw& d) { return scalars({d.sigma2_y, d.sigma2_eta, d.sigma2_theta}); },
         [](Draw& d, const Eigen::VectorXd& v) {
             d.sigma2_y = v[0];
             d.sigma2_eta = v[1];
             d.sigma2_theta = v[2];
         }},
        {"phi.csv", [](const PosteriorDraws&, const Draw&) { return std::vector<std::string>{"phi", "phi_index"}; },
         [](const Draw& d) { return scalars({d.phi, double(d.phi_index)}); },
         [](Draw& d, const Eigen::VectorXd& v) {
             d.phi = v[0];
             d.phi_index = std::size_t(v[1]);
         }},
        {"gamma.csv", [](const PosteriorDraws&, const Draw& d) { return indexed("gamma", d.gamma.size(), 1); },
         [](const Draw& d) { return d.gamma; }, [](Draw& d, const Eigen::VectorXd& v) { d.gamma = v; }},
        {"constraint.csv",
         [](const PosteriorDraws&, const Draw&) { return std::vector<std::string>{"max_abs_ct_eta"}; },
         [](const Draw& d) { return scalars({d.constraint_residual}); },
         [](Draw& d, const Eigen::VectorXd& v) { d.constraint_residual = v[0]; }},
    };
    return table;
}

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

}  // namespace

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(kModule, "cannot create directory " + dir + ": " + ec.message());
}

void write_draw_csvs(const PosteriorDraws& draws, const std::string& dir) {
    ensure_directory(dir);
    const auto all = draws.all();
    const Draw empty;
    const Draw& first = all.empty() ? empty : *all.front();
    for (const auto& block : blocks()) {
        const auto columns = block.columns(draws, first);
        if (columns.empty()) continue;
        const std::string path = join(dir, block.file);
        std::ofstream out(path);
        if (!out) throw IoError(kModule, "cannot write " + path);
        out << "chain,iteration";
        for (const auto& c : columns) out << ',' << c;
        out << '\n';
        for (const Draw* d : all) {
            const Eigen::VectorXd v = block.get(*d);
            out << d->chain << ',' << d->iteration;
            for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << format_double(v[k]);
            out << '\n';
        }
        if (!out) throw IoError(kModule, "failed writing " + path);
    }
}

PosteriorDraws read_draw_csvs(const std::string& dir) {
    PosteriorDraws out;
    std::map<std::pair<std::size_t, std::size_t>, Draw> by_key;
    bool any = false;
    for (const auto& block : blocks()) {
        const std::string path = join(dir, block.file);
        if (!std::filesystem::exists(path)) continue;
        any = true;
        const CsvTable csv = read_csv(path);
        if (csv.header.size() < 2 || csv.header[0] != "chain" || csv.header[1] != "iteration")
            throw ValidationError(kModule, path + " must start with chain,iteration");
        if (block.file == "beta_star.csv")
            out.beta_names.assign(csv.header.begin() + 2, csv.header.end());
        for (std::size_t r = 0; r < csv.rows.size(); ++r) {
            const auto& row = csv.rows[r];
            const std::string ctx = path + " row " + std::to_string(r + 2);
            if (row.size() != csv.header.size()) throw ValidationError(kModule, ctx + " has the wrong field count");
            const auto chain = std::size_t(parse_double(row[0], ctx));
            const auto iteration = std::size_t(parse_double(row[1], ctx));
            Eigen::VectorXd v(Eigen::Index(row.size() - 2));
            for (std::size_t c = 2; c < row.size(); ++c) v[Eigen::Index(c - 2)] = parse_double(row[c], ctx);
            Draw& d = by_key[{chain, iteration}];
            d.chain = chain;
            d.iteration = iteration;
            block.set(d, v);
        }
    }
    if (!any) throw IoError(kModule, "no draw files found in " + dir);
    for (auto& [key, draw] : by_key) {
        if (out.chains.size() <= key.first) out.chains.resize(key.first + 1);
        out.chains[key.first].chain = key.first;
        out.chains[key.first].draws.push_back(std::move(draw));
    }
    return out;
}

void write_fitted_csv(const PosteriorDraws& draws, const DyadSet& dyads, const std::string& path) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(Eigen::Index(dyads.size()));
    std::size_t used = 0;
    for (const auto& c : draws.chains) {
        if (c.fitted_mean.size() != mean.size()) continue;
        mean += c.fitted_mean;
        ++used;
    }
    if (used == 0) return;
    mean /= double(used);
    std::ofstream out(path);
    if (!out) throw IoError(kModule, "cannot write " + path);
    out << "i,j,fitted_mean\n";
    for (std::size_t r = 0; r < dyads.size(); ++r)
        out << dyads.node_ids[std::size_t(dyads.node_i[r])] << ',' << dyads.node_ids[std::size_t(dyads.node_j[r])]
            << ',' << format_double(mean[Eigen::Index(r)]) << '\n';
    if (!out) throw IoError(kModule, "failed writing " + path);
}

}  // namespace codyad
