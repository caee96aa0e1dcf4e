#include "codyad/csv.hpp"
#include "codyad/domain.hpp"
#include "codyad/errors.hpp"

#include <cmath>
#include <set>

namespace codyad {
namespace {

constexpr const char* kModule = "domain-core";

bool starts_with(const std::string& s, std::string_view prefix) {
    return s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

NodeTable read_node_table(const std::string& path) {
    const CsvTable csv = read_csv(path);
    const std::size_t c_id = csv.require_column("id", kModule);
    const std::size_t c_lon = csv.require_column("lon", kModule);
    const std::size_t c_lat = csv.require_column("lat", kModule);
    const std::size_t c_time = csv.require_column("time", kModule);

    NodeTable table;
    std::vector<std::size_t> cov_cols;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        if (starts_with(csv.header[c], "x_")) {
            cov_cols.push_back(c);
            table.covariate_names.push_back(csv.header[c]);
        }
    }

    const auto c_y = csv.column("y");
    std::vector<std::size_t> emb_cols;
    std::vector<std::size_t> emb_w_cols;
    for (std::size_t d = 1;; ++d) {
        auto c = csv.column("e_" + std::to_string(d));
        if (!c) break;
        emb_cols.push_back(*c);
        if (auto w = csv.column("ew_" + std::to_string(d))) emb_w_cols.push_back(*w);
    }
    if (!c_y && emb_cols.empty())
        throw ValidationError(kModule, "missing required column 'y' (or embedding columns 'e_1..e_D')");
    if (!emb_w_cols.empty() && emb_w_cols.size() != emb_cols.size())
        throw ValidationError(kModule, "embedding weight columns 'ew_d' must cover every 'e_d'");

    std::set<std::int64_t> seen;
    table.nodes.reserve(csv.rows.size());
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const std::string ctx = path + " row " + std::to_string(r + 2);
        Node node;
        const double id = parse_double(row[c_id], ctx + " id");
        if (!std::isfinite(id) || id != std::floor(id))
            throw DomainError(kModule, ctx + ": id must be an integer");
        node.id = static_cast<std::int64_t>(id);
        if (!seen.insert(node.id).second)
            throw DomainError(kModule, ctx + ": duplicate node id " + std::to_string(node.id));
        node.location = {parse_double(row[c_lon], ctx + " lon"), parse_double(row[c_lat], ctx + " lat")};
        node.time = parse_double(row[c_time], ctx + " time");
        for (std::size_t c : cov_cols) node.covariates.push_back(parse_double(row[c], ctx + " " + csv.header[c]));
        if (!emb_cols.empty()) {
            Embedding e;
            for (std::size_t c : emb_cols) e.values.push_back(parse_double(row[c], ctx + " " + csv.header[c]));
            for (std::size_t c : emb_w_cols) e.weights.push_back(parse_double(row[c], ctx + " " + csv.header[c]));
            node.response = std::move(e);
        } else {
            node.response = parse_double(row[*c_y], ctx + " y");
        }
        table.nodes.push_back(std::move(node));
    }
    return table;
}

}  // namespace codyad
