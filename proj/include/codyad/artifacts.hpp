#pragma once

#include "codyad/network.hpp"
#include "codyad/sampler.hpp"

#include <string>

namespace codyad {

/// Creates `dir` (and parents). Throws IoError on failure.
void ensure_directory(const std::string& dir);

/// One CSV per parameter block, each led by `chain,iteration`:
/// beta.csv, beta_star.csv, eta.csv (eta*), theta.csv, variances.csv, phi.csv, gamma.csv, constraint.csv.
/// Blocks that are absent from the model are skipped.
void write_draw_csvs(const PosteriorDraws& draws, const std::string& dir);

/// Inverse of write_draw_csvs; values round-trip exactly.
PosteriorDraws read_draw_csvs(const std::string& dir);

/// `i,j,fitted_mean` averaged over chains (store_fitted runs only).
void write_fitted_csv(const PosteriorDraws& draws, const DyadSet& dyads, const std::string& path);

}  // namespace codyad
