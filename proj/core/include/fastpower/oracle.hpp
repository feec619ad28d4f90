#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fastpower/powercurve.hpp"

namespace fastpower {

enum class PosteriorMethod { conjugate_beta, grid };
std::string to_string(PosteriorMethod m);

struct OracleOptions {
  std::size_t theta_draws = 10'000;  // posterior draws per group per replicate
  std::size_t grid_cells = 10'000;   // total cells; per axis = cells^(1/d)
  double grid_halfwidth_sd = 8.0;
  double boundary_mass_tol = 1e-4;
  bool force_grid = false;           // use the grid even when a conjugate form exists
  std::size_t workers = 0;
  const std::atomic<bool>* cancel = nullptr;
  RuleOptions rule;
};

struct OracleReport {
  double n = 0.0;
  std::size_t reps = 0;
  double power = 0.0;
  double ci_lower = 0.0;  // 95% normal-approximation interval
  double ci_upper = 0.0;
  PosteriorMethod method = PosteriorMethod::grid;
};

/**
 * Posterior draws of theta_j = g(eta_j) for one group's data, from the exact
 * conjugate posterior where available and otherwise from a fine grid over the
 * working-scale posterior. Throws GridTruncation if the grid edge carries
 * noticeable mass even after widening once.
 */
std::vector<double> posterior_theta_draws(const DesignSpec& spec, int group, std::span<const double> data,
                                          std::uint64_t seed, const OracleOptions& options, PosteriorMethod* used = nullptr);

/**
 * Simulation-based power at n (group 2 gets ceil(q n)): simulate data, compute
 * the posterior, apply the rule; repeat. Replicate r uses seed + r. reps >= 100.
 */
OracleReport mc_power(const DesignSpec& spec, double n, std::size_t reps, std::uint64_t seed,
                      const OracleOptions& options = {});

std::vector<OracleReport> conventional_curve(const DesignSpec& spec, std::span<const double> n_grid, std::size_t reps,
                                             std::uint64_t seed, const OracleOptions& options = {});

struct VarianceRow {
  double n = 0.0;
  double sobol_mean = 0.0;
  double sobol_sd = 0.0;
  double prng_mean = 0.0;
  double prng_sd = 0.0;
};

/** Spread of the direct power estimate across re-randomized Sobol' and pseudo-random point sets. */
std::vector<VarianceRow> variance_study(const DesignSpec& spec, std::span<const double> n_grid, std::size_t m,
                                        std::size_t replications, std::uint64_t seed, std::size_t workers = 0);

}  // namespace fastpower
