#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace tslr {

double norm_cdf(double z);
// Upper tail 1 - Phi(z), accurate for large z.
double norm_sf(double z);
double norm_quantile(double p);

struct MvnOptions {
  double abs_tol = 1e-4;
  std::uint64_t max_points = 200'000;
  std::uint64_t seed = 0x6d574c52u;
};

struct MvnResult {
  double value = 0.0;
  double error = 0.0;  // ~99% half-width over randomized shifts
  std::uint64_t points = 0;
};

/// P(X_1 <= b_1, ..., X_m <= b_m) for X ~ N(0, corr).
///
/// Genz's separation-of-variables transform integrated with a randomly
/// shifted rank-1 lattice. The shift stream is seeded from `opts.seed`, so
/// repeated calls return the same value. Semidefinite matrices are accepted:
/// a zero pivot turns its coordinate into a deterministic indicator.
MvnResult mvn_lower_orthant(std::span<const double> upper,
                            const Eigen::MatrixXd& corr,
                            const MvnOptions& opts = {});

}  // namespace tslr
