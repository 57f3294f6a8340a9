// Exact law of an n-fold i.i.d. sum of per-symbol information densities.
//
// The per-symbol law has at most 2|Y| atoms.  For the parametric families
// the atoms sit on a one- or two-dimensional value lattice, so the n-fold
// support stays polynomial in n and a dense dynamic program over lattice
// counts is exact and fast.  Tables without lattice structure fall back to
// sorted-merge convolution with tolerance-based point merging.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

#include "qsearch/info_density.hpp"

namespace qsearch {

struct SumDistribution {
  int n = 0;
  Eigen::VectorXd support;     // sorted distinct sums, nats
  Eigen::VectorXd prob;        // matching probabilities
  Eigen::VectorXd cumulative;  // running prefix sums of prob

  void finalize();  // rebuilds cumulative
};

struct SumOptions {
  double merge_tol = 1e-12;            // absolute merge tolerance on support values
  std::int64_t support_cap = 1 << 22;  // abort threshold for the generic path
};

/// Exact law of sum_{i<=n} iota_i for i.i.d. draws from the table's joint
/// law.  All used densities must be finite.
SumDistribution sum_distribution(const InfoDensityTable& table, int n, const SumOptions& opts = {});

/// One extra convolution pass: the law of A + B for independent A, B.
SumDistribution convolve(const SumDistribution& a, const SumDistribution& b,
                         const SumOptions& opts = {});

/// Right-continuous step cdf, Pr{S <= t}.
double cdf(const SumDistribution& dist, double t);

/// sup{t : Pr{S <= t} <= level} over the reals: the smallest support point
/// at which the cdf first exceeds level.  level must lie in (0,1).
double quantile(const SumDistribution& dist, double level);

/// Two-column CSV "value,prob".
void write_csv(const SumDistribution& dist, std::ostream& out);

struct BerryEsseenGap {
  double max_gap = 0.0;  // sup over support of |cdf - Phi((t - nC)/sqrt(nV))|
  double bound = 0.0;    // 6 T / (sqrt(n) V^{3/2})
};

/// Requires V > 0 for the table.
BerryEsseenGap berry_esseen_gap(const InfoDensityTable& table, int n, const SumOptions& opts = {});

/// Exact mean of the first step at which the running i.i.d. density sum
/// reaches `threshold`, by a sub-threshold restriction DP on the value
/// lattice.  Walks still below the threshold after max_steps contribute
/// max_steps, so the result is a (tight) lower bound for generous caps.
/// Needs a lattice-decomposable table and positive mean drift.
double expected_hit_time(const InfoDensityTable& table, double threshold, int max_steps);

/// Threshold whose exact mean hit time equals target_steps (bisection).
double threshold_for_mean_hit_time(const InfoDensityTable& table, double target_steps,
                                   int max_steps);

}  // namespace qsearch
