// Non-asymptotic achievability and converse bounds.
//
// The achievability side evaluates
//   4 n exp(-2 M^d eta^2)
//     + exp(n eta c(p)) E[ min{1, M^d Pr{score(rival) >= score(true)}} ]
// with the outer expectation sampled by Monte Carlo over the nominal-size
// channel and the inner conditional probability computed exactly from the
// rival score law.  The converse side maximizes, over equal-size query
// laws on a grid, the quantile of the exact n-fold density sum at level
// eps + 2 d beta + kappa.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsearch/channel.hpp"

namespace qsearch {

struct AchievabilityResult {
  double eps_upper = 0.0;      // term1 + term2 (may exceed 1)
  bool clipped = false;        // eps_upper > 1
  double tail_term = 0.0;      // 4 n exp(-2 M^d eta^2)
  double union_term = 0.0;     // change-of-measure factor times the RCU mean
  double mc_halfwidth = 0.0;   // normal-approx 95% half-width of the RCU mean
  double eta = 0.0;
  double continuity = 0.0;     // c(p)
};

struct AchievabilityOptions {
  double eta = -1.0;  // <= 0: sqrt(d log M / (2 M^d))
  int mc_samples = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
};

AchievabilityResult achievability_bound(const ChannelFamily& family, int n, int d, double cells_per_axis,
                                        double p, const AchievabilityOptions& opts = {});

/// Brute-force reference for the conditional probability inside the bound:
/// enumerates all 2^n rival codewords for the given responses.  n <= 20.
double rival_tail_brute_force(const ChannelFamily& family, double p, const std::vector<int>& responses,
                              const std::vector<int>& true_bits);

/// Same quantity via the rival score lattice law (the production path).
double rival_tail_exact(const ChannelFamily& family, double p, const std::vector<int>& responses,
                        const std::vector<int>& true_bits);

struct ConverseResult {
  double neg_log_delta_upper = 0.0;  // bound on -log(resolution)
  double best_q = 0.0;
  double level = 0.0;  // eps + 2 d beta + kappa
  double beta = 0.0;
  double kappa = 0.0;
};

struct ConverseOptions {
  double beta = -1.0;   // <= 0: 1/(d sqrt(n))
  double kappa = -1.0;  // <= 0: 1/sqrt(n)
  std::vector<double> q_grid;  // empty: 0.01..0.99 step 0.02
};

ConverseResult converse_bound(const ChannelFamily& family, int n, int d, double eps,
                              const ConverseOptions& opts = {});

struct BoundReport {
  std::string family;
  int n = 0, d = 0;
  double cells_per_axis = 0.0;
  double p = 0.0;
  double eps = 0.0;
  AchievabilityResult achievability;
  ConverseResult converse;

  std::string to_json() const;
};

}  // namespace qsearch
