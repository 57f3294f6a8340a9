// Monte Carlo simulation of the sequential query procedure: fresh
// Bernoulli(p) query bits every step for all M^d cells, stop as soon as
// some cell's accumulated information density clears the threshold, and
// decode to the largest-index cell at or above it.
//
// As with the non-adaptive engine there is an explicit model (all M^d
// running scores materialized) and an implicit model that tracks the true
// cell's walk exactly and the rival population through the survival law
// of a single sub-threshold walk (rival_law.hpp).
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qsearch/nonadaptive.hpp"
#include "qsearch/search_space.hpp"

namespace qsearch {

struct AdaptiveConfig {
  double cells_per_axis = 2;  // M
  int d = 1;
  double codebook_prob = 0.5;  // p
  double threshold = 1.0;      // lambda, nats
  ChannelFamily family;
  std::uint64_t seed = 0;
  int max_steps = 0;  // 0: ceil(10 * lambda / C) picked at run time
  std::int64_t memory_cap_cells = std::int64_t{1} << 24;

  // Skip wrapper: with probability (l_eps * eps - 1) / (l_eps - 1) a trial
  // poses no query and outputs the first cell.
  bool eps_split = false;
  double eps_split_eps = 0.0;
  double eps_split_mean = 0.0;  // l'

  SearchConfig as_search_config(int n) const;
};

struct AdaptiveRunStats {
  std::int64_t trials = 0;
  std::vector<std::int32_t> stopping_times;  // per trial; -1 when censored
  std::int64_t censored = 0;
  std::int64_t excess_count = 0;
  std::int64_t decode_error_count = 0;
  double resolution_delta = 0.0;
  double max_step_density = 0.0;   // a0: one-step score ceiling
  double mean_query_bound = 0.0;   // (lambda + a0) / C

  double mean_tau() const;  // over uncensored trials
  double tau_std() const;
  double rate() const { return trials ? static_cast<double>(excess_count) / trials : 0.0; }
  double decode_error_rate() const {
    return trials ? static_cast<double>(decode_error_count) / trials : 0.0;
  }
};

struct AdaptiveOptions {
  CodebookModel model = CodebookModel::Auto;
  int threads = 1;
  std::int64_t explicit_cell_budget = std::int64_t{1} << 14;
  bool prune_disqualified = false;  // explicit model: skip score updates of -inf cells
  // Test hook (threads == 1, explicit model): per-step view of a trial.
  std::function<void(std::int64_t trial, int step, int true_bit, int symbol, double true_score,
                     double max_score)>
      step_observer;
};

AdaptiveRunStats run_adaptive(const AdaptiveConfig& config, const TargetSampler& sampler,
                              std::int64_t trials, const AdaptiveOptions& opts = {});

struct LambdaChoice {
  double lambda = 0.0;
  std::int64_t cells_per_axis = 2;  // suggested M
};

/// lambda = l' C - a0 and d log M = lambda - log l', M floored to an
/// integer at least 2.  Rejects l' too small to give a positive lambda.
LambdaChoice choose_lambda(double target_mean_queries, double capacity, double a0, int d);

struct StoppingBoundReport {
  bool valid = true;  // censored trials invalidate both checks
  bool mean_ok = false;
  bool error_ok = false;
  double mean_tau = 0.0;
  double mean_bound = 0.0;   // (lambda + a0)/C1 * (1 + slack)
  double error_rate = 0.0;
  double error_bound = 0.0;  // (M^d - 1) exp(-lambda) * (1 + slack) + 3 hw
  double c1 = 0.0;           // capacity proxy used in the mean bound
  bool exact_c1 = false;
};

/// Checks the mean-stopping-time and decode-error bounds at the given
/// slack.  With exact_c1 the mismatched one-step mean is evaluated by
/// summing over the binomial law of the rival one-count (needs M^d within
/// 2^16); otherwise the capacity at p is used.
StoppingBoundReport verify_stopping_bounds(const AdaptiveRunStats& stats,
                                           const AdaptiveConfig& config, double slack = 0.1,
                                           bool exact_c1 = false);

}  // namespace qsearch
