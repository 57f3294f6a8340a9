// Monte Carlo simulation of the non-adaptive query procedures: a single
// d-dimensional target decoded by maximum accumulated information
// density, and k simultaneous targets decoded by the descending
// threshold-tuple rule.
//
// Two codebook models are provided.  The explicit model materializes the
// M^d codewords and decodes literally.  The implicit model never stores
// rival codewords: per query it samples the one-count of the rival
// population (which fixes the realized query size), tracks the true
// cell's score exactly, and then samples the decode outcome from the
// exact conditional law of rival scores (see rival_law.hpp).  For fresh
// random codebooks the two models simulate the same process; the implicit
// one stays cheap when M^d is astronomically large.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qsearch/search_space.hpp"

namespace qsearch {

struct TrialStats {
  std::int64_t trials = 0;
  std::int64_t excess_count = 0;        // some coordinate off by more than delta
  std::int64_t decode_error_count = 0;  // decoded cell set differs from the truth
  double resolution_delta = 0.0;        // 1/M

  double rate() const { return trials ? static_cast<double>(excess_count) / trials : 0.0; }
  double decode_error_rate() const {
    return trials ? static_cast<double>(decode_error_count) / trials : 0.0;
  }
  double halfwidth() const;  // 95% Wilson half-width of the excess rate
};

/// Half-width of the 95% Wilson score interval.
double wilson_halfwidth(std::int64_t count, std::int64_t trials);

using TargetSampler = std::function<void(std::mt19937_64&, std::span<double>)>;
TargetSampler uniform_target_sampler();

enum class CodebookModel { Auto, Explicit, Implicit };

struct SingleTargetOptions {
  CodebookModel model = CodebookModel::Auto;
  bool fresh_codebook = true;  // regenerate the codebook every trial
  int threads = 1;
  std::int64_t explicit_bit_budget = std::int64_t{1} << 16;  // Auto: explicit when n*M^d fits
  // Test hook (threads == 1): decoded cell set per trial.
  std::vector<std::vector<std::int64_t>>* record_decoded = nullptr;
};

TrialStats run_single_target(const SearchConfig& config, const TargetSampler& sampler,
                             std::int64_t trials, const SingleTargetOptions& opts = {});

/// d independent one-dimensional searches with floor(n/d) queries each,
/// sharing one trial loop; a trial counts as excess or decode error when
/// any dimension fails.
TrialStats run_separate_search(const SearchConfig& config, const TargetSampler& sampler,
                               std::int64_t trials, const SingleTargetOptions& opts = {});

struct MultiTargetRunOptions {
  int threads = 1;
  std::int64_t tuple_budget = 2'000'000;  // membership tests per trial
  std::vector<std::vector<std::int64_t>>* record_decoded = nullptr;
};

/// k targets drawn i.i.d. from the sampler; the oracle answers with the
/// OR over the occupied cells.  gamma is the threshold margin in nats.
TrialStats run_multi_target(const SearchConfig& config, int k, double gamma,
                            const TargetSampler& sampler, std::int64_t trials,
                            const MultiTargetRunOptions& opts = {});

}  // namespace qsearch
