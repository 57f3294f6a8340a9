// Exact conditional law of a competing cell's decoder score.
//
// Fix a decoder density table at nominal input probability p and a
// response sequence y^n.  A cell whose codeword bits B_t are i.i.d.
// Bern(p) independent of y^n scores sum_t iota(B_t; y_t), which depends
// on y^n only through the per-symbol counts.  Within a symbol class the
// one-bit count is binomial, so the score law is a product of binomials
// on an integer lattice; classes whose two densities coincide only shift
// the score, and classes with a -infinity side either force the bit or
// park mass at -infinity (a permanently disqualified cell).
//
// This is what the implicit-codebook simulators and the inner probability
// of the random-coding bound evaluate.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qsearch/info_density.hpp"

namespace qsearch {

/// Score of a codeword against responses summarized by per-symbol totals
/// and per-symbol one-bit counts.  Terms with a zero count are skipped so
/// 0 * (-inf) cannot poison the sum.  Both the true-cell score and the
/// rival lattice values are produced by this one function, which makes
/// score ties exact floating-point events.
double score_from_counts(const InfoDensityTable& decoder, std::span<const std::int64_t> symbol_totals,
                         std::span<const std::int64_t> one_counts);

struct RivalLaw {
  std::vector<double> value;  // finite support (unsorted lattice order)
  std::vector<double> prob;
  double neg_inf_mass = 0.0;

  double p_greater(double s) const;
  double p_equal(double s) const;
};

/// Law of one rival's score given per-symbol response counts.
RivalLaw rival_score_law(const InfoDensityTable& decoder, std::span<const std::int64_t> symbol_totals,
                         std::int64_t lattice_cap = std::int64_t{1} << 22);

/// Number of successes among `trials` Bernoulli(prob) draws.  Exact
/// binomial sampling up to 2^53 trials; beyond that the count is only used
/// through "zero / nonzero / huge", so a Poisson or deterministic value is
/// returned.  `trials` may carry fractional representation of huge counts.
std::int64_t sample_success_count(double trials, double prob, std::mt19937_64& rng);

/// Per-step survival tracker for the adaptive decoder: conditional on the
/// response prefix, the probability that one rival's running score has
/// stayed below `lambda`, together with the surviving sub-threshold law.
class RivalSurvival {
 public:
  RivalSurvival(const InfoDensityTable& decoder, double lambda, int max_steps);

  /// Advances by one response symbol and restricts to scores below the
  /// threshold.  Returns P(still below after this step | below before).
  double step(int symbol);

  double survival() const { return survival_; }
  /// P(rival reached the threshold at the last step | below before it),
  /// accumulated from the absorbed mass so small hazards keep full
  /// precision.
  double last_hazard() const { return hazard_; }
  void reset();

 private:
  enum class ClassKind { Free, Shift, ForcedOne, ForcedZero };

  const InfoDensityTable* decoder_;
  double lambda_;
  int max_steps_;
  std::vector<ClassKind> kind_;    // per output symbol
  std::vector<int> free_index_;    // symbol -> free-class slot (0 or 1), -1 otherwise
  int width_;                      // max_steps_ + 1
  std::vector<double> lattice_;    // (n0+1) x (n1+1) active block, row-major width_
  std::int64_t count_[2] = {0, 0}; // steps seen per free class
  double offset_ = 0.0;            // contribution of non-free classes
  double dead_mass_ = 0.0;         // permanently -inf rivals (never reach lambda)
  double survival_ = 1.0;
  double hazard_ = 0.0;
  double iota_[2][2];              // [free class][bit]
  double p_;
};

}  // namespace qsearch
