#include "qsearch/rival_law.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qsearch/rng.hpp"

namespace qsearch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log C(n,k) + k log p + (n-k) log(1-p)
std::vector<double> binomial_weights(std::int64_t n, double p) {
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::int64_t k = 0; k <= n; ++k) {
    const double lw = lgn - std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(n - k) + 1.0) +
                      static_cast<double>(k) * lp + static_cast<double>(n - k) * lq;
    w[static_cast<std::size_t>(k)] = std::exp(lw);
  }
  return w;
}

}  // namespace

double score_from_counts(const InfoDensityTable& decoder, std::span<const std::int64_t> symbol_totals,
                         std::span<const std::int64_t> one_counts) {
  double score = 0.0;
  for (std::size_t y = 0; y < symbol_totals.size(); ++y) {
    const std::int64_t ones = one_counts[y];
    const std::int64_t zeros = symbol_totals[y] - ones;
    if (ones > 0) score += static_cast<double>(ones) * decoder.value(1, static_cast<int>(y));
    if (zeros > 0) score += static_cast<double>(zeros) * decoder.value(0, static_cast<int>(y));
  }
  return score;
}

double RivalLaw::p_greater(double s) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (value[i] > s) acc += prob[i];
  }
  return acc;
}

double RivalLaw::p_equal(double s) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (value[i] == s) acc += prob[i];
  }
  return acc;
}

RivalLaw rival_score_law(const InfoDensityTable& decoder, std::span<const std::int64_t> symbol_totals,
                         std::int64_t lattice_cap) {
  const double p = decoder.input_prob;
  const int ny = decoder.output_size();

  RivalLaw law;
  double fixed_weight = 1.0;
  std::vector<std::int64_t> free_symbols;
  std::vector<std::int64_t> totals(ny, 0);
  std::vector<std::int64_t> ones(ny, 0);

  for (int y = 0; y < ny; ++y) {
    const std::int64_t n_y = symbol_totals[y];
    totals[y] = n_y;
    if (n_y == 0) continue;
    const double i0 = decoder.value(0, y);
    const double i1 = decoder.value(1, y);
    const bool fin0 = std::isfinite(i0);
    const bool fin1 = std::isfinite(i1);
    if (!fin0 && !fin1) throw std::domain_error("response symbol impossible under the decoder law");
    if (!fin0) {
      // zero bit is impossible: rivals survive only with all ones here
      fixed_weight *= std::pow(p, static_cast<double>(n_y));
      ones[y] = n_y;
    } else if (!fin1) {
      fixed_weight *= std::pow(1.0 - p, static_cast<double>(n_y));
      ones[y] = 0;
    } else if (i0 == i1) {
      ones[y] = 0;  // count split is irrelevant to the score
    } else {
      free_symbols.push_back(y);
    }
  }

  std::int64_t lattice = 1;
  for (const std::int64_t y : free_symbols) {
    if (lattice > lattice_cap / (symbol_totals[y] + 1)) {
      throw std::runtime_error("rival score lattice exceeds the configured cap");
    }
    lattice *= symbol_totals[y] + 1;
  }

  law.value.resize(static_cast<std::size_t>(lattice));
  law.prob.resize(static_cast<std::size_t>(lattice));

  // Outer product over the free classes, enumerated by mixed radix.
  std::vector<std::vector<double>> weights;
  weights.reserve(free_symbols.size());
  for (const std::int64_t y : free_symbols) weights.push_back(binomial_weights(symbol_totals[y], p));

  std::vector<std::int64_t> k(free_symbols.size(), 0);
  for (std::int64_t idx = 0; idx < lattice; ++idx) {
    double w = fixed_weight;
    for (std::size_t c = 0; c < free_symbols.size(); ++c) {
      ones[free_symbols[c]] = k[c];
      w *= weights[c][static_cast<std::size_t>(k[c])];
    }
    law.value[static_cast<std::size_t>(idx)] = score_from_counts(decoder, totals, ones);
    law.prob[static_cast<std::size_t>(idx)] = w;
    for (std::size_t c = 0; c < free_symbols.size(); ++c) {
      if (++k[c] <= symbol_totals[free_symbols[c]]) break;
      k[c] = 0;
    }
  }
  law.neg_inf_mass = 1.0 - fixed_weight;
  return law;
}

std::int64_t sample_success_count(double trials, double prob, std::mt19937_64& rng) {
  if (!(trials >= 0.0)) throw std::invalid_argument("trial count must be nonnegative");
  if (prob <= 0.0 || trials == 0.0) return 0;
  if (prob >= 1.0) return trials < 9e18 ? static_cast<std::int64_t>(trials) : std::int64_t{1} << 62;
  if (trials <= 9007199254740992.0) {  // 2^53: exact binomial
    std::binomial_distribution<std::int64_t> dist(static_cast<std::int64_t>(trials), prob);
    return dist(rng);
  }
  const double mean = trials * prob;
  if (mean > 1e6) return static_cast<std::int64_t>(mean);  // only its magnitude matters
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

RivalSurvival::RivalSurvival(const InfoDensityTable& decoder, double lambda, int max_steps)
    : decoder_(&decoder), lambda_(lambda), max_steps_(max_steps), p_(decoder.input_prob) {
  if (!(lambda > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
  iota_[0][0] = iota_[0][1] = iota_[1][0] = iota_[1][1] = 0.0;
  const int ny = decoder.output_size();
  kind_.resize(ny);
  free_index_.assign(ny, -1);
  int free_slots = 0;
  for (int y = 0; y < ny; ++y) {
    const double i0 = decoder.value(0, y);
    const double i1 = decoder.value(1, y);
    const bool fin0 = std::isfinite(i0);
    const bool fin1 = std::isfinite(i1);
    if (!fin0 && !fin1) {
      kind_[y] = ClassKind::Shift;  // symbol cannot occur; classification unused
    } else if (!fin0) {
      kind_[y] = ClassKind::ForcedOne;
    } else if (!fin1) {
      kind_[y] = ClassKind::ForcedZero;
    } else if (i0 == i1) {
      kind_[y] = ClassKind::Shift;
    } else {
      kind_[y] = ClassKind::Free;
      if (free_slots >= 2) throw std::invalid_argument("survival tracker supports at most two free symbol classes");
      iota_[free_slots][0] = i0;
      iota_[free_slots][1] = i1;
      free_index_[y] = free_slots++;
    }
  }
  width_ = max_steps_ + 1;
  lattice_.assign(static_cast<std::size_t>(width_) * width_, 0.0);
  reset();
}

void RivalSurvival::reset() {
  // Clear only the block touched by the previous run.
  for (std::int64_t a = 0; a <= count_[0]; ++a) {
    double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
    std::fill(row, row + count_[1] + 1, 0.0);
  }
  lattice_[0] = 1.0;
  count_[0] = count_[1] = 0;
  offset_ = 0.0;
  dead_mass_ = 0.0;
  survival_ = 1.0;
}

double RivalSurvival::step(int symbol) {
  const double before = survival_;
  switch (kind_[symbol]) {
    case ClassKind::Shift:
      offset_ += decoder_->value(0, symbol);
      break;
    case ClassKind::ForcedOne: {
      // a zero bit disqualifies the rival forever
      double live = 0.0;
      for (std::int64_t a = 0; a <= count_[0]; ++a) {
        double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
        for (std::int64_t b = 0; b <= count_[1]; ++b) live += row[b];
      }
      dead_mass_ += (1.0 - p_) * live;
      for (std::int64_t a = 0; a <= count_[0]; ++a) {
        double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
        for (std::int64_t b = 0; b <= count_[1]; ++b) row[b] *= p_;
      }
      offset_ += decoder_->value(1, symbol);
      break;
    }
    case ClassKind::ForcedZero: {
      double live = 0.0;
      for (std::int64_t a = 0; a <= count_[0]; ++a) {
        double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
        for (std::int64_t b = 0; b <= count_[1]; ++b) live += row[b];
      }
      dead_mass_ += p_ * live;
      for (std::int64_t a = 0; a <= count_[0]; ++a) {
        double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
        for (std::int64_t b = 0; b <= count_[1]; ++b) row[b] *= (1.0 - p_);
      }
      offset_ += decoder_->value(0, symbol);
      break;
    }
    case ClassKind::Free: {
      const int slot = free_index_[symbol];
      if (slot == 0) {
        for (std::int64_t a = count_[0] + 1; a >= 1; --a) {
          double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
          const double* prev = row - width_;
          for (std::int64_t b = 0; b <= count_[1]; ++b) {
            row[b] = row[b] * (1.0 - p_) + prev[b] * p_;
          }
        }
        double* row0 = lattice_.data();
        for (std::int64_t b = 0; b <= count_[1]; ++b) row0[b] *= (1.0 - p_);
        ++count_[0];
      } else {
        for (std::int64_t a = 0; a <= count_[0]; ++a) {
          double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
          for (std::int64_t b = count_[1] + 1; b >= 1; --b) {
            row[b] = row[b] * (1.0 - p_) + row[b - 1] * p_;
          }
          row[0] *= (1.0 - p_);
        }
        ++count_[1];
      }
      break;
    }
  }

  // Absorb lattice mass that reached the threshold.
  double live = 0.0;
  double absorbed = 0.0;
  for (std::int64_t a = 0; a <= count_[0]; ++a) {
    double* row = lattice_.data() + static_cast<std::size_t>(a) * width_;
    const double va = offset_ + static_cast<double>(a) * iota_[0][1] +
                      static_cast<double>(count_[0] - a) * iota_[0][0];
    for (std::int64_t b = 0; b <= count_[1]; ++b) {
      if (row[b] == 0.0) continue;
      const double v = va + static_cast<double>(b) * iota_[1][1] +
                       static_cast<double>(count_[1] - b) * iota_[1][0];
      if (v >= lambda_) {
        absorbed += row[b];
        row[b] = 0.0;
      } else {
        live += row[b];
      }
    }
  }
  survival_ = dead_mass_ + live;
  hazard_ = before > 0.0 ? absorbed / before : 0.0;
  return before > 0.0 ? survival_ / before : 1.0;
}

}  // namespace qsearch
