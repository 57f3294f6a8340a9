#include "qsearch/nonadaptive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "qsearch/info_density.hpp"
#include "qsearch/multi_target.hpp"
#include "qsearch/rival_law.hpp"
#include "qsearch/rng.hpp"

namespace qsearch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TrialOutcome {
  bool decode_error = false;
  bool excess = false;
};

CodebookModel resolve_model(const SearchConfig& config, const SingleTargetOptions& opts) {
  if (opts.model != CodebookModel::Auto) return opts.model;
  const auto exact = config.total_cells_exact();
  if (exact && *exact <= config.memory_cap_cells &&
      config.n * *exact <= opts.explicit_bit_budget) {
    return CodebookModel::Explicit;
  }
  return CodebookModel::Implicit;
}

// ---------------------------------------------------------------------------
// explicit model: materialized codebook, maximum-density decoding

struct ExplicitScratch {
  std::vector<std::uint64_t> masks;  // |Y| x words_per_cell response masks
  std::vector<std::int64_t> totals;
  std::vector<std::int64_t> ones;
  std::vector<double> coords;
  std::vector<std::int64_t> cells;
};

TrialOutcome explicit_trial(const SearchConfig& config, const InfoDensityTable& decoder,
                            const Codebook* frozen, const TargetSampler& sampler,
                            std::mt19937_64& rng, ExplicitScratch& scratch,
                            std::vector<std::int64_t>* decoded) {
  const std::int64_t M = static_cast<std::int64_t>(config.cells_per_axis);
  const double delta = 1.0 / config.cells_per_axis;

  scratch.coords.resize(config.d);
  sampler(rng, scratch.coords);
  scratch.cells.resize(config.d);
  for (int j = 0; j < config.d; ++j) scratch.cells[j] = quantize(scratch.coords[j], config.cells_per_axis);
  const std::int64_t target = linear_cell(scratch.cells, M);

  Codebook local;
  const Codebook* book = frozen;
  if (!frozen) {
    local = generate_codebook(config, rng);
    book = &local;
  }
  const std::int64_t target0 = target - 1;
  const std::vector<int> responses = oracle_and_noise(*book, {&target, 1}, config.family, rng);

  const int ny = decoder.output_size();
  const int wpc = book->words_per_cell;
  scratch.masks.assign(static_cast<std::size_t>(ny) * wpc, 0);
  scratch.totals.assign(ny, 0);
  for (int t = 0; t < config.n; ++t) {
    scratch.masks[static_cast<std::size_t>(responses[t]) * wpc + t / 64] |= std::uint64_t{1} << (t % 64);
    ++scratch.totals[responses[t]];
  }

  scratch.ones.resize(ny);
  double best = kNegInf;
  std::int64_t best_cell = 0;
  for (std::int64_t cell = 0; cell < book->cells; ++cell) {
    const std::uint64_t* words = book->cell_words(cell);
    for (int sym = 0; sym < ny; ++sym) {
      std::int64_t count = 0;
      const std::uint64_t* mask = scratch.masks.data() + static_cast<std::size_t>(sym) * wpc;
      for (int w = 0; w < wpc; ++w) count += std::popcount(words[w] & mask[w]);
      scratch.ones[sym] = count;
    }
    const double score = score_from_counts(decoder, scratch.totals, scratch.ones);
    if (score > best) {  // ties keep the smallest linear index
      best = score;
      best_cell = cell;
    }
  }

  if (decoded) *decoded = {best_cell + 1};
  TrialOutcome out;
  out.decode_error = (best_cell != target0);
  const std::vector<std::int64_t> decoded_axes = axis_cells(best_cell + 1, M, config.d);
  for (int j = 0; j < config.d; ++j) {
    if (std::abs(cell_midpoint(decoded_axes[j], config.cells_per_axis) - scratch.coords[j]) > delta) {
      out.excess = true;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// implicit model: rival population summarized by its exact score law

TrialOutcome implicit_trial(const SearchConfig& config, const InfoDensityTable& decoder,
                            const TargetSampler& sampler, std::mt19937_64& rng,
                            ExplicitScratch& scratch, std::vector<std::int64_t>* decoded) {
  const double M = config.cells_per_axis;
  const double delta = 1.0 / M;
  const double total = config.total_cells_real();
  const double rivals = total - 1.0;
  const auto exact_total = config.total_cells_exact();
  const double p = config.codebook_prob;

  scratch.coords.resize(config.d);
  sampler(rng, scratch.coords);
  scratch.cells.resize(config.d);
  for (int j = 0; j < config.d; ++j) scratch.cells[j] = quantize(scratch.coords[j], M);
  const std::int64_t target =
      exact_total ? linear_cell(scratch.cells, static_cast<std::int64_t>(M)) : 0;

  const int ny = decoder.output_size();
  scratch.totals.assign(ny, 0);
  scratch.ones.assign(ny, 0);
  for (int t = 0; t < config.n; ++t) {
    const bool bit = bernoulli(rng, p);
    const std::int64_t rival_ones = sample_success_count(rivals, p, rng);
    const double q = (static_cast<double>(rival_ones) + (bit ? 1.0 : 0.0)) / total;
    const ChannelMatrix m = matrix_at(config.family, q);
    const int y = sample_symbol(m, bit ? 1 : 0, rng);
    ++scratch.totals[y];
    if (bit) ++scratch.ones[y];
  }
  const double true_score = score_from_counts(decoder, scratch.totals, scratch.ones);
  const RivalLaw law = rival_score_law(decoder, scratch.totals);

  TrialOutcome out;
  const double p_gt = law.p_greater(true_score);
  const std::int64_t n_gt = sample_success_count(rivals, p_gt, rng);
  if (n_gt >= 1) {
    out.decode_error = true;
  } else {
    const double p_eq = std::min(1.0, law.p_equal(true_score) / std::max(1.0 - p_gt, 1e-300));
    const std::int64_t n_eq = sample_success_count(rivals, p_eq, rng);
    if (n_eq >= 1) {
      double win;
      if (exact_total) {
        // smallest linear index wins; tied rivals are uniform distinct cells
        win = 1.0;
        for (std::int64_t i = 0; i < n_eq && win > 0.0; ++i) {
          win *= std::max(0.0, (total - static_cast<double>(target) - i) / (rivals - i));
        }
      } else {
        win = 1.0 / static_cast<double>(n_eq + 1);
      }
      out.decode_error = !(uniform01(rng) < win);
    }
  }

  if (out.decode_error) {
    // A wrong cell still meets the tolerance only if every coordinate of
    // its midpoint lies within delta of the target.
    bool lucky = false;
    if (exact_total) {
      std::uniform_int_distribution<std::int64_t> pick(1, *exact_total - 1);
      std::int64_t winner = pick(rng);
      if (winner >= target) ++winner;
      const std::vector<std::int64_t> axes =
          axis_cells(winner, static_cast<std::int64_t>(M), config.d);
      lucky = true;
      for (int j = 0; j < config.d; ++j) {
        if (std::abs(cell_midpoint(axes[j], M) - scratch.coords[j]) > delta) {
          lucky = false;
          break;
        }
      }
      if (decoded) *decoded = {winner};
    } else {
      lucky = uniform01(rng) < static_cast<double>((std::int64_t{1} << config.d) - 1) / rivals;
    }
    out.excess = !lucky;
  } else if (decoded) {
    *decoded = {target};
  }
  return out;
}

// ---------------------------------------------------------------------------

TrialStats run_trials(const SearchConfig& config, std::int64_t trials, int threads,
                      const std::function<TrialOutcome(std::mt19937_64&, ExplicitScratch&,
                                                       std::vector<std::int64_t>*)>& trial_fn,
                      std::vector<std::vector<std::int64_t>>* record) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (record && threads > 1) throw std::invalid_argument("decoded-cell recording needs threads == 1");
  if (record) record->assign(trials, {});

  TrialStats stats;
  stats.trials = trials;
  stats.resolution_delta = 1.0 / config.cells_per_axis;

  const int workers = std::max(1, threads);
  std::vector<std::int64_t> excess(workers, 0), errors(workers, 0);
  auto work = [&](int worker) {
    ExplicitScratch scratch;
    for (std::int64_t trial = worker; trial < trials; trial += workers) {
      std::mt19937_64 rng = substream_rng(config.seed, static_cast<std::uint64_t>(trial));
      std::vector<std::int64_t>* decoded = record ? &(*record)[trial] : nullptr;
      const TrialOutcome outcome = trial_fn(rng, scratch, decoded);
      excess[worker] += outcome.excess ? 1 : 0;
      errors[worker] += outcome.decode_error ? 1 : 0;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (int w = 0; w < workers; ++w) {
    stats.excess_count += excess[w];
    stats.decode_error_count += errors[w];
  }
  return stats;
}

}  // namespace

double TrialStats::halfwidth() const { return wilson_halfwidth(excess_count, trials); }

double wilson_halfwidth(std::int64_t count, std::int64_t trials) {
  if (trials <= 0) return 0.0;
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(count) / n;
  const double z2 = z * z;
  return (z / (1.0 + z2 / n)) * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
}

TargetSampler uniform_target_sampler() {
  return [](std::mt19937_64& rng, std::span<double> out) {
    for (double& v : out) v = uniform01(rng);
  };
}

TrialStats run_single_target(const SearchConfig& config, const TargetSampler& sampler,
                             std::int64_t trials, const SingleTargetOptions& opts) {
  config.validate();
  const CodebookModel model = resolve_model(config, opts);
  const InfoDensityTable decoder =
      density_table(config.codebook_prob, matrix_at(config.family, config.codebook_prob));

  if (model == CodebookModel::Explicit) {
    Codebook frozen;
    const bool fresh = opts.fresh_codebook;
    if (!fresh) {
      std::mt19937_64 rng = substream_rng(config.seed, ~std::uint64_t{0});
      frozen = generate_codebook(config, rng);
    }
    return run_trials(
        config, trials, opts.threads,
        [&](std::mt19937_64& rng, ExplicitScratch& scratch, std::vector<std::int64_t>* decoded) {
          return explicit_trial(config, decoder, fresh ? nullptr : &frozen, sampler, rng, scratch,
                                decoded);
        },
        opts.record_decoded);
  }
  if (!opts.fresh_codebook) {
    throw std::invalid_argument("a frozen codebook requires the explicit model");
  }
  return run_trials(
      config, trials, opts.threads,
      [&](std::mt19937_64& rng, ExplicitScratch& scratch, std::vector<std::int64_t>* decoded) {
        return implicit_trial(config, decoder, sampler, rng, scratch, decoded);
      },
      opts.record_decoded);
}

TrialStats run_separate_search(const SearchConfig& config, const TargetSampler& sampler,
                               std::int64_t trials, const SingleTargetOptions& opts) {
  config.validate();
  if (config.d < 2) throw std::invalid_argument("separate search needs d >= 2");
  SearchConfig dim = config;
  dim.d = 1;
  dim.n = config.n / config.d;
  if (dim.n < 1) throw std::invalid_argument("fewer queries than dimensions");
  const CodebookModel model = resolve_model(dim, opts);
  if (model != CodebookModel::Explicit && !opts.fresh_codebook) {
    throw std::invalid_argument("a frozen codebook requires the explicit model");
  }
  const InfoDensityTable decoder =
      density_table(dim.codebook_prob, matrix_at(dim.family, dim.codebook_prob));

  return run_trials(
      config, trials, opts.threads,
      [&, model](std::mt19937_64& rng, ExplicitScratch& scratch, std::vector<std::int64_t>* decoded) {
        TrialOutcome combined;
        for (int j = 0; j < config.d; ++j) {
          const TrialOutcome one =
              model == CodebookModel::Explicit
                  ? explicit_trial(dim, decoder, nullptr, sampler, rng, scratch, nullptr)
                  : implicit_trial(dim, decoder, sampler, rng, scratch, nullptr);
          combined.decode_error |= one.decode_error;
          combined.excess |= one.excess;
        }
        (void)decoded;
        return combined;
      },
      opts.record_decoded);
}

// ---------------------------------------------------------------------------
// multi-target threshold decoding

namespace {

struct MultiScratch {
  std::vector<std::uint64_t> masks;
  std::vector<std::int64_t> totals;
  std::vector<std::int64_t> ones_cache;   // cells x ny one-counts
  std::vector<double> denom1_cache;       // cells: sum log P(y | x_single)
  std::vector<double> full1_cache;        // cells: sum log P(y | or = bit)
  std::vector<double> coords;             // k x d coordinates
  std::vector<std::int64_t> axisbuf;
  std::vector<std::int64_t> truth;        // sorted distinct occupied cells
  std::vector<std::int64_t> found;
};

// Membership test for a candidate tuple against every subset condition.
// counts[mask][sym] are response counts stratified by the tuple bits.
bool tuple_accepted(const MultiJointLaw& law, const std::vector<std::int64_t>& counts, int t, int ny,
                    double d_log_m, double gamma) {
  double full = 0.0;
  for (int mask = 0; mask < (1 << t); ++mask) {
    const int orall = mask != 0 ? 1 : 0;
    for (int sym = 0; sym < ny; ++sym) {
      const std::int64_t c = counts[static_cast<std::size_t>(mask) * ny + sym];
      if (c == 0) continue;
      const double lp = law.log_given_or(orall, sym);
      if (lp == kNegInf) return false;
      full += static_cast<double>(c) * lp;
    }
  }
  for (int jmask = 0; jmask < (1 << t); ++jmask) {
    const int j = std::popcount(static_cast<unsigned>(jmask));
    const int denom_index = (j == t) ? 0 : j;  // full subset compares to the marginal
    double denom = 0.0;
    bool denom_zero = false;
    for (int mask = 0; mask < (1 << t) && !denom_zero; ++mask) {
      const int orj = (j == t) ? 0 : ((mask & jmask) != 0 ? 1 : 0);
      for (int sym = 0; sym < ny; ++sym) {
        const std::int64_t c = counts[static_cast<std::size_t>(mask) * ny + sym];
        if (c == 0) continue;
        const double lp = law.log_cond[denom_index][orj](sym);
        if (lp == kNegInf) {
          denom_zero = true;  // subset explains the responses with probability zero
          break;
        }
        denom += static_cast<double>(c) * lp;
      }
    }
    if (denom_zero) continue;
    if (!(full - denom > d_log_m * j + gamma)) return false;
  }
  return true;
}

TrialOutcome multi_target_trial(const SearchConfig& config, int k, double gamma,
                                const std::vector<MultiJointLaw>& laws, const TargetSampler& sampler,
                                std::mt19937_64& rng, MultiScratch& ms,
                                std::vector<std::int64_t>* decoded) {
  const std::int64_t M = static_cast<std::int64_t>(config.cells_per_axis);
  const double delta = 1.0 / config.cells_per_axis;
  const double d_log_m = config.d * std::log(config.cells_per_axis);
  const int ny = config.family.output_size();

  ms.coords.resize(static_cast<std::size_t>(k) * config.d);
  sampler(rng, ms.coords);
  ms.truth.clear();
  ms.axisbuf.resize(config.d);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < config.d; ++j) {
      ms.axisbuf[j] = quantize(ms.coords[static_cast<std::size_t>(i) * config.d + j],
                               config.cells_per_axis);
    }
    ms.truth.push_back(linear_cell(ms.axisbuf, M));
  }
  std::sort(ms.truth.begin(), ms.truth.end());
  ms.truth.erase(std::unique(ms.truth.begin(), ms.truth.end()), ms.truth.end());

  const Codebook book = generate_codebook(config, rng);
  const std::vector<int> responses = oracle_and_noise(book, ms.truth, config.family, rng);

  const int wpc = book.words_per_cell;
  ms.masks.assign(static_cast<std::size_t>(ny) * wpc, 0);
  ms.totals.assign(ny, 0);
  for (int t = 0; t < config.n; ++t) {
    ms.masks[static_cast<std::size_t>(responses[t]) * wpc + t / 64] |= std::uint64_t{1} << (t % 64);
    ++ms.totals[responses[t]];
  }

  const std::int64_t cells = book.cells;
  ms.ones_cache.assign(static_cast<std::size_t>(cells) * ny, 0);
  for (std::int64_t cell = 0; cell < cells; ++cell) {
    const std::uint64_t* words = book.cell_words(cell);
    for (int sym = 0; sym < ny; ++sym) {
      std::int64_t count = 0;
      const std::uint64_t* mask = ms.masks.data() + static_cast<std::size_t>(sym) * wpc;
      for (int w = 0; w < wpc; ++w) count += std::popcount(words[w] & mask[w]);
      ms.ones_cache[static_cast<std::size_t>(cell) * ny + sym] = count;
    }
  }

  // Descending tuple sizes; lexicographically smallest accepted tuple wins.
  ms.found.clear();
  std::vector<std::int64_t> counts;
  std::vector<int> tuple;
  for (int t = k; t >= 1 && ms.found.empty(); --t) {
    const MultiJointLaw& law = laws[t - 1];
    counts.assign(static_cast<std::size_t>(1 << t) * ny, 0);
    tuple.assign(t, 0);
    // iterate ordered tuples 0 <= c_0 < ... < c_{t-1} < cells
    for (int i = 0; i < t; ++i) tuple[i] = i;
    if (static_cast<std::int64_t>(t) > cells) continue;
    for (;;) {
      // counts stratified by tuple bits, via per-cell one-count cache for
      // t <= 2 and word intersections otherwise
      std::fill(counts.begin(), counts.end(), 0);
      if (t == 1) {
        const std::int64_t a = tuple[0];
        for (int sym = 0; sym < ny; ++sym) {
          const std::int64_t a1 = ms.ones_cache[static_cast<std::size_t>(a) * ny + sym];
          counts[static_cast<std::size_t>(1) * ny + sym] = a1;
          counts[sym] = ms.totals[sym] - a1;
        }
      } else if (t == 2) {
        const std::int64_t a = tuple[0], b = tuple[1];
        const std::uint64_t* wa = book.cell_words(a);
        const std::uint64_t* wb = book.cell_words(b);
        for (int sym = 0; sym < ny; ++sym) {
          std::int64_t both = 0;
          const std::uint64_t* mask = ms.masks.data() + static_cast<std::size_t>(sym) * wpc;
          for (int w = 0; w < wpc; ++w) both += std::popcount(wa[w] & wb[w] & mask[w]);
          const std::int64_t a1 = ms.ones_cache[static_cast<std::size_t>(a) * ny + sym];
          const std::int64_t b1 = ms.ones_cache[static_cast<std::size_t>(b) * ny + sym];
          counts[static_cast<std::size_t>(3) * ny + sym] = both;
          counts[static_cast<std::size_t>(1) * ny + sym] = a1 - both;
          counts[static_cast<std::size_t>(2) * ny + sym] = b1 - both;
          counts[sym] = ms.totals[sym] - a1 - b1 + both;
        }
      } else {
        for (int step = 0; step < config.n; ++step) {
          int mask = 0;
          for (int i = 0; i < t; ++i) mask |= book.bit(step, tuple[i]) ? (1 << i) : 0;
          ++counts[static_cast<std::size_t>(mask) * ny + responses[step]];
        }
      }
      if (tuple_accepted(law, counts, t, ny, d_log_m, gamma)) {
        ms.found.assign(tuple.begin(), tuple.end());
        for (std::int64_t& c : ms.found) ++c;  // 1-based cells
        break;
      }
      // next ordered tuple
      int pos = t - 1;
      while (pos >= 0 && tuple[pos] == cells - t + pos) --pos;
      if (pos < 0) break;
      ++tuple[pos];
      for (int i = pos + 1; i < t; ++i) tuple[i] = tuple[i - 1] + 1;
    }
  }

  if (decoded) *decoded = ms.found;
  TrialOutcome out;
  out.decode_error = ms.found != ms.truth;
  // Every target must be covered by some returned cell within delta.
  for (int i = 0; i < k && !out.excess; ++i) {
    bool covered = false;
    for (const std::int64_t cell : ms.found) {
      const std::vector<std::int64_t> axes = axis_cells(cell, M, config.d);
      bool close = true;
      for (int j = 0; j < config.d; ++j) {
        if (std::abs(cell_midpoint(axes[j], config.cells_per_axis) -
                     ms.coords[static_cast<std::size_t>(i) * config.d + j]) > delta) {
          close = false;
          break;
        }
      }
      if (close) {
        covered = true;
        break;
      }
    }
    if (!covered) out.excess = true;
  }
  return out;
}

double tuple_count(double cells, int t) {
  double c = 1.0;
  for (int i = 0; i < t; ++i) c *= (cells - i) / (i + 1);
  return c;
}

}  // namespace

TrialStats run_multi_target(const SearchConfig& config, int k, double gamma,
                            const TargetSampler& sampler, std::int64_t trials,
                            const MultiTargetRunOptions& opts) {
  config.validate();
  if (k < 1 || k > 3) throw std::invalid_argument("multi-target runs support k in [1,3]");
  const std::int64_t cells = config.materializable_cells();
  double scans = 0.0;
  for (int t = 1; t <= k; ++t) scans += tuple_count(static_cast<double>(cells), t);
  if (scans > static_cast<double>(opts.tuple_budget)) {
    throw std::length_error("tuple scan exceeds the configured budget");
  }

  std::vector<MultiJointLaw> laws;
  laws.reserve(k);
  for (int t = 1; t <= k; ++t) laws.push_back(multi_joint_law(config.family, config.codebook_prob, t));

  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (opts.record_decoded && opts.threads > 1) {
    throw std::invalid_argument("decoded-cell recording needs threads == 1");
  }
  if (opts.record_decoded) opts.record_decoded->assign(trials, {});

  TrialStats stats;
  stats.trials = trials;
  stats.resolution_delta = 1.0 / config.cells_per_axis;
  const int workers = std::max(1, opts.threads);
  std::vector<std::int64_t> excess(workers, 0), errors(workers, 0);
  auto work = [&](int worker) {
    MultiScratch ms;
    for (std::int64_t trial = worker; trial < trials; trial += workers) {
      std::mt19937_64 rng = substream_rng(config.seed, static_cast<std::uint64_t>(trial));
      std::vector<std::int64_t>* decoded =
          opts.record_decoded ? &(*opts.record_decoded)[trial] : nullptr;
      const TrialOutcome outcome =
          multi_target_trial(config, k, gamma, laws, sampler, rng, ms, decoded);
      excess[worker] += outcome.excess ? 1 : 0;
      errors[worker] += outcome.decode_error ? 1 : 0;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (int w = 0; w < workers; ++w) {
    stats.excess_count += excess[w];
    stats.decode_error_count += errors[w];
  }
  return stats;
}

}  // namespace qsearch
