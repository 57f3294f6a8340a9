#include "qsearch/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "qsearch/info_density.hpp"
#include "qsearch/rival_law.hpp"
#include "qsearch/rng.hpp"

namespace qsearch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct AdaptiveOutcome {
  int tau = -1;  // -1: censored
  bool decode_error = false;
  bool excess = false;
};

// Shared per-trial preamble: target coordinates and cells.
struct TargetDraw {
  std::vector<double> coords;
  std::vector<std::int64_t> axes;
  std::int64_t linear = 0;
};

void draw_target(const AdaptiveConfig& config, const TargetSampler& sampler, std::mt19937_64& rng,
                 bool exact_cells, TargetDraw& target) {
  target.coords.resize(config.d);
  sampler(rng, target.coords);
  target.axes.resize(config.d);
  for (int j = 0; j < config.d; ++j) target.axes[j] = quantize(target.coords[j], config.cells_per_axis);
  target.linear = exact_cells
                      ? linear_cell(target.axes, static_cast<std::int64_t>(config.cells_per_axis))
                      : 0;
}

bool cell_within_delta(const AdaptiveConfig& config, std::int64_t cell, const TargetDraw& target) {
  const std::vector<std::int64_t> axes =
      axis_cells(cell, static_cast<std::int64_t>(config.cells_per_axis), config.d);
  const double delta = 1.0 / config.cells_per_axis;
  for (int j = 0; j < config.d; ++j) {
    if (std::abs(cell_midpoint(axes[j], config.cells_per_axis) - target.coords[j]) > delta) {
      return false;
    }
  }
  return true;
}

AdaptiveOutcome explicit_trial(const AdaptiveConfig& config, const InfoDensityTable& decoder,
                               const TargetSampler& sampler, int max_steps, bool prune,
                               std::int64_t trial, const AdaptiveOptions& opts,
                               std::mt19937_64& rng, std::vector<double>& scores,
                               std::vector<std::uint8_t>& bits) {
  const std::int64_t cells = static_cast<std::int64_t>(config.cells_per_axis);
  std::int64_t total = 1;
  for (int j = 0; j < config.d; ++j) total *= cells;
  const double p = config.codebook_prob;

  TargetDraw target;
  draw_target(config, sampler, rng, true, target);
  const std::int64_t target0 = target.linear - 1;

  scores.assign(total, 0.0);
  bits.resize(total);
  AdaptiveOutcome out;
  for (int step = 1; step <= max_steps; ++step) {
    std::int64_t ones = 0;
    for (std::int64_t cell = 0; cell < total; ++cell) {
      bits[cell] = bernoulli(rng, p) ? 1 : 0;
      ones += bits[cell];
    }
    const double q = static_cast<double>(ones) / static_cast<double>(total);
    const int symbol = sample_symbol(matrix_at(config.family, q), bits[target0], rng);
    double max_score = kNegInf;
    for (std::int64_t cell = 0; cell < total; ++cell) {
      if (!prune || scores[cell] != kNegInf) {
        scores[cell] += decoder.value(bits[cell], symbol);
      }
      max_score = std::max(max_score, scores[cell]);
    }
    if (opts.step_observer) {
      opts.step_observer(trial, step, bits[target0], symbol, scores[target0], max_score);
    }
    if (max_score >= config.threshold) {
      out.tau = step;
      break;
    }
  }

  std::int64_t decoded;
  if (out.tau < 0) {
    // censored: report the current leader (largest index among maxima)
    double best = kNegInf;
    decoded = 0;
    for (std::int64_t cell = 0; cell < total; ++cell) {
      if (scores[cell] >= best) {
        best = scores[cell];
        decoded = cell;
      }
    }
  } else {
    decoded = 0;
    for (std::int64_t cell = 0; cell < total; ++cell) {
      if (scores[cell] >= config.threshold) decoded = cell;  // largest index wins
    }
  }
  out.decode_error = decoded != target0;
  out.excess = !cell_within_delta(config, decoded + 1, target);
  return out;
}

AdaptiveOutcome implicit_trial(const AdaptiveConfig& config, const InfoDensityTable& decoder,
                               const TargetSampler& sampler, int max_steps, std::mt19937_64& rng,
                               RivalSurvival& survival) {
  const SearchConfig probe = config.as_search_config(1);
  const double total = probe.total_cells_real();
  const double rivals = total - 1.0;
  const bool exact_cells = probe.total_cells_exact().has_value();
  const double p = config.codebook_prob;

  TargetDraw target;
  draw_target(config, sampler, rng, exact_cells, target);

  survival.reset();
  double true_score = 0.0;
  AdaptiveOutcome out;
  for (int step = 1; step <= max_steps; ++step) {
    const bool bit = bernoulli(rng, p);
    const std::int64_t rival_ones = sample_success_count(rivals, p, rng);
    const double q = (static_cast<double>(rival_ones) + (bit ? 1.0 : 0.0)) / total;
    const int symbol = sample_symbol(matrix_at(config.family, q), bit ? 1 : 0, rng);
    true_score += decoder.value(bit ? 1 : 0, symbol);
    survival.step(symbol);
    const double hazard = survival.last_hazard();

    if (true_score >= config.threshold) {
      out.tau = step;
      // rivals crossing at the same step outrank the target unless its
      // index is the largest of the group
      const std::int64_t n_hit = sample_success_count(rivals, hazard, rng);
      if (n_hit >= 1) {
        double win = 1.0;
        if (exact_cells) {
          for (std::int64_t i = 0; i < n_hit && win > 0.0; ++i) {
            win *= std::max(0.0, (static_cast<double>(target.linear) - 1.0 - i) / (rivals - i));
          }
        } else {
          win = 1.0 / static_cast<double>(n_hit + 1);
        }
        out.decode_error = !(uniform01(rng) < win);
      }
      break;
    }
    // the process stops early if any rival clears the threshold first
    double p_none = 1.0;
    if (hazard > 0.0) {
      p_none = hazard >= 1.0 ? 0.0 : std::exp(rivals * std::log1p(-hazard));
    }
    if (uniform01(rng) >= p_none) {
      out.tau = step;
      out.decode_error = true;
      break;
    }
  }

  if (out.decode_error) {
    bool lucky = false;
    if (exact_cells) {
      const std::int64_t total_i = static_cast<std::int64_t>(total);
      std::uniform_int_distribution<std::int64_t> pick(1, total_i - 1);
      std::int64_t winner = pick(rng);
      if (winner >= target.linear) ++winner;
      lucky = cell_within_delta(config, winner, target);
    } else {
      lucky = uniform01(rng) <
              static_cast<double>((std::int64_t{1} << config.d) - 1) / rivals;
    }
    out.excess = !lucky;
  } else if (out.tau < 0) {
    out.excess = true;  // censored without a decision
  }
  return out;
}

}  // namespace

SearchConfig AdaptiveConfig::as_search_config(int n) const {
  SearchConfig sc;
  sc.n = n;
  sc.d = d;
  sc.cells_per_axis = cells_per_axis;
  sc.codebook_prob = codebook_prob;
  sc.family = family;
  sc.seed = seed;
  sc.memory_cap_cells = memory_cap_cells;
  return sc;
}

double AdaptiveRunStats::mean_tau() const {
  double sum = 0.0;
  std::int64_t count = 0;
  for (const std::int32_t tau : stopping_times) {
    if (tau >= 0) {
      sum += tau;
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

double AdaptiveRunStats::tau_std() const {
  const double mean = mean_tau();
  double sum = 0.0;
  std::int64_t count = 0;
  for (const std::int32_t tau : stopping_times) {
    if (tau >= 0) {
      sum += (tau - mean) * (tau - mean);
      ++count;
    }
  }
  return count > 1 ? std::sqrt(sum / (count - 1)) : 0.0;
}

AdaptiveRunStats run_adaptive(const AdaptiveConfig& config, const TargetSampler& sampler,
                              std::int64_t trials, const AdaptiveOptions& opts) {
  if (!(config.threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (!(config.codebook_prob > 0.0 && config.codebook_prob < 1.0)) {
    throw std::invalid_argument("codebook probability must lie in (0,1)");
  }
  if (!(config.cells_per_axis >= 2.0)) throw std::invalid_argument("need at least two cells per axis");
  if (trials < 1) throw std::invalid_argument("need at least one trial");

  const InfoDensityTable decoder =
      density_table(config.codebook_prob, matrix_at(config.family, config.codebook_prob));
  const InfoStats one_step = stats(decoder);
  const double a0 = max_used_density(decoder);
  if (!std::isfinite(a0) || !(one_step.mean > 0.0)) {
    throw std::domain_error("adaptive runs need a finite score ceiling and positive drift");
  }
  const int max_steps = config.max_steps > 0
                            ? config.max_steps
                            : static_cast<int>(std::ceil(10.0 * config.threshold / one_step.mean));

  const SearchConfig probe = config.as_search_config(1);
  const auto exact = probe.total_cells_exact();
  CodebookModel model = opts.model;
  if (model == CodebookModel::Auto) {
    model = (exact && *exact <= opts.explicit_cell_budget) ? CodebookModel::Explicit
                                                           : CodebookModel::Implicit;
  }
  if (model == CodebookModel::Explicit &&
      (!exact || *exact > config.memory_cap_cells)) {
    throw std::length_error("cell count exceeds the memory cap; use the implicit model");
  }
  if (opts.step_observer && (model != CodebookModel::Explicit || opts.threads > 1)) {
    throw std::invalid_argument("the step observer needs the explicit model and threads == 1");
  }

  double skip_prob = 0.0;
  if (config.eps_split) {
    const double l = config.eps_split_mean;
    if (!(l > 1.0) || !(config.eps_split_eps > 0.0 && config.eps_split_eps < 1.0)) {
      throw std::invalid_argument("split wrapper needs l' > 1 and eps in (0,1)");
    }
    skip_prob = std::clamp((l * config.eps_split_eps - 1.0) / (l - 1.0), 0.0, 1.0);
  }

  AdaptiveRunStats run;
  run.trials = trials;
  run.stopping_times.assign(trials, 0);
  run.resolution_delta = 1.0 / config.cells_per_axis;
  run.max_step_density = a0;
  run.mean_query_bound = (config.threshold + a0) / one_step.mean;

  const int workers = std::max(1, opts.threads);
  std::vector<std::int64_t> excess(workers, 0), errors(workers, 0), censored(workers, 0);
  auto work = [&](int worker) {
    std::vector<double> scores;
    std::vector<std::uint8_t> bits;
    RivalSurvival survival(decoder, config.threshold, max_steps);
    for (std::int64_t trial = worker; trial < trials; trial += workers) {
      std::mt19937_64 rng = substream_rng(config.seed, static_cast<std::uint64_t>(trial));
      if (skip_prob > 0.0 && uniform01(rng) < skip_prob) {
        // no queries: output the first cell
        TargetDraw target;
        draw_target(config, sampler, rng, false, target);
        bool lucky = true;
        for (int j = 0; j < config.d; ++j) {
          if (std::abs(cell_midpoint(1, config.cells_per_axis) - target.coords[j]) >
              run.resolution_delta) {
            lucky = false;
            break;
          }
        }
        run.stopping_times[trial] = 0;
        excess[worker] += lucky ? 0 : 1;
        errors[worker] += 1;
        continue;
      }
      const AdaptiveOutcome outcome =
          model == CodebookModel::Explicit
              ? explicit_trial(config, decoder, sampler, max_steps, opts.prune_disqualified, trial,
                               opts, rng, scores, bits)
              : implicit_trial(config, decoder, sampler, max_steps, rng, survival);
      run.stopping_times[trial] = outcome.tau;
      censored[worker] += outcome.tau < 0 ? 1 : 0;
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
    run.excess_count += excess[w];
    run.decode_error_count += errors[w];
    run.censored += censored[w];
  }
  return run;
}

LambdaChoice choose_lambda(double target_mean_queries, double capacity, double a0, int d) {
  if (!(capacity > 0.0)) throw std::invalid_argument("capacity must be positive");
  const double lambda = target_mean_queries * capacity - a0;
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("target mean query count is too small for a positive threshold");
  }
  const double log_m = (lambda - std::log(target_mean_queries)) / d;
  LambdaChoice choice;
  choice.lambda = lambda;
  choice.cells_per_axis = std::max<std::int64_t>(2, static_cast<std::int64_t>(std::exp(log_m)));
  return choice;
}

StoppingBoundReport verify_stopping_bounds(const AdaptiveRunStats& run,
                                           const AdaptiveConfig& config, double slack,
                                           bool exact_c1) {
  const InfoDensityTable decoder =
      density_table(config.codebook_prob, matrix_at(config.family, config.codebook_prob));
  StoppingBoundReport report;
  report.valid = run.censored == 0;
  report.exact_c1 = exact_c1;

  if (exact_c1) {
    const auto exact = config.as_search_config(1).total_cells_exact();
    if (!exact || *exact > (std::int64_t{1} << 16)) {
      throw std::invalid_argument("exact mismatched mean needs at most 2^16 cells");
    }
    // One-step mean under the true (realized-size) law: average the density
    // against the channel at q = (b + x)/M^d with b binomial over rivals.
    const std::int64_t total = *exact;
    const double p = config.codebook_prob;
    const double lp = std::log(p), lq = std::log1p(-p);
    const double lgn = std::lgamma(static_cast<double>(total));  // (total-1)!
    double c1 = 0.0;
    for (std::int64_t b = 0; b < total; ++b) {
      const double lw = lgn - std::lgamma(static_cast<double>(b) + 1.0) -
                        std::lgamma(static_cast<double>(total - 1 - b) + 1.0) +
                        static_cast<double>(b) * lp + static_cast<double>(total - 1 - b) * lq;
      const double w = std::exp(lw);
      for (int x = 0; x < 2; ++x) {
        const double px = x ? p : 1.0 - p;
        const double q = (static_cast<double>(b) + x) / static_cast<double>(total);
        const ChannelMatrix m = matrix_at(config.family, q);
        for (int y = 0; y < m.output_size(); ++y) {
          if (m.p(x, y) <= 0.0 || !decoder.used(x, y)) continue;
          c1 += w * px * m.p(x, y) * decoder.value(x, y);
        }
      }
    }
    report.c1 = c1;
  } else {
    report.c1 = stats(decoder).mean;
  }

  report.mean_tau = run.mean_tau();
  report.mean_bound = (config.threshold + run.max_step_density) / report.c1 * (1.0 + slack);
  report.mean_ok = report.mean_tau <= report.mean_bound;

  const double total_real = std::pow(config.cells_per_axis, config.d);
  report.error_rate = run.decode_error_rate();
  report.error_bound = (total_real - 1.0) * std::exp(-config.threshold) * (1.0 + slack) +
                       3.0 * wilson_halfwidth(run.decode_error_count, run.trials);
  report.error_ok = report.error_rate <= report.error_bound;
  return report;
}

}  // namespace qsearch
