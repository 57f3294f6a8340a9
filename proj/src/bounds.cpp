#include "qsearch/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qsearch/info_density.hpp"
#include "qsearch/rival_law.hpp"
#include "qsearch/rng.hpp"
#include "qsearch/search_space.hpp"
#include "qsearch/sum_distribution.hpp"

namespace qsearch {

namespace {

// Pr{ rival score >= true score } given responses, from the lattice law.
double rival_tail_from_counts(const InfoDensityTable& decoder, const std::vector<std::int64_t>& totals,
                              const std::vector<std::int64_t>& true_ones) {
  const double s = score_from_counts(decoder, totals, true_ones);
  const RivalLaw law = rival_score_law(decoder, totals);
  return law.p_greater(s) + law.p_equal(s);
}

void response_counts(const InfoDensityTable& decoder, const std::vector<int>& responses,
                     const std::vector<int>& true_bits, std::vector<std::int64_t>& totals,
                     std::vector<std::int64_t>& true_ones) {
  totals.assign(decoder.output_size(), 0);
  true_ones.assign(decoder.output_size(), 0);
  for (std::size_t t = 0; t < responses.size(); ++t) {
    ++totals[responses[t]];
    if (true_bits[t]) ++true_ones[responses[t]];
  }
}

}  // namespace

double rival_tail_exact(const ChannelFamily& family, double p, const std::vector<int>& responses,
                        const std::vector<int>& true_bits) {
  const InfoDensityTable decoder = density_table(p, matrix_at(family, p));
  std::vector<std::int64_t> totals, true_ones;
  response_counts(decoder, responses, true_bits, totals, true_ones);
  return rival_tail_from_counts(decoder, totals, true_ones);
}

double rival_tail_brute_force(const ChannelFamily& family, double p, const std::vector<int>& responses,
                              const std::vector<int>& true_bits) {
  const int n = static_cast<int>(responses.size());
  if (n > 20) throw std::invalid_argument("brute force supports n <= 20");
  const InfoDensityTable decoder = density_table(p, matrix_at(family, p));
  std::vector<std::int64_t> totals, true_ones;
  response_counts(decoder, responses, true_bits, totals, true_ones);
  const double target = score_from_counts(decoder, totals, true_ones);

  const int ny = decoder.output_size();
  std::vector<std::int64_t> ones(ny);
  double tail = 0.0;
  for (std::uint32_t word = 0; word < (std::uint32_t{1} << n); ++word) {
    std::fill(ones.begin(), ones.end(), 0);
    int weight_ones = 0;
    for (int t = 0; t < n; ++t) {
      if ((word >> t) & 1u) {
        ++ones[responses[t]];
        ++weight_ones;
      }
    }
    const double score = score_from_counts(decoder, totals, ones);
    if (score >= target) {
      tail += std::pow(p, weight_ones) * std::pow(1.0 - p, n - weight_ones);
    }
  }
  return tail;
}

AchievabilityResult achievability_bound(const ChannelFamily& family, int n, int d,
                                        double cells_per_axis, double p,
                                        const AchievabilityOptions& opts) {
  if (n < 1 || d < 1) throw std::invalid_argument("n and d must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  if (opts.mc_samples < 1000) throw std::invalid_argument("need at least 1000 outer samples");
  SearchConfig probe;
  probe.n = n;
  probe.d = d;
  probe.cells_per_axis = cells_per_axis;
  const double cells = probe.total_cells_real();

  AchievabilityResult result;
  const double d_log_m = d * std::log(cells_per_axis);
  result.eta = opts.eta > 0.0 ? opts.eta : std::sqrt(d_log_m / (2.0 * cells));
  if (!(result.eta < std::min(p, 1.0 - p))) {
    throw std::domain_error("eta must stay below min(p, 1-p) for the continuity certificate");
  }
  result.continuity = continuity_constant(family, p, result.eta);
  result.tail_term = 4.0 * n * std::exp(-2.0 * cells * result.eta * result.eta);

  const InfoDensityTable decoder = density_table(p, matrix_at(family, p));
  const ChannelMatrix nominal = matrix_at(family, p);
  const int ny = decoder.output_size();

  const int workers = std::max(1, opts.threads);
  std::vector<double> sums(workers, 0.0), sqsums(workers, 0.0);
  auto work = [&](int worker) {
    std::vector<std::int64_t> totals(ny), true_ones(ny);
    for (int i = worker; i < opts.mc_samples; i += workers) {
      std::mt19937_64 rng = substream_rng(opts.seed, static_cast<std::uint64_t>(i));
      std::fill(totals.begin(), totals.end(), 0);
      std::fill(true_ones.begin(), true_ones.end(), 0);
      for (int t = 0; t < n; ++t) {
        const int bit = bernoulli(rng, p) ? 1 : 0;
        const int y = sample_symbol(nominal, bit, rng);
        ++totals[y];
        if (bit) ++true_ones[y];
      }
      const double tail = rival_tail_from_counts(decoder, totals, true_ones);
      const double value = std::min(1.0, cells * tail);
      sums[worker] += value;
      sqsums[worker] += value * value;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  double sum = 0.0, sq = 0.0;
  for (int w = 0; w < workers; ++w) {
    sum += sums[w];
    sq += sqsums[w];
  }
  const double mean = sum / opts.mc_samples;
  const double var = std::max(0.0, sq / opts.mc_samples - mean * mean);
  const double factor = std::exp(n * result.eta * result.continuity);
  result.union_term = factor * mean;
  result.mc_halfwidth = factor * 1.959963984540054 * std::sqrt(var / opts.mc_samples);
  result.eps_upper = result.tail_term + result.union_term;
  result.clipped = result.eps_upper > 1.0;
  return result;
}

ConverseResult converse_bound(const ChannelFamily& family, int n, int d, double eps,
                              const ConverseOptions& opts) {
  if (n < 1 || d < 1) throw std::invalid_argument("n and d must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  ConverseResult result;
  result.beta = opts.beta > 0.0 ? opts.beta : 1.0 / (d * std::sqrt(static_cast<double>(n)));
  result.kappa = opts.kappa > 0.0 ? opts.kappa : 1.0 / std::sqrt(static_cast<double>(n));
  result.level = eps + 2.0 * d * result.beta + result.kappa;
  if (result.level >= 1.0) {
    throw std::domain_error("eps + 2 d beta + kappa must stay below 1");
  }

  std::vector<double> grid = opts.q_grid;
  if (grid.empty()) {
    for (double q = 0.01; q < 0.995; q += 0.02) grid.push_back(q);
  }
  double best = -std::numeric_limits<double>::infinity();
  double best_q = grid.front();
  for (const double q : grid) {
    const InfoDensityTable table = density_table(q, matrix_at(family, q));
    const SumDistribution dist = sum_distribution(table, n);
    const double value = quantile(dist, result.level);
    if (value > best) {
      best = value;
      best_q = q;
    }
  }
  result.best_q = best_q;
  result.neg_log_delta_upper =
      (-static_cast<double>(d) * std::log(result.beta) - std::log(result.kappa) + best) / d;
  return result;
}

std::string BoundReport::to_json() const {
  std::ostringstream os;
  os.precision(12);
  os << "{\n"
     << "  \"family\": \"" << family << "\",\n"
     << "  \"n\": " << n << ",\n"
     << "  \"d\": " << d << ",\n"
     << "  \"cells_per_axis\": " << cells_per_axis << ",\n"
     << "  \"p\": " << p << ",\n"
     << "  \"eps\": " << eps << ",\n"
     << "  \"achievability\": {\n"
     << "    \"eps_upper\": " << achievability.eps_upper << ",\n"
     << "    \"clipped\": " << (achievability.clipped ? "true" : "false") << ",\n"
     << "    \"tail_term\": " << achievability.tail_term << ",\n"
     << "    \"union_term\": " << achievability.union_term << ",\n"
     << "    \"mc_halfwidth\": " << achievability.mc_halfwidth << ",\n"
     << "    \"eta\": " << achievability.eta << ",\n"
     << "    \"continuity\": " << achievability.continuity << "\n"
     << "  },\n"
     << "  \"converse\": {\n"
     << "    \"neg_log_delta_upper\": " << converse.neg_log_delta_upper << ",\n"
     << "    \"best_q\": " << converse.best_q << ",\n"
     << "    \"level\": " << converse.level << ",\n"
     << "    \"beta\": " << converse.beta << ",\n"
     << "    \"kappa\": " << converse.kappa << "\n"
     << "  }\n"
     << "}\n";
  return os.str();
}

}  // namespace qsearch
