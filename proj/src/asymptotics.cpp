#include "qsearch/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qsearch/normal.hpp"

namespace qsearch {

namespace {

double objective(const ChannelFamily& family, double q) {
  return stats(density_table(q, matrix_at(family, q))).mean;
}

// Golden-section maximization on [lo, hi]; the bracket comes from a grid
// local maximum, so the function is unimodal there.
double golden_max(const ChannelFamily& family, double lo, double hi, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(family, c);
  double fd = objective(family, d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(family, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(family, d);
    }
  }
  double q = 0.5 * (a + b);
  // Golden section stalls once curvature differences drop under the
  // floating-point noise floor; one parabolic vertex fit at a wider
  // sampling width recovers the maximizer to ~1e-10.
  const double h = 1e-5;
  if (q - h > 0.0 && q + h < 1.0) {
    const double fm = objective(family, q - h);
    const double f0 = objective(family, q);
    const double fp = objective(family, q + h);
    const double curvature = fp + fm - 2.0 * f0;
    if (curvature < 0.0) {
      const double shift = 0.5 * h * (fm - fp) / curvature;
      if (std::abs(shift) < h) q += shift;
    }
  }
  return q;
}

}  // namespace

CapacityResult capacity(const ChannelFamily& family, const CapacityOptions& opts) {
  if (!(opts.grid_step > 0.0 && opts.grid_step <= 1e-3)) {
    throw std::invalid_argument("grid step must lie in (0, 1e-3]");
  }
  const int cells = static_cast<int>(std::llround(1.0 / opts.grid_step));
  std::vector<double> value(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    value[i] = objective(family, static_cast<double>(i) / cells);
  }
  const double grid_best = *std::max_element(value.begin(), value.end());

  // Refine every grid local maximum that is in reach of the global one.
  std::vector<std::pair<double, double>> refined;  // (q, C)
  for (int i = 0; i <= cells; ++i) {
    const bool left_ok = (i == 0) || value[i] >= value[i - 1];
    const bool right_ok = (i == cells) || value[i] >= value[i + 1];
    if (!(left_ok && right_ok)) continue;
    if (value[i] < grid_best - std::max(opts.value_window, 1e2 * opts.refine_tol)) continue;
    const double lo = std::max(0.0, (i - 1.0) / cells);
    const double hi = std::min(1.0, (i + 1.0) / cells);
    const double q = golden_max(family, lo, hi, opts.refine_tol);
    refined.emplace_back(q, objective(family, q));
  }

  const double best =
      std::max_element(refined.begin(), refined.end(), [](const auto& a, const auto& b) {
        return a.second < b.second;
      })->second;

  std::sort(refined.begin(), refined.end());
  CapacityResult result;
  result.capacity = best;
  const double spacing = std::max(opts.dedupe_spacing, 10.0 * opts.refine_tol);
  for (const auto& [q, c] : refined) {
    if (c < best - opts.value_window) continue;
    if (!result.maximizers.empty() && q - result.maximizers.back() <= spacing) continue;
    result.maximizers.push_back(q);
    const InfoStats s = stats(density_table(q, matrix_at(family, q)));
    result.variances.push_back(s.variance);
    result.third_moments.push_back(s.third_abs);
  }
  result.v_low = *std::min_element(result.variances.begin(), result.variances.end());
  result.v_high = *std::max_element(result.variances.begin(), result.variances.end());
  return result;
}

double dispersion_for_eps(const CapacityResult& result, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  return eps < 0.5 ? result.v_low : result.v_high;
}

double second_order_resolution(double C, double V, int n, int d, double eps, ThirdOrder third) {
  if (n < 1 || d < 1) throw std::invalid_argument("n and d must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  double r = 0.0;
  if (third == ThirdOrder::MinusHalfLog) r = -0.5 * std::log(static_cast<double>(n));
  if (third == ThirdOrder::PlusLog) r = std::log(static_cast<double>(n));
  return (n * C + std::sqrt(n * V) * gaussian_quantile(eps) + r) / d;
}

double separate_search_resolution(double C, double V_eps_over_d, int n, int d, double eps) {
  if (d < 2) throw std::invalid_argument("separate search needs d >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  const double level = eps / d;
  if (level == 0.5) throw std::invalid_argument("eps/d = 0.5 is outside the dispersion case split");
  return n * C / d + std::sqrt(n * V_eps_over_d / d) * gaussian_quantile(level);
}

CapacityResult mi_capacity(const ChannelFamily& family, const CapacityOptions& opts) {
  const ChannelMatrix fixed = matrix_at(family, 1.0);
  return capacity(ChannelFamily::constant_matrix(fixed.p), opts);
}

double mi_counterpart(const ChannelFamily& family, int n, int d, double eps, ThirdOrder third,
                      const CapacityOptions& opts) {
  const CapacityResult mi = mi_capacity(family, opts);
  return second_order_resolution(mi.capacity, dispersion_for_eps(mi, eps), n, d, eps, third);
}

double adaptive_resolution_bound(double C, double l, int d, double eps) {
  if (!(l > 0.0) || d < 1) throw std::invalid_argument("l and d must be positive");
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in [0,1)");
  return l * C / (d * (1.0 - eps));
}

double adaptivity_gain_lower(double C, double V_eps, int n, int d, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  return (n * C * eps / (1.0 - eps) - std::sqrt(n * V_eps) * gaussian_quantile(eps)) / d;
}

}  // namespace qsearch
