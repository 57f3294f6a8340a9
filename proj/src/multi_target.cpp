#include "qsearch/multi_target.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qsearch/normal.hpp"

namespace qsearch {

namespace {

double safe_log(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

}  // namespace

MultiJointLaw multi_joint_law(const ChannelFamily& family, double p, int t) {
  if (t < 1 || t > 16) throw std::invalid_argument("t must lie in [1,16]");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  const ChannelMatrix m = matrix_at(family, p);
  const int ny = m.output_size();

  MultiJointLaw law;
  law.t = t;
  law.p = p;
  law.log_given_or.resize(2, ny);
  for (int a = 0; a < 2; ++a) {
    for (int y = 0; y < ny; ++y) law.log_given_or(a, y) = safe_log(m.p(a, y));
  }

  const int masks = 1 << t;
  law.joint.resize(masks, ny);
  for (int mask = 0; mask < masks; ++mask) {
    const int ones = std::popcount(static_cast<unsigned>(mask));
    const double w = std::pow(p, ones) * std::pow(1.0 - p, t - ones);
    const int a = mask != 0 ? 1 : 0;
    for (int y = 0; y < ny; ++y) law.joint(mask, y) = w * m.p(a, y);
  }

  // P(y | x_J) for |J| = j: if OR(x_J) = 1 the input is one regardless of
  // the rest; otherwise the other t-j bits leave input zero with weight
  // (1-p)^{t-j}.
  law.log_cond.resize(t + 1);
  for (int j = 0; j <= t; ++j) {
    const double all_zero = std::pow(1.0 - p, t - j);
    law.log_cond[j][0].resize(ny);
    law.log_cond[j][1].resize(ny);
    for (int y = 0; y < ny; ++y) {
      law.log_cond[j][0](y) = safe_log(all_zero * m.p(0, y) + (1.0 - all_zero) * m.p(1, y));
      law.log_cond[j][1](y) = safe_log(m.p(1, y));
    }
  }
  return law;
}

MultiMoments multi_moments(const MultiJointLaw& law, int j) {
  const int t = law.t;
  if (j < 0 || j > t) throw std::invalid_argument("subset size out of range");
  const int denom_j = (j == t) ? 0 : j;  // J = [t] compares against the marginal
  const int ny = static_cast<int>(law.joint.cols());
  const int masks = 1 << t;
  const int jmask = (j == t) ? 0 : ((1 << j) - 1);  // J = first j coordinates

  double mean = 0.0;
  for (int mask = 0; mask < masks; ++mask) {
    const bool or_all = mask != 0;
    const bool or_j = (mask & jmask) != 0;
    for (int y = 0; y < ny; ++y) {
      const double w = law.joint(mask, y);
      if (w <= 0.0) continue;
      const double v = law.density(denom_j, or_all, or_j, y);
      if (!std::isfinite(v)) throw std::domain_error("conditional density infinite on a used cell");
      mean += w * v;
    }
  }
  double var = 0.0, third = 0.0;
  for (int mask = 0; mask < masks; ++mask) {
    const bool or_all = mask != 0;
    const bool or_j = (mask & jmask) != 0;
    for (int y = 0; y < ny; ++y) {
      const double w = law.joint(mask, y);
      if (w <= 0.0) continue;
      const double c = law.density(denom_j, or_all, or_j, y) - mean;
      var += w * c * c;
      third += w * std::abs(c) * c * c;
    }
  }
  return {mean, var, third};
}

namespace {

double worst_rate(const ChannelFamily& family, int k, double p, int* argmin = nullptr,
                  double* second_best = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  double runner = std::numeric_limits<double>::infinity();
  int best_t = 1;
  for (int t = 1; t <= k; ++t) {
    const double rate = multi_moments(multi_joint_law(family, p, t), t).mean / t;
    if (rate < best) {
      runner = best;
      best = rate;
      best_t = t;
    } else {
      runner = std::min(runner, rate);
    }
  }
  if (argmin) *argmin = best_t;
  if (second_best) *second_best = runner;
  return best;
}

}  // namespace

MultiTargetStats multi_target_optimize(const ChannelFamily& family, int k,
                                       const MultiTargetOptions& opts) {
  if (k < 1 || k > 8) throw std::invalid_argument("k must lie in [1,8]");
  const int cells = static_cast<int>(std::llround(1.0 / opts.grid_step));
  double best_p = 0.0, best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= cells; ++i) {
    const double p = static_cast<double>(i) / cells;
    const double v = worst_rate(family, k, p);
    if (v > best_v) {
      best_v = v;
      best_p = p;
    }
  }
  // Golden-section refinement around the best grid point.
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(0.0, best_p - opts.grid_step);
  double b = std::min(1.0, best_p + opts.grid_step);
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = worst_rate(family, k, c), fd = worst_rate(family, k, d);
  while (b - a > opts.refine_tol) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - inv_phi * (b - a);
      fc = worst_rate(family, k, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + inv_phi * (b - a);
      fd = worst_rate(family, k, d);
    }
  }
  const double p_star = 0.5 * (a + b);

  MultiTargetStats result;
  result.k = k;
  result.p_star = p_star;
  double runner = 0.0;
  const double star_rate = worst_rate(family, k, p_star, &result.t_star, &runner);
  if (k > 1 && runner - star_rate <= opts.tie_tol) {
    throw std::runtime_error("optimal occupied-cell count is ambiguous at p*");
  }

  result.moments_at_star.resize(k);
  for (int t = 1; t <= k; ++t) {
    const MultiJointLaw law = multi_joint_law(family, p_star, t);
    result.moments_at_star[t - 1].resize(t);
    for (int j = 1; j <= t; ++j) result.moments_at_star[t - 1][j - 1] = multi_moments(law, j);
  }

  // Margin of the proper-subset rate condition at (p*, t*).
  double margin = std::numeric_limits<double>::infinity();
  const int ts = result.t_star;
  const double full_rate = result.star_moments().mean / ts;
  for (int j = 1; j < ts; ++j) {
    margin = std::min(margin, result.moments_at_star[ts - 1][j - 1].mean / j - full_rate);
  }
  result.proper_subset_margin = (ts > 1) ? margin : 0.0;
  return result;
}

double multi_target_resolution(const MultiTargetStats& stats, int n, int d, double eps,
                               ThirdOrder third) {
  if (n < 1 || d < 1) throw std::invalid_argument("n and d must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  const MultiMoments& m = stats.star_moments();
  double r = 0.0;
  if (third == ThirdOrder::MinusHalfLog) r = -0.5 * std::log(static_cast<double>(n));
  if (third == ThirdOrder::PlusLog) r = std::log(static_cast<double>(n));
  return (n * m.mean + std::sqrt(n * m.variance) * gaussian_quantile(eps) + r) /
         (static_cast<double>(d) * stats.t_star);
}

}  // namespace qsearch
