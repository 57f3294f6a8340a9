// Joint laws and conditional information densities for simultaneous
// search of several targets, plus the (p*, t*) optimizer.
//
// With t occupied cells and codeword bits X_1..X_t i.i.d. Bern(p), the
// response is drawn from the channel at nominal size p with input
// OR(X_1..X_t).  Conditioning on a sub-tuple X_J only matters through
// |J| and OR(X_J): if the J-part already contains a one the input is one;
// otherwise the remaining t-|J| bits are all zero with weight (1-p)^{t-|J|}.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "qsearch/asymptotics.hpp"
#include "qsearch/channel.hpp"

namespace qsearch {

struct MultiMoments {
  double mean = 0.0;
  double variance = 0.0;
  double third_abs = 0.0;
};

/// Per-(p,t) tables used by both the optimizer and the threshold decoder.
struct MultiJointLaw {
  int t = 0;
  double p = 0.0;
  Eigen::MatrixXd joint;        // 2^t x |Y|; row = bitmask of (x_1..x_t)
  Eigen::MatrixXd log_given_or; // 2 x |Y|; log P(y | OR = 0/1), -inf on zeros
  // log P(y | x_J) for |J| = j and OR(x_J) = a: index [j][a](y); j in [0..t],
  // a in {0,1}.  j = 0 with a = 0 is the output marginal.
  std::vector<std::array<Eigen::VectorXd, 2>> log_cond;

  /// Conditional information density iota_J(x_{[t]}; y) for |J| = j:
  /// log P(y | x_{[t]}) - log P(y | x_J); the J = [t] case passes j = 0
  /// (marginal denominator).
  double density(int j, bool or_all, bool or_j, int y) const {
    return log_given_or(or_all ? 1 : 0, y) - log_cond[j][or_j ? 1 : 0](y);
  }
};

MultiJointLaw multi_joint_law(const ChannelFamily& family, double p, int t);

/// Moments of iota_J over the true joint law, for |J| = j.  j = t selects
/// the marginal denominator (the fully-wrong statistic).
MultiMoments multi_moments(const MultiJointLaw& law, int j);

struct MultiTargetStats {
  int k = 0;
  double p_star = 0.0;
  int t_star = 0;
  // moments_at_star[t-1][j] holds the |J| = j moments of the t-occupied
  // law at p_star, j in [1..t]; index j-1.  j = t is the decoding statistic.
  std::vector<std::vector<MultiMoments>> moments_at_star;
  // min over proper J of C_J/|J| - C_[t*]/t* at (p_star, t_star); positive
  // when the sub-tuple statistics decay strictly faster.
  double proper_subset_margin = 0.0;

  const MultiMoments& star_moments() const { return moments_at_star[t_star - 1][t_star - 1]; }
};

struct MultiTargetOptions {
  double grid_step = 1e-3;
  double refine_tol = 1e-9;
  double tie_tol = 1e-9;  // ambiguity threshold for the argmin over t
};

/// Maximizes over p the worst-case per-target rate min_t C_[t](p,t)/t and
/// reports all moments at the optimum.  Throws if the argmin over t is
/// ambiguous at p*.
MultiTargetStats multi_target_optimize(const ChannelFamily& family, int k,
                                       const MultiTargetOptions& opts = {});

/// (n C_[t*] + sqrt(n V_[t*]) Phi^{-1}(eps) + r(n)) / (d t*).
double multi_target_resolution(const MultiTargetStats& stats, int n, int d, double eps,
                               ThirdOrder third);

}  // namespace qsearch
