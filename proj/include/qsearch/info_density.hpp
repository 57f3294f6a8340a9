// Per-symbol information densities and their exact moments.
//
// For an input X ~ Bern(p) and a channel matrix P (taken at some query
// size q), the density of a cell (x,y) is
//     iota(x;y) = log P(y|x) - log Pmarg(y),   Pmarg(y) = sum_x P(x) P(y|x),
// in nats.  Cells with zero joint probability are unused and may carry
// -infinity.
#pragma once

#include <Eigen/Dense>

#include "qsearch/channel.hpp"

namespace qsearch {

struct InfoDensityTable {
  double input_prob = 0.0;          // p
  ChannelMatrix channel;            // P(y|x) at size q
  Eigen::MatrixXd value;            // 2 x |Y| densities in nats
  Eigen::MatrixXd joint;            // 2 x |Y|, P(x) * P(y|x)
  Eigen::VectorXd output_marginal;  // |Y|

  int output_size() const { return static_cast<int>(value.cols()); }
  bool used(int x, int y) const { return joint(x, y) > 0.0; }
};

struct InfoStats {
  double mean = 0.0;       // nats
  double variance = 0.0;   // nats^2
  double third_abs = 0.0;  // E|iota - mean|^3, nats^3
};

InfoDensityTable density_table(double p, const ChannelMatrix& channel);

/// Exact enumeration of mean/variance/third absolute central moment over
/// the used cells.  Throws if a used cell carries an infinite density.
InfoStats stats(const InfoDensityTable& table);

/// Largest density over used cells (the one-step score ceiling).
double max_used_density(const InfoDensityTable& table);

/// Binary entropy in nats, with h(0) = h(1) = 0.
double binary_entropy(double p);

}  // namespace qsearch
