// Measurement-dependent binary-input channels.
//
// A family maps a query size q in [0,1] to a 2 x |Y| row-stochastic
// transition matrix.  Three parametric families are provided (symmetric,
// erasure and Z noise scaling linearly with q) plus a constant matrix
// wrapper whose law ignores q.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace qsearch {

enum class ChannelKind { Bsc, Bec, ZChannel, Constant };

struct ChannelFamily {
  ChannelKind kind = ChannelKind::Bsc;
  double parameter = 0.0;    // noise slope in [0,1]; unused for Constant
  Eigen::MatrixXd constant;  // 2 x |Y| rows, used only when kind == Constant

  static ChannelFamily bsc(double nu);
  static ChannelFamily bec(double tau);
  static ChannelFamily z(double zeta);
  static ChannelFamily constant_matrix(Eigen::MatrixXd rows);

  int output_size() const;
  std::string describe() const;
};

struct ChannelMatrix {
  Eigen::MatrixXd p;        // 2 x |Y|, P(y|x); BEC output order is {0, 1, e}
  double query_size = 0.0;  // q that produced this matrix

  int output_size() const { return static_cast<int>(p.cols()); }
};

/// Transition matrix of the family at query size q.  Rejects q outside
/// [0,1] and NaN.  ConstantMatrix families ignore q.
ChannelMatrix matrix_at(const ChannelFamily& family, double q);

/// Local Lipschitz certificate for the log transition probabilities:
/// returns c such that max over entries with positive probability of
/// |log P^q(y|x) - log P^{q +- xi}(y|x)| <= c * xi for all xi <= xi0.
/// Requires 0 < q < 1, 0 < xi0 < min(q, 1-q) and that no entry that is
/// positive at q reaches zero inside the window.
double continuity_constant(const ChannelFamily& family, double q, double xi0);

/// Reads a constant matrix: first line "2 |Y|", then two rows of |Y|
/// probabilities.  Rows must be nonnegative and sum to 1 within 1e-12.
ChannelFamily load_constant_family(std::istream& in);
ChannelFamily load_constant_family_file(const std::string& path);

/// Parses "bsc:0.4", "bec:1", "z:0.3" or "const:<path>".
ChannelFamily parse_family(const std::string& text);

}  // namespace qsearch
