// Partition of the unit cube, cell indexing, random codebooks and the
// noisy oracle shared by the simulation engines.
//
// Cells along one axis are numbered 1..M; a d-tuple maps to a linear
// index in 1..M^d with the first axis most significant.  M is carried as
// a double because implicit-codebook runs may use cell counts far past
// what can be materialized (or even held in an integer); anything that
// touches codewords requires an exact integral cell count.  Codeword bits
// are stored cell-major (one packed bit row of length n per cell) so the
// decoders can score cells with word-wide operations.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qsearch/channel.hpp"

namespace qsearch {

/// ceil(s*M) clamped into [1, M]; exact for M up to 2^53.
std::int64_t quantize(double s, double M);

/// Midpoint (2w - 1) / (2M) of cell w.
double cell_midpoint(std::int64_t w, double M);

/// Linear index 1 + sum_j (i_j - 1) M^{d-j} of a d-tuple of axis cells.
std::int64_t linear_cell(std::span<const std::int64_t> axis_cells, std::int64_t M);

/// Inverse of linear_cell.
std::vector<std::int64_t> axis_cells(std::int64_t linear, std::int64_t M, int d);

struct SearchConfig {
  int n = 0;                    // number of queries
  int d = 1;                    // target dimension
  double cells_per_axis = 2;    // M
  double codebook_prob = 0.5;   // Bernoulli parameter p
  ChannelFamily family;
  std::uint64_t seed = 0;
  std::int64_t memory_cap_cells = std::int64_t{1} << 24;

  void validate() const;
  double total_cells_real() const;                   // M^d, saturating at 1e300
  std::optional<std::int64_t> total_cells_exact() const;  // M^d when integral and < 2^62
  /// Exact cell count within the memory cap; throws otherwise.
  std::int64_t materializable_cells() const;
};

struct Codebook {
  int n = 0;
  std::int64_t cells = 0;
  int words_per_cell = 0;
  std::vector<std::uint64_t> bits;           // cell-major, n bits per cell
  std::vector<std::int64_t> ones_per_query;  // count of 1s in query row t

  bool bit(int t, std::int64_t cell) const {
    return (bits[static_cast<std::size_t>(cell) * words_per_cell + t / 64] >> (t % 64)) & 1u;
  }
  const std::uint64_t* cell_words(std::int64_t cell) const {
    return bits.data() + static_cast<std::size_t>(cell) * words_per_cell;
  }
  double query_size(int t) const {
    return static_cast<double>(ones_per_query[t]) / static_cast<double>(cells);
  }
};

/// Fresh i.i.d. Bernoulli(p) codebook; deterministic given the generator
/// state.  Requires a materializable cell count.
Codebook generate_codebook(const SearchConfig& config, std::mt19937_64& rng);

/// Noisy responses to the n queries when the oracle bit at step t is the
/// OR of the target cells' codeword bits.  Each response is drawn from the
/// family's matrix at the realized query size of that step.  Returns
/// output-symbol indices.
std::vector<int> oracle_and_noise(const Codebook& codebook, std::span<const std::int64_t> target_cells,
                                  const ChannelFamily& family, std::mt19937_64& rng);

/// Draws one output symbol from a transition-matrix row.
int sample_symbol(const ChannelMatrix& matrix, int input, std::mt19937_64& rng);

/// Query-row-major packed dump with an 8-byte header (n, cells) as two
/// 32-bit little-endian words; each row padded to whole bytes.
void dump_codebook(const Codebook& codebook, std::ostream& out);
Codebook load_codebook(std::istream& in);

}  // namespace qsearch
