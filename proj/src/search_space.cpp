#include "qsearch/search_space.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "qsearch/rng.hpp"

namespace qsearch {

std::int64_t quantize(double s, double M) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("coordinate must lie in [0,1]");
  const double w = std::ceil(s * M);
  if (w < 1.0) return 1;
  if (w >= 4.6e18) return std::int64_t{1} << 62;
  const std::int64_t wi = static_cast<std::int64_t>(w);
  const std::int64_t mi = M < 4.6e18 ? static_cast<std::int64_t>(M) : (std::int64_t{1} << 62);
  return wi > mi ? mi : wi;
}

double cell_midpoint(std::int64_t w, double M) {
  return (2.0 * static_cast<double>(w) - 1.0) / (2.0 * M);
}

std::int64_t linear_cell(std::span<const std::int64_t> cells, std::int64_t M) {
  std::int64_t index = 0;
  for (const std::int64_t c : cells) {
    if (c < 1 || c > M) throw std::out_of_range("axis cell outside [1, M]");
    index = index * M + (c - 1);
  }
  return index + 1;
}

std::vector<std::int64_t> axis_cells(std::int64_t linear, std::int64_t M, int d) {
  std::vector<std::int64_t> out(d);
  std::int64_t rest = linear - 1;
  for (int j = d - 1; j >= 0; --j) {
    out[j] = rest % M + 1;
    rest /= M;
  }
  if (rest != 0) throw std::out_of_range("linear cell outside [1, M^d]");
  return out;
}

void SearchConfig::validate() const {
  if (n < 1) throw std::invalid_argument("need at least one query");
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (!(cells_per_axis >= 2.0)) throw std::invalid_argument("need at least two cells per axis");
  if (!(codebook_prob > 0.0 && codebook_prob < 1.0)) {
    throw std::invalid_argument("codebook probability must lie in (0,1)");
  }
}

double SearchConfig::total_cells_real() const {
  const double log_total = d * std::log(cells_per_axis);
  if (log_total > 690.0) return 1e300;
  return std::pow(cells_per_axis, d);
}

std::optional<std::int64_t> SearchConfig::total_cells_exact() const {
  if (cells_per_axis > 9.0e15 || cells_per_axis != std::floor(cells_per_axis)) return std::nullopt;
  const std::int64_t m = static_cast<std::int64_t>(cells_per_axis);
  std::int64_t total = 1;
  const std::int64_t limit = std::int64_t{1} << 62;
  for (int j = 0; j < d; ++j) {
    if (total > limit / m) return std::nullopt;
    total *= m;
  }
  return total;
}

std::int64_t SearchConfig::materializable_cells() const {
  const auto exact = total_cells_exact();
  if (!exact || *exact > memory_cap_cells) {
    throw std::length_error("cell count exceeds the memory cap; use the implicit codebook model");
  }
  return *exact;
}

Codebook generate_codebook(const SearchConfig& config, std::mt19937_64& rng) {
  Codebook book;
  book.n = config.n;
  book.cells = config.materializable_cells();
  book.words_per_cell = (config.n + 63) / 64;
  book.bits.assign(static_cast<std::size_t>(book.cells) * book.words_per_cell, 0);
  book.ones_per_query.assign(config.n, 0);
  const double p = config.codebook_prob;
  for (std::int64_t cell = 0; cell < book.cells; ++cell) {
    std::uint64_t* words = book.bits.data() + static_cast<std::size_t>(cell) * book.words_per_cell;
    for (int t = 0; t < config.n; ++t) {
      if (bernoulli(rng, p)) {
        words[t / 64] |= std::uint64_t{1} << (t % 64);
        ++book.ones_per_query[t];
      }
    }
  }
  return book;
}

int sample_symbol(const ChannelMatrix& matrix, int input, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const int ny = matrix.output_size();
  for (int y = 0; y < ny; ++y) {
    acc += matrix.p(input, y);
    if (u < acc) return y;
  }
  return ny - 1;
}

std::vector<int> oracle_and_noise(const Codebook& codebook, std::span<const std::int64_t> target_cells,
                                  const ChannelFamily& family, std::mt19937_64& rng) {
  std::vector<int> responses(codebook.n);
  for (int t = 0; t < codebook.n; ++t) {
    int z = 0;
    for (const std::int64_t cell : target_cells) {
      if (codebook.bit(t, cell - 1)) {
        z = 1;
        break;
      }
    }
    const ChannelMatrix m = matrix_at(family, codebook.query_size(t));
    responses[t] = sample_symbol(m, z, rng);
  }
  return responses;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  char b[4];
  if (!in.read(b, 4)) throw std::runtime_error("codebook stream truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

}  // namespace

void dump_codebook(const Codebook& codebook, std::ostream& out) {
  if (codebook.cells > 0xFFFFFFFFll) throw std::length_error("codebook too large for the dump header");
  put_u32(out, static_cast<std::uint32_t>(codebook.n));
  put_u32(out, static_cast<std::uint32_t>(codebook.cells));
  const std::int64_t row_bytes = (codebook.cells + 7) / 8;
  std::vector<char> row(static_cast<std::size_t>(row_bytes));
  for (int t = 0; t < codebook.n; ++t) {
    std::fill(row.begin(), row.end(), 0);
    for (std::int64_t cell = 0; cell < codebook.cells; ++cell) {
      if (codebook.bit(t, cell)) row[cell / 8] |= static_cast<char>(1u << (cell % 8));
    }
    out.write(row.data(), row_bytes);
  }
}

Codebook load_codebook(std::istream& in) {
  Codebook book;
  book.n = static_cast<int>(get_u32(in));
  book.cells = get_u32(in);
  if (book.n < 1 || book.cells < 1) throw std::runtime_error("bad codebook header");
  book.words_per_cell = (book.n + 63) / 64;
  book.bits.assign(static_cast<std::size_t>(book.cells) * book.words_per_cell, 0);
  book.ones_per_query.assign(book.n, 0);
  const std::int64_t row_bytes = (book.cells + 7) / 8;
  std::vector<char> row(static_cast<std::size_t>(row_bytes));
  for (int t = 0; t < book.n; ++t) {
    if (!in.read(row.data(), row_bytes)) throw std::runtime_error("codebook stream truncated");
    for (std::int64_t cell = 0; cell < book.cells; ++cell) {
      if ((static_cast<unsigned char>(row[cell / 8]) >> (cell % 8)) & 1u) {
        book.bits[static_cast<std::size_t>(cell) * book.words_per_cell + t / 64] |=
            std::uint64_t{1} << (t % 64);
        ++book.ones_per_query[t];
      }
    }
  }
  return book;
}

}  // namespace qsearch
