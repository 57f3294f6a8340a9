#include "qsearch/info_density.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qsearch {

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

InfoDensityTable density_table(double p, const ChannelMatrix& channel) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("input probability must lie in [0,1]");
  const int ny = channel.output_size();
  InfoDensityTable t;
  t.input_prob = p;
  t.channel = channel;
  t.joint.resize(2, ny);
  t.value.resize(2, ny);
  t.output_marginal.resize(ny);

  const double px[2] = {1.0 - p, p};
  for (int y = 0; y < ny; ++y) {
    t.output_marginal(y) = px[0] * channel.p(0, y) + px[1] * channel.p(1, y);
  }
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < ny; ++y) {
      t.joint(x, y) = px[x] * channel.p(x, y);
      if (channel.p(x, y) > 0.0 && t.output_marginal(y) > 0.0) {
        t.value(x, y) = std::log(channel.p(x, y)) - std::log(t.output_marginal(y));
      } else {
        t.value(x, y) = neg_inf;
      }
    }
  }
  return t;
}

InfoStats stats(const InfoDensityTable& table) {
  const int ny = table.output_size();
  double mean = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < ny; ++y) {
      if (!table.used(x, y)) continue;
      if (!std::isfinite(table.value(x, y))) {
        throw std::domain_error("information density is infinite on a used cell");
      }
      mean += table.joint(x, y) * table.value(x, y);
    }
  }
  double var = 0.0, third = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < ny; ++y) {
      if (!table.used(x, y)) continue;
      const double c = table.value(x, y) - mean;
      var += table.joint(x, y) * c * c;
      third += table.joint(x, y) * std::abs(c) * c * c;
    }
  }
  return {mean, var, third};
}

double max_used_density(const InfoDensityTable& table) {
  double best = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < table.output_size(); ++y) {
      if (table.used(x, y)) best = std::max(best, table.value(x, y));
    }
  }
  return best;
}

}  // namespace qsearch
