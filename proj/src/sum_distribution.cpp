#include "qsearch/sum_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "qsearch/normal.hpp"

namespace qsearch {

namespace {

struct Atom {
  double value;
  double prob;
};

std::vector<Atom> used_atoms(const InfoDensityTable& table, double merge_tol) {
  std::vector<Atom> atoms;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < table.output_size(); ++y) {
      if (!table.used(x, y)) continue;
      if (!std::isfinite(table.value(x, y))) {
        throw std::domain_error("sum distribution needs finite densities on used cells");
      }
      atoms.push_back({table.value(x, y), table.joint(x, y)});
    }
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  // Collapse coincident per-symbol values (e.g. both erasure cells).
  std::vector<Atom> merged;
  for (const Atom& a : atoms) {
    if (!merged.empty() && a.value - merged.back().value <= merge_tol) {
      Atom& m = merged.back();
      m.value = (m.value * m.prob + a.value * a.prob) / (m.prob + a.prob);
      m.prob += a.prob;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

// Sorted-merge convolution of a sorted support with a small atom list.
void convolve_pass(std::vector<double>& support, std::vector<double>& prob,
                   const std::vector<Atom>& atoms, double merge_tol, std::int64_t cap) {
  const std::size_t m = support.size();
  const std::size_t k = atoms.size();
  std::vector<double> out_v, out_p;
  out_v.reserve(m + m / 2);
  out_p.reserve(m + m / 2);
  std::vector<std::size_t> cursor(k, 0);
  double cluster_v = 0.0, cluster_p = 0.0;
  bool have_cluster = false;
  for (;;) {
    int best = -1;
    double best_v = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (cursor[c] == m) continue;
      const double v = support[cursor[c]] + atoms[c].value;
      if (best < 0 || v < best_v) {
        best = static_cast<int>(c);
        best_v = v;
      }
    }
    if (best < 0) break;
    const double p = prob[cursor[best]] * atoms[best].prob;
    ++cursor[best];
    if (have_cluster && best_v - cluster_v / cluster_p <= merge_tol) {
      cluster_v += best_v * p;
      cluster_p += p;
    } else {
      if (have_cluster) {
        out_v.push_back(cluster_v / cluster_p);
        out_p.push_back(cluster_p);
        if (static_cast<std::int64_t>(out_v.size()) > cap) {
          throw std::runtime_error("sum distribution support exceeded the configured cap");
        }
      }
      cluster_v = best_v * p;
      cluster_p = p;
      have_cluster = true;
    }
  }
  if (have_cluster) {
    out_v.push_back(cluster_v / cluster_p);
    out_p.push_back(cluster_p);
  }
  support.swap(out_v);
  prob.swap(out_p);
}

// Dense dynamic program over (i,j) lattice counts when every atom value
// decomposes as base + i*stepA + j*stepB with i,j in {0,1}.
struct LatticePlan {
  bool ok = false;
  double base = 0.0, step_a = 0.0, step_b = 0.0;
  // per atom: lattice coordinates and probability
  std::vector<int> ia, ja;
  std::vector<double> pa;
};

LatticePlan plan_lattice(const std::vector<Atom>& atoms, double tol) {
  LatticePlan plan;
  const std::size_t k = atoms.size();
  if (k > 4) return plan;
  plan.base = atoms[0].value;
  auto coord = [&](std::size_t idx, int i, int j) {
    plan.ia.push_back(i);
    plan.ja.push_back(j);
    plan.pa.push_back(atoms[idx].prob);
  };
  if (k == 1) {
    plan.ok = true;
    coord(0, 0, 0);
    return plan;
  }
  if (k == 2) {
    plan.ok = true;
    plan.step_a = atoms[1].value - atoms[0].value;
    coord(0, 0, 0);
    coord(1, 1, 0);
    return plan;
  }
  if (k == 3) {
    plan.ok = true;
    plan.step_a = atoms[1].value - atoms[0].value;
    plan.step_b = atoms[2].value - atoms[0].value;
    coord(0, 0, 0);
    coord(1, 1, 0);
    coord(2, 0, 1);
    return plan;
  }
  // Four sorted values form a product lattice iff v0 + v3 == v1 + v2.
  if (std::abs((atoms[0].value + atoms[3].value) - (atoms[1].value + atoms[2].value)) <= tol) {
    plan.ok = true;
    plan.step_a = atoms[1].value - atoms[0].value;
    plan.step_b = atoms[2].value - atoms[0].value;
    coord(0, 0, 0);
    coord(1, 1, 0);
    coord(2, 0, 1);
    coord(3, 1, 1);
  }
  return plan;
}

SumDistribution run_lattice_dp(const LatticePlan& plan, int n, double merge_tol) {
  const int w = n + 1;
  std::vector<double> cur(static_cast<std::size_t>(w) * w, 0.0);
  std::vector<double> next(cur.size(), 0.0);
  cur[0] = 1.0;
  const std::size_t k = plan.pa.size();
  for (int t = 1; t <= n; ++t) {
    std::fill(next.begin(), next.begin() + static_cast<std::size_t>(t + 1) * w, 0.0);
    for (int i = 0; i <= t - 1; ++i) {
      const double* row = cur.data() + static_cast<std::size_t>(i) * w;
      for (int j = 0; j <= t - 1; ++j) {
        const double p = row[j];
        if (p == 0.0) continue;
        for (std::size_t c = 0; c < k; ++c) {
          next[static_cast<std::size_t>(i + plan.ia[c]) * w + (j + plan.ja[c])] += p * plan.pa[c];
        }
      }
    }
    cur.swap(next);
  }
  std::vector<std::pair<double, double>> pts;
  pts.reserve(static_cast<std::size_t>(w) * w / 2);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double p = cur[static_cast<std::size_t>(i) * w + j];
      if (p == 0.0) continue;
      pts.emplace_back(n * plan.base + i * plan.step_a + j * plan.step_b, p);
    }
  }
  std::sort(pts.begin(), pts.end());
  SumDistribution dist;
  dist.n = n;
  std::vector<double> v, p;
  v.reserve(pts.size());
  p.reserve(pts.size());
  for (const auto& [val, pr] : pts) {
    if (!v.empty() && val - v.back() <= merge_tol) {
      const double tot = p.back() + pr;
      v.back() = (v.back() * p.back() + val * pr) / tot;
      p.back() = tot;
    } else {
      v.push_back(val);
      p.push_back(pr);
    }
  }
  dist.support = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  dist.prob = Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  dist.finalize();
  return dist;
}

}  // namespace

void SumDistribution::finalize() {
  cumulative.resize(prob.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    acc += prob(i);
    cumulative(i) = acc;
  }
}

SumDistribution sum_distribution(const InfoDensityTable& table, int n, const SumOptions& opts) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  const std::vector<Atom> atoms = used_atoms(table, opts.merge_tol);
  const LatticePlan plan = plan_lattice(atoms, opts.merge_tol);
  if (plan.ok) return run_lattice_dp(plan, n, opts.merge_tol);

  std::vector<double> support{0.0}, prob{1.0};
  for (int t = 0; t < n; ++t) {
    convolve_pass(support, prob, atoms, opts.merge_tol, opts.support_cap);
  }
  SumDistribution dist;
  dist.n = n;
  dist.support = Eigen::Map<Eigen::VectorXd>(support.data(), static_cast<Eigen::Index>(support.size()));
  dist.prob = Eigen::Map<Eigen::VectorXd>(prob.data(), static_cast<Eigen::Index>(prob.size()));
  dist.finalize();
  return dist;
}

SumDistribution convolve(const SumDistribution& a, const SumDistribution& b, const SumOptions& opts) {
  std::vector<Atom> atoms(b.support.size());
  for (Eigen::Index i = 0; i < b.support.size(); ++i) atoms[i] = {b.support(i), b.prob(i)};
  std::vector<double> support(a.support.data(), a.support.data() + a.support.size());
  std::vector<double> prob(a.prob.data(), a.prob.data() + a.prob.size());
  convolve_pass(support, prob, atoms, opts.merge_tol, opts.support_cap);
  SumDistribution out;
  out.n = a.n + b.n;
  out.support = Eigen::Map<Eigen::VectorXd>(support.data(), static_cast<Eigen::Index>(support.size()));
  out.prob = Eigen::Map<Eigen::VectorXd>(prob.data(), static_cast<Eigen::Index>(prob.size()));
  out.finalize();
  return out;
}

double cdf(const SumDistribution& dist, double t) {
  const double* begin = dist.support.data();
  const double* end = begin + dist.support.size();
  const auto it = std::upper_bound(begin, end, t);
  if (it == begin) return 0.0;
  return dist.cumulative(static_cast<Eigen::Index>(it - begin) - 1);
}

double quantile(const SumDistribution& dist, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
  for (Eigen::Index i = 0; i < dist.support.size(); ++i) {
    if (dist.cumulative(i) > level) return dist.support(i);
  }
  return dist.support(dist.support.size() - 1);
}

void write_csv(const SumDistribution& dist, std::ostream& out) {
  out << "value,prob\n";
  for (Eigen::Index i = 0; i < dist.support.size(); ++i) {
    out << dist.support(i) << ',' << dist.prob(i) << '\n';
  }
}

double expected_hit_time(const InfoDensityTable& table, double threshold, int max_steps) {
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
  const std::vector<Atom> atoms = used_atoms(table, 1e-12);
  const LatticePlan plan = plan_lattice(atoms, 1e-12);
  if (!plan.ok) throw std::domain_error("hit-time DP needs a lattice-decomposable density table");

  const int w = max_steps + 1;
  std::vector<double> cur(static_cast<std::size_t>(w) * w, 0.0);
  std::vector<double> next(cur.size(), 0.0);
  cur[0] = 1.0;
  double survival = 1.0;
  double mean = 0.0;
  const std::size_t k = plan.pa.size();
  int t = 0;
  for (t = 1; t <= max_steps && survival > 1e-13; ++t) {
    std::fill(next.begin(), next.begin() + static_cast<std::size_t>(t + 1) * w, 0.0);
    for (int i = 0; i <= t - 1; ++i) {
      const double* row = cur.data() + static_cast<std::size_t>(i) * w;
      for (int j = 0; j <= t - 1; ++j) {
        const double mass = row[j];
        if (mass == 0.0) continue;
        for (std::size_t c = 0; c < k; ++c) {
          next[static_cast<std::size_t>(i + plan.ia[c]) * w + (j + plan.ja[c])] += mass * plan.pa[c];
        }
      }
    }
    double absorbed = 0.0;
    double live = 0.0;
    for (int i = 0; i <= t; ++i) {
      double* row = next.data() + static_cast<std::size_t>(i) * w;
      for (int j = 0; j <= t; ++j) {
        if (row[j] == 0.0) continue;
        const double value = t * plan.base + i * plan.step_a + j * plan.step_b;
        if (value >= threshold) {
          absorbed += row[j];
          row[j] = 0.0;
        } else {
          live += row[j];
        }
      }
    }
    mean += static_cast<double>(t) * absorbed;
    survival = live;
    cur.swap(next);
  }
  mean += survival * static_cast<double>(std::min(t, max_steps));
  return mean;
}

double threshold_for_mean_hit_time(const InfoDensityTable& table, double target_steps,
                                   int max_steps) {
  if (!(target_steps >= 1.0)) throw std::invalid_argument("target must be at least one step");
  double lo = 1e-9;
  double hi = std::max(1.0, 2.0 * target_steps * stats(table).mean);
  while (expected_hit_time(table, hi, max_steps) < target_steps) hi *= 2.0;
  for (int iter = 0; iter < 60 && hi - lo > 1e-10 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (expected_hit_time(table, mid, max_steps) < target_steps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BerryEsseenGap berry_esseen_gap(const InfoDensityTable& table, int n, const SumOptions& opts) {
  const InfoStats s = stats(table);
  if (!(s.variance > 0.0)) throw std::domain_error("Berry-Esseen gap needs positive variance");
  const SumDistribution dist = sum_distribution(table, n, opts);
  const double scale = std::sqrt(n * s.variance);
  double max_gap = 0.0;
  for (Eigen::Index i = 0; i < dist.support.size(); ++i) {
    const double g = gaussian_cdf((dist.support(i) - n * s.mean) / scale);
    max_gap = std::max(max_gap, std::abs(dist.cumulative(i) - g));
  }
  const double bound = 6.0 * s.third_abs / (std::sqrt(static_cast<double>(n)) * std::pow(s.variance, 1.5));
  return {max_gap, bound};
}

}  // namespace qsearch
