// Capacity and dispersion of measurement-dependent channels, and the
// second-order resolution approximations built from them.
//
// capacity() scans q -> E[iota_{q,q}] on a grid and refines every
// near-global local maximum by golden section.  For a ConstantMatrix
// family the law ignores q, so the same scan optimizes the input
// probability instead; that is exactly what the measurement-independent
// baselines need.
#pragma once

#include <vector>

#include "qsearch/channel.hpp"
#include "qsearch/info_density.hpp"

namespace qsearch {

struct CapacityResult {
  double capacity = 0.0;            // nats
  std::vector<double> maximizers;   // ascending q (or input prob for Constant)
  std::vector<double> variances;    // per maximizer
  std::vector<double> third_moments;
  double v_low = 0.0;               // min variance over the maximizers
  double v_high = 0.0;              // max variance over the maximizers
};

struct CapacityOptions {
  double grid_step = 1e-4;
  double refine_tol = 1e-10;      // golden-section interval width
  double value_window = 1e-9;     // keep refined maxima within this of the best
  double dedupe_spacing = 1e-6;   // maximizers closer than this collapse
};

CapacityResult capacity(const ChannelFamily& family, const CapacityOptions& opts = {});

/// Dispersion selection: minimum variance over the capacity-achieving set
/// for eps < 0.5, maximum for eps >= 0.5.
double dispersion_for_eps(const CapacityResult& result, double eps);

enum class ThirdOrder { None, MinusHalfLog, PlusLog };

/// Second-order approximation to -log(resolution):
///   (n C + sqrt(n V) Phi^{-1}(eps) + r(n)) / d,
/// with r per the ThirdOrder choice.
double second_order_resolution(double C, double V, int n, int d, double eps, ThirdOrder third);

/// Per-dimension value achieved by d independent searches of n/d queries
/// at level eps/d each: n C / d + sqrt(n V / d) Phi^{-1}(eps / d).
/// V must be the dispersion at level eps/d.  Requires d >= 2 and
/// eps/d != 0.5.
double separate_search_resolution(double C, double V_eps_over_d, int n, int d, double eps);

/// Capacity/dispersion of the measurement-independent counterpart: the
/// family's matrix frozen at size 1, optimized over the input probability.
CapacityResult mi_capacity(const ChannelFamily& family, const CapacityOptions& opts = {});

/// Second-order -log(resolution) for the measurement-independent
/// counterpart at (n, d, eps).
double mi_counterpart(const ChannelFamily& family, int n, int d, double eps,
                      ThirdOrder third = ThirdOrder::None, const CapacityOptions& opts = {});

/// Adaptive upper bound l C / (d (1 - eps)); eps in [0,1).
double adaptive_resolution_bound(double C, double l, int d, double eps);

/// Lower bound on the adaptivity gain:
///   (n C eps / (1-eps) - sqrt(n V_eps) Phi^{-1}(eps)) / d.
double adaptivity_gain_lower(double C, double V_eps, int n, int d, double eps);

}  // namespace qsearch
