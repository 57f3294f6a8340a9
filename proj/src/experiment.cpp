#include "qsearch/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qsearch/adaptive.hpp"
#include "qsearch/asymptotics.hpp"
#include "qsearch/bounds.hpp"
#include "qsearch/channel.hpp"
#include "qsearch/info_density.hpp"
#include "qsearch/multi_target.hpp"
#include "qsearch/nonadaptive.hpp"
#include "qsearch/sum_distribution.hpp"

namespace qsearch {

namespace {

using nlohmann::json;

json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["command"] = s.command;
  j["family"] = s.family;
  j["params"] = s.params;
  j["n"] = s.n_values;
  j["d"] = s.d;
  j["k"] = s.k;
  j["eps"] = s.eps;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["out"] = s.out;
  j["units"] = s.units;
  j["threads"] = s.threads;
  j["third_order"] = s.third_order;
  j["grid_step"] = s.grid_step;
  j["q_step"] = s.q_step;
  j["gamma"] = s.gamma;
  j["cells_per_axis"] = s.cells_per_axis;
  j["p"] = s.p;
  j["mc_samples"] = s.mc_samples;
  j["beta"] = s.beta;
  j["kappa"] = s.kappa;
  j["phase_low"] = s.phase_low;
  j["phase_high"] = s.phase_high;
  j["separate"] = s.separate;
  j["model"] = s.model;
  j["fresh_codebook"] = s.fresh_codebook;
  return j;
}

ThirdOrder third_order_for(const ExperimentSpec& spec) {
  std::string choice = spec.third_order;
  if (choice == "auto") {
    choice = (spec.command == "sim-multitarget") ? "minus-half-log" : "none";
  }
  if (choice == "none") return ThirdOrder::None;
  if (choice == "minus-half-log") return ThirdOrder::MinusHalfLog;
  if (choice == "plus-log") return ThirdOrder::PlusLog;
  throw std::invalid_argument("third_order must be auto, none, minus-half-log or plus-log");
}

CodebookModel model_for(const ExperimentSpec& spec) {
  if (spec.model == "auto") return CodebookModel::Auto;
  if (spec.model == "explicit") return CodebookModel::Explicit;
  if (spec.model == "implicit") return CodebookModel::Implicit;
  throw std::invalid_argument("model must be auto, explicit or implicit");
}

struct UnitScale {
  double rate = 1.0;      // nats -> output rate unit
  double variance = 1.0;  // nats^2 -> output unit
  std::string suffix = "nats";
};

UnitScale unit_scale(const ExperimentSpec& spec) {
  if (spec.units == "nats") return {};
  if (spec.units == "bits") {
    const double r = 1.0 / std::log(2.0);
    return {r, r * r, "bits"};
  }
  throw std::invalid_argument("units must be nats or bits");
}

std::string default_out(const ExperimentSpec& spec) {
  return spec.command + (spec.command == "bounds" ? ".json" : ".csv");
}

void write_resolved_spec(const ExperimentSpec& spec, const std::string& out_path) {
  std::ofstream f(out_path + ".spec.json");
  if (!f) throw std::runtime_error("cannot write spec file next to " + out_path);
  f << spec.resolved_json();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  f.precision(12);
  return f;
}

std::vector<double> sweep_params(const ExperimentSpec& spec, const ChannelFamily& base) {
  if (!spec.params.empty()) return spec.params;
  return {base.parameter};
}

ChannelFamily with_parameter(const ChannelFamily& base, double parameter) {
  switch (base.kind) {
    case ChannelKind::Bsc: return ChannelFamily::bsc(parameter);
    case ChannelKind::Bec: return ChannelFamily::bec(parameter);
    case ChannelKind::ZChannel: return ChannelFamily::z(parameter);
    case ChannelKind::Constant: return base;
  }
  throw std::logic_error("unreachable");
}

double pick_p(const ExperimentSpec& spec, const CapacityResult& cap) {
  return spec.p >= 0.0 ? spec.p : cap.maximizers.front();
}

std::int64_t recipe_cells(double log_m) {
  return std::max<std::int64_t>(2, static_cast<std::int64_t>(std::llround(std::exp(log_m))));
}

// ---------------------------------------------------------------------------

int cmd_capacity_sweep(const ExperimentSpec& spec, const ChannelFamily& base, std::ostream&) {
  const UnitScale u = unit_scale(spec);
  std::ofstream out = open_output(spec.out);
  out << "param,q,capacity_" << u.suffix << ",variance_" << u.suffix << "2\n";
  for (const double param : sweep_params(spec, base)) {
    const ChannelFamily family = with_parameter(base, param);
    for (double q = 0.0; q <= 1.0 + 1e-12; q += spec.q_step) {
      const double qq = std::min(q, 1.0);
      const InfoStats s = stats(density_table(qq, matrix_at(family, qq)));
      out << param << ',' << qq << ',' << s.mean * u.rate << ',' << s.variance * u.variance << '\n';
    }
  }
  return 0;
}

int cmd_rate_compare(const ExperimentSpec& spec, const ChannelFamily& base, std::ostream&) {
  const UnitScale u = unit_scale(spec);
  const ThirdOrder third = third_order_for(spec);
  std::ofstream out = open_output(spec.out);
  out << "param,n,md_rate_" << u.suffix << "_per_query,mi_rate_" << u.suffix << "_per_query\n";
  for (const double param : sweep_params(spec, base)) {
    const ChannelFamily family = with_parameter(base, param);
    const CapacityResult cap = capacity(family, {spec.grid_step});
    const double v = dispersion_for_eps(cap, spec.eps);
    const CapacityResult mi = mi_capacity(family, {spec.grid_step});
    const double v_mi = dispersion_for_eps(mi, spec.eps);
    for (const int n : spec.n_values) {
      const double md = second_order_resolution(cap.capacity, v, n, spec.d, spec.eps, third);
      const double mi_rate =
          second_order_resolution(mi.capacity, v_mi, n, spec.d, spec.eps, third);
      out << param << ',' << n << ',' << md / n * u.rate << ',' << mi_rate / n * u.rate << '\n';
    }
  }
  return 0;
}

int cmd_gain(const ExperimentSpec& spec, const ChannelFamily& base, std::ostream&) {
  const UnitScale u = unit_scale(spec);
  std::ofstream out = open_output(spec.out);
  out << "param,n,gain_lower_" << u.suffix << "\n";
  for (const double param : sweep_params(spec, base)) {
    const ChannelFamily family = with_parameter(base, param);
    const CapacityResult cap = capacity(family, {spec.grid_step});
    const double v = dispersion_for_eps(cap, spec.eps);
    for (const int n : spec.n_values) {
      out << param << ',' << n << ','
          << adaptivity_gain_lower(cap.capacity, v, n, spec.d, spec.eps) * u.rate << '\n';
    }
  }
  return 0;
}

int cmd_phase_transition(const ExperimentSpec& spec, const ChannelFamily& family, std::ostream& log) {
  const CapacityResult cap = capacity(family, {spec.grid_step});
  const double p = pick_p(spec, cap);
  std::ofstream out = open_output(spec.out);
  out << "n,log_m_below,rate_below,halfwidth_below,log_m_above,rate_above,halfwidth_above\n";
  SingleTargetOptions opts;
  opts.threads = spec.threads;
  opts.model = model_for(spec);
  for (const int n : spec.n_values) {
    double rate[2], hw[2], logm[2];
    const double factors[2] = {spec.phase_low, spec.phase_high};
    for (int side = 0; side < 2; ++side) {
      logm[side] = factors[side] * n * cap.capacity / spec.d;
      SearchConfig config;
      config.n = n;
      config.d = spec.d;
      config.cells_per_axis = std::exp(logm[side]);
      config.codebook_prob = p;
      config.family = family;
      config.seed = spec.seed + side;
      const TrialStats stats = run_single_target(config, uniform_target_sampler(), spec.trials, opts);
      rate[side] = stats.rate();
      hw[side] = stats.halfwidth();
    }
    out << n << ',' << logm[0] << ',' << rate[0] << ',' << hw[0] << ',' << logm[1] << ','
        << rate[1] << ',' << hw[1] << '\n';
    log << "n=" << n << " below=" << rate[0] << " above=" << rate[1] << "\n";
  }
  return 0;
}

int cmd_sim_nonadaptive(const ExperimentSpec& spec, const ChannelFamily& family, std::ostream& log) {
  const UnitScale u = unit_scale(spec);
  const ThirdOrder third = third_order_for(spec);
  const CapacityResult cap = capacity(family, {spec.grid_step});
  const double p = pick_p(spec, cap);
  const double v = dispersion_for_eps(cap, spec.eps);
  std::ofstream out = open_output(spec.out);
  out << "n,cells_per_axis,delta,empirical_rate,halfwidth,decode_error_rate,theory_neg_log_delta_"
      << u.suffix << "\n";
  SingleTargetOptions opts;
  opts.threads = spec.threads;
  opts.model = model_for(spec);
  opts.fresh_codebook = spec.fresh_codebook;
  for (const int n : spec.n_values) {
    double log_m;
    if (spec.separate) {
      const double v_d = dispersion_for_eps(cap, spec.eps / spec.d);
      log_m = separate_search_resolution(cap.capacity, v_d, n, spec.d, spec.eps);
    } else {
      log_m = second_order_resolution(cap.capacity, v, n, spec.d, spec.eps, third);
    }
    SearchConfig config;
    config.n = n;
    config.d = spec.d;
    config.cells_per_axis = spec.cells_per_axis > 0 ? spec.cells_per_axis
                                                    : static_cast<double>(recipe_cells(log_m));
    config.codebook_prob = p;
    config.family = family;
    config.seed = spec.seed;
    const TrialStats stats =
        spec.separate ? run_separate_search(config, uniform_target_sampler(), spec.trials, opts)
                      : run_single_target(config, uniform_target_sampler(), spec.trials, opts);
    out << n << ',' << config.cells_per_axis << ',' << stats.resolution_delta << ','
        << stats.rate() << ',' << stats.halfwidth() << ',' << stats.decode_error_rate() << ','
        << log_m * u.rate << '\n';
    log << "n=" << n << " M=" << config.cells_per_axis << " rate=" << stats.rate() << "\n";
  }
  return 0;
}

int cmd_sim_multitarget(const ExperimentSpec& spec, const ChannelFamily& family, std::ostream& log) {
  const UnitScale u = unit_scale(spec);
  const ThirdOrder third = third_order_for(spec);
  const MultiTargetStats mstats = multi_target_optimize(family, spec.k);
  const double p = spec.p >= 0.0 ? spec.p : mstats.p_star;
  std::ofstream out = open_output(spec.out);
  out << "n,k,cells_per_axis,gamma,delta,empirical_rate,halfwidth,decode_error_rate,"
         "theory_neg_log_delta_" << u.suffix << "\n";
  MultiTargetRunOptions opts;
  opts.threads = spec.threads;
  for (const int n : spec.n_values) {
    const double log_m = multi_target_resolution(mstats, n, spec.d, spec.eps, third);
    std::int64_t cells = spec.cells_per_axis > 0 ? static_cast<std::int64_t>(spec.cells_per_axis)
                                                 : recipe_cells(log_m);
    // keep the ordered-tuple scan within budget
    const double cells_cap = std::pow(2.0 * static_cast<double>(opts.tuple_budget), 1.0 / 2.0);
    if (spec.k >= 2 && static_cast<double>(cells) > cells_cap) {
      cells = static_cast<std::int64_t>(cells_cap);
      log << "n=" << n << ": capping cells at " << cells << " for the tuple budget\n";
    }
    const double gamma = spec.gamma >= 0.0 ? spec.gamma : 0.5 * std::log(static_cast<double>(n));
    SearchConfig config;
    config.n = n;
    config.d = spec.d;
    config.cells_per_axis = static_cast<double>(cells);
    config.codebook_prob = p;
    config.family = family;
    config.seed = spec.seed;
    const TrialStats stats =
        run_multi_target(config, spec.k, gamma, uniform_target_sampler(), spec.trials, opts);
    out << n << ',' << spec.k << ',' << cells << ',' << gamma << ',' << stats.resolution_delta
        << ',' << stats.rate() << ',' << stats.halfwidth() << ',' << stats.decode_error_rate()
        << ',' << log_m * u.rate << '\n';
    log << "n=" << n << " M=" << cells << " rate=" << stats.rate() << "\n";
  }
  return 0;
}

int cmd_sim_adaptive(const ExperimentSpec& spec, const ChannelFamily& family, std::ostream& log) {
  const UnitScale u = unit_scale(spec);
  const CapacityResult cap = capacity(family, {spec.grid_step});
  const double p = pick_p(spec, cap);
  const InfoDensityTable decoder = density_table(p, matrix_at(family, p));
  const double a0 = max_used_density(decoder);
  std::ofstream out = open_output(spec.out);
  out << "n,cells_per_axis,lambda,mean_tau,tau_std,empirical_rate,halfwidth,decode_error_rate,"
         "censored,theory_neg_log_delta_" << u.suffix << "\n";
  AdaptiveOptions opts;
  opts.threads = spec.threads;
  opts.model = model_for(spec);
  bool checks_ok = true;
  for (const int n : spec.n_values) {
    const double log_m_total = n * cap.capacity / (1.0 - spec.eps) - std::log(static_cast<double>(n));
    AdaptiveConfig config;
    config.d = spec.d;
    config.cells_per_axis = spec.cells_per_axis > 0
                                ? spec.cells_per_axis
                                : static_cast<double>(recipe_cells(log_m_total / spec.d));
    config.codebook_prob = p;
    // threshold tuned so the true cell's own mean hit time equals n exactly
    config.threshold = threshold_for_mean_hit_time(decoder, static_cast<double>(n), 3 * n + 100);
    config.family = family;
    config.seed = spec.seed + static_cast<std::uint64_t>(n);
    const AdaptiveRunStats stats = run_adaptive(config, uniform_target_sampler(), spec.trials, opts);
    const StoppingBoundReport report = verify_stopping_bounds(stats, config);
    checks_ok = checks_ok && report.valid && report.mean_ok && report.error_ok;
    const double theory = adaptive_resolution_bound(cap.capacity, stats.mean_tau(), spec.d, spec.eps);
    out << n << ',' << config.cells_per_axis << ',' << config.threshold << ',' << stats.mean_tau()
        << ',' << stats.tau_std() << ',' << stats.rate() << ','
        << wilson_halfwidth(stats.excess_count, stats.trials) << ',' << stats.decode_error_rate()
        << ',' << stats.censored << ',' << theory * u.rate << '\n';
    log << "n=" << n << " M=" << config.cells_per_axis << " mean_tau=" << stats.mean_tau()
        << " rate=" << stats.rate() << (report.mean_ok && report.error_ok ? "" : " [check failed]")
        << "\n";
  }
  return checks_ok ? 0 : 1;
}

int cmd_bounds(const ExperimentSpec& spec, const ChannelFamily& family, std::ostream& log) {
  const CapacityResult cap = capacity(family, {spec.grid_step});
  const double p = pick_p(spec, cap);
  const int n = spec.n_values.front();
  double cells = spec.cells_per_axis;
  if (cells <= 0) {
    const double v = dispersion_for_eps(cap, spec.eps);
    cells = recipe_cells(
        second_order_resolution(cap.capacity, v, n, spec.d, spec.eps, ThirdOrder::MinusHalfLog));
  }
  BoundReport report;
  report.family = family.describe();
  report.n = n;
  report.d = spec.d;
  report.cells_per_axis = cells;
  report.p = p;
  report.eps = spec.eps;
  AchievabilityOptions aopts;
  aopts.mc_samples = spec.mc_samples;
  aopts.seed = spec.seed;
  aopts.threads = spec.threads;
  report.achievability = achievability_bound(family, n, spec.d, cells, p, aopts);
  ConverseOptions copts;
  copts.beta = spec.beta;
  copts.kappa = spec.kappa;
  report.converse = converse_bound(family, n, spec.d, spec.eps, copts);
  std::ofstream out = open_output(spec.out);
  out << report.to_json();
  log << "eps_upper=" << report.achievability.eps_upper
      << " converse=" << report.converse.neg_log_delta_upper << "\n";
  return 0;
}

int cmd_berry_esseen(const ExperimentSpec& spec, const ChannelFamily& family, std::ostream& log) {
  const CapacityResult cap = capacity(family, {spec.grid_step});
  const double q = pick_p(spec, cap);
  const InfoDensityTable table = density_table(q, matrix_at(family, q));
  std::ofstream out = open_output(spec.out);
  out << "n,max_gap,bound,ok\n";
  bool all_ok = true;
  for (const int n : spec.n_values) {
    const BerryEsseenGap gap = berry_esseen_gap(table, n);
    const bool ok = gap.max_gap <= gap.bound;
    all_ok = all_ok && ok;
    out << n << ',' << gap.max_gap << ',' << gap.bound << ',' << (ok ? 1 : 0) << '\n';
    log << "n=" << n << " gap=" << gap.max_gap << " bound=" << gap.bound << "\n";
  }
  return all_ok ? 0 : 1;
}

}  // namespace

std::string ExperimentSpec::resolved_json() const {
  return spec_to_json(*this).dump(2) + "\n";
}

void apply_spec_json(ExperimentSpec& spec, const std::string& json_text) {
  json j = json::parse(json_text);
  for (const auto& [key, value] : j.items()) {
    if (key == "command") spec.command = value.get<std::string>();
    else if (key == "family") spec.family = value.get<std::string>();
    else if (key == "params") spec.params = value.get<std::vector<double>>();
    else if (key == "n") {
      if (value.is_string()) spec.n_values = parse_int_list(value.get<std::string>());
      else spec.n_values = value.get<std::vector<int>>();
    }
    else if (key == "d") spec.d = value.get<int>();
    else if (key == "k") spec.k = value.get<int>();
    else if (key == "eps") spec.eps = value.get<double>();
    else if (key == "trials") spec.trials = value.get<std::int64_t>();
    else if (key == "seed") { spec.seed = value.get<std::uint64_t>(); spec.seed_set = true; }
    else if (key == "out") spec.out = value.get<std::string>();
    else if (key == "units") spec.units = value.get<std::string>();
    else if (key == "threads") spec.threads = value.get<int>();
    else if (key == "third_order") spec.third_order = value.get<std::string>();
    else if (key == "grid_step") spec.grid_step = value.get<double>();
    else if (key == "q_step") spec.q_step = value.get<double>();
    else if (key == "gamma") spec.gamma = value.get<double>();
    else if (key == "cells_per_axis") spec.cells_per_axis = value.get<double>();
    else if (key == "p") spec.p = value.get<double>();
    else if (key == "mc_samples") spec.mc_samples = value.get<int>();
    else if (key == "beta") spec.beta = value.get<double>();
    else if (key == "kappa") spec.kappa = value.get<double>();
    else if (key == "phase_low") spec.phase_low = value.get<double>();
    else if (key == "phase_high") spec.phase_high = value.get<double>();
    else if (key == "separate") spec.separate = value.get<bool>();
    else if (key == "model") spec.model = value.get<std::string>();
    else if (key == "fresh_codebook") spec.fresh_codebook = value.get<bool>();
    else throw std::invalid_argument("unknown spec field: " + key);
  }
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    int start = 0, stop = 0, step = 1;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> start >> c1 >> stop) || c1 != ':') throw std::invalid_argument("bad range: " + text);
    if (is >> c2 >> step) {
      if (c2 != ':' || step <= 0) throw std::invalid_argument("bad range: " + text);
    }
    for (int v = start; v <= stop; v += step) out.push_back(v);
  } else {
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
      if (!item.empty()) out.push_back(std::stoi(item));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty query-count list: " + text);
  return out;
}

int run_experiment(const ExperimentSpec& spec_in, std::ostream& log) {
  ExperimentSpec spec = spec_in;
  try {
    if (!spec.seed_set) {
      if (const char* env = std::getenv("QRES_SEED")) {
        spec.seed = std::strtoull(env, nullptr, 10);
      }
      spec.seed_set = true;
    }
    if (spec.out.empty()) spec.out = default_out(spec);
    if (spec.n_values.empty()) spec.n_values = {20, 30, 40, 50, 60, 70, 80};
    if (spec.trials < 1 || spec.d < 1 || spec.k < 1) {
      throw std::invalid_argument("trials, d and k must be positive");
    }
    if (!(spec.eps > 0.0 && spec.eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");

    const ChannelFamily family = parse_family(spec.family);
    write_resolved_spec(spec, spec.out);

    if (spec.command == "capacity-sweep") return cmd_capacity_sweep(spec, family, log);
    if (spec.command == "rate-compare") return cmd_rate_compare(spec, family, log);
    if (spec.command == "gain") return cmd_gain(spec, family, log);
    if (spec.command == "phase-transition") return cmd_phase_transition(spec, family, log);
    if (spec.command == "sim-nonadaptive") return cmd_sim_nonadaptive(spec, family, log);
    if (spec.command == "sim-multitarget") return cmd_sim_multitarget(spec, family, log);
    if (spec.command == "sim-adaptive") return cmd_sim_adaptive(spec, family, log);
    if (spec.command == "bounds") return cmd_bounds(spec, family, log);
    if (spec.command == "berry-esseen") return cmd_berry_esseen(spec, family, log);
    throw std::invalid_argument("unknown command: " + spec.command);
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    err["command"] = spec.command;
    std::cout << err.dump() << std::endl;
    return 2;
  }
}

}  // namespace qsearch
