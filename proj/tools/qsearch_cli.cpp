// Command-line front end for the query-resolution experiments.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qsearch/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--spec", "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Measurement-dependent noisy-search experiments: channel capacity and dispersion sweeps,\n"
      "second-order resolution approximations, finite-blocklength bounds and Monte Carlo\n"
      "simulation of the non-adaptive, multi-target and adaptive query procedures."};
  app.require_subcommand(1);

  qsearch::ExperimentSpec spec;
  std::string spec_file;
  std::string n_text;
  std::string seed_text;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--spec", spec_file, "JSON spec file; explicit flags override its fields");
    cmd->add_option("--family", spec.family, "channel: bsc:<nu> | bec:<tau> | z:<zeta> | const:<file>");
    cmd->add_option("--n", n_text, "query counts: single value, comma list, or start:stop:step");
    cmd->add_option("--d", spec.d, "target dimension");
    cmd->add_option("--eps", spec.eps, "excess-resolution probability budget");
    cmd->add_option("--trials", spec.trials, "Monte Carlo trials per point");
    cmd->add_option("--seed", seed_text, "RNG seed (env QRES_SEED is the fallback)");
    cmd->add_option("--out", spec.out, "output file (default <command>.csv/.json)");
    cmd->add_option("--units", spec.units, "rate units: nats | bits");
    cmd->add_option("--threads", spec.threads, "worker threads for trial loops");
    cmd->add_option("--p", spec.p, "codebook probability (default: capacity-achieving)");
    cmd->add_option("--cells", spec.cells_per_axis, "cells per axis M (default: per-recipe)");
    cmd->add_option("--third-order", spec.third_order,
                    "log-n correction: auto | none | minus-half-log | plus-log");
    cmd->add_option("--model", spec.model, "codebook model: auto | explicit | implicit");
    cmd->add_option("--grid-step", spec.grid_step, "capacity optimizer grid step");
    return cmd;
  };

  auto* sweep = add_common(app.add_subcommand(
      "capacity-sweep", "per-symbol density mean/variance over the query-size grid"));
  sweep->add_option("--params", spec.params, "channel parameters to sweep")->delimiter(',');
  sweep->add_option("--q-step", spec.q_step, "query-size grid step");

  auto* rate = add_common(app.add_subcommand(
      "rate-compare", "second-order rate per query, measurement-dependent vs independent"));
  rate->add_option("--params", spec.params, "channel parameters to sweep")->delimiter(',');

  auto* gain = add_common(
      app.add_subcommand("gain", "lower bound on the adaptive-over-nonadaptive resolution gain"));
  gain->add_option("--params", spec.params, "channel parameters to sweep")->delimiter(',');

  auto* phase = add_common(app.add_subcommand(
      "phase-transition", "simulated excess-resolution rate below and above the critical rate"));
  phase->add_option("--phase-low", spec.phase_low, "sub-critical rate factor");
  phase->add_option("--phase-high", spec.phase_high, "super-critical rate factor");

  auto* simna = add_common(app.add_subcommand(
      "sim-nonadaptive", "Monte Carlo runs of the fixed-length query procedure"));
  simna->add_flag("--separate", spec.separate, "search each dimension independently");
  simna->add_flag("!--frozen-codebook", spec.fresh_codebook,
                  "reuse one codebook across trials (explicit model only)");

  auto* simmt = add_common(app.add_subcommand(
      "sim-multitarget", "Monte Carlo runs of the multi-target threshold procedure"));
  simmt->add_option("--k", spec.k, "number of targets");
  simmt->add_option("--gamma", spec.gamma, "threshold margin in nats (default 0.5 log n)");

  add_common(app.add_subcommand(
      "sim-adaptive", "Monte Carlo runs of the sequential stopping-rule procedure"));

  auto* bounds = add_common(app.add_subcommand(
      "bounds", "non-asymptotic achievability and converse bounds as JSON"));
  bounds->add_option("--M", spec.cells_per_axis, "cells per axis for the achievability side");
  bounds->add_option("--mc-samples", spec.mc_samples, "outer Monte Carlo samples");
  bounds->add_option("--beta", spec.beta, "converse beta (default 1/(d sqrt(n)))");
  bounds->add_option("--kappa", spec.kappa, "converse kappa (default 1/sqrt(n))");

  add_common(app.add_subcommand(
      "berry-esseen", "exact-vs-Gaussian cdf gap of the density sum against its bound"));

  auto* runsub = app.add_subcommand("run", "run a JSON spec file as-is");
  runsub->add_option("--spec", spec_file, "JSON spec file")->required();

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    qsearch::ExperimentSpec resolved;
    if (!spec_file.empty()) {
      qsearch::apply_spec_json(resolved, read_file(spec_file));
    }
    if (sub->get_name() != "run") {
      resolved.command = sub->get_name();
      // flags the user actually passed override the file
      auto passed = [&](const std::string& name) {
        return sub->count(name) > 0;
      };
      if (passed("--family")) resolved.family = spec.family;
      if (passed("--d")) resolved.d = spec.d;
      if (passed("--eps")) resolved.eps = spec.eps;
      if (passed("--trials")) resolved.trials = spec.trials;
      if (passed("--out")) resolved.out = spec.out;
      if (passed("--units")) resolved.units = spec.units;
      if (passed("--threads")) resolved.threads = spec.threads;
      if (passed("--p")) resolved.p = spec.p;
      if (passed("--cells")) resolved.cells_per_axis = spec.cells_per_axis;
      if (passed("--third-order")) resolved.third_order = spec.third_order;
      if (passed("--model")) resolved.model = spec.model;
      if (passed("--grid-step")) resolved.grid_step = spec.grid_step;
      if (!n_text.empty()) resolved.n_values = qsearch::parse_int_list(n_text);
      if (!seed_text.empty()) {
        resolved.seed = std::stoull(seed_text);
        resolved.seed_set = true;
      }
      if (sub == sweep || sub == rate || sub == gain) {
        if (sub->count("--params")) resolved.params = spec.params;
      }
      if (sub == sweep && sub->count("--q-step")) resolved.q_step = spec.q_step;
      if (sub == phase) {
        if (sub->count("--phase-low")) resolved.phase_low = spec.phase_low;
        if (sub->count("--phase-high")) resolved.phase_high = spec.phase_high;
      }
      if (sub == simna) {
        if (sub->count("--separate")) resolved.separate = spec.separate;
        if (sub->count("--frozen-codebook")) resolved.fresh_codebook = spec.fresh_codebook;
      }
      if (sub == simmt) {
        if (sub->count("--k")) resolved.k = spec.k;
        if (sub->count("--gamma")) resolved.gamma = spec.gamma;
      }
      if (sub == bounds) {
        if (sub->count("--M")) resolved.cells_per_axis = spec.cells_per_axis;
        if (sub->count("--mc-samples")) resolved.mc_samples = spec.mc_samples;
        if (sub->count("--beta")) resolved.beta = spec.beta;
        if (sub->count("--kappa")) resolved.kappa = spec.kappa;
      }
    }
    return qsearch::run_experiment(resolved, std::cerr);
  } catch (const std::exception& e) {
    std::cout << "{\"error\": \"" << e.what() << "\"}" << std::endl;
    return 2;
  }
}
