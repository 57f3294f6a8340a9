// Reproducible experiment runner behind the command-line tool.
//
// A spec (JSON file and/or CLI flags; flags win) selects one command and
// its parameters.  Every run writes its outputs plus a fully resolved
// copy of the spec, so a run can be replayed byte-for-byte from the
// recorded file.  Exit codes: 0 ok, 1 a built-in check failed, 2 invalid
// spec.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qsearch {

struct ExperimentSpec {
  std::string command;
  std::string family = "bsc:0.4";
  std::vector<double> params;        // sweep parameters for capacity-sweep/rate-compare/gain
  std::vector<int> n_values;         // query counts
  int d = 1;
  int k = 2;
  double eps = 0.1;
  std::int64_t trials = 10000;
  std::uint64_t seed = 12345;
  bool seed_set = false;             // env fallback applies when false
  std::string out;                   // output path; default "<command>.csv" / ".json"
  std::string units = "nats";        // nats | bits
  int threads = 1;
  std::string third_order = "none";  // none | minus-half-log | plus-log
  double grid_step = 1e-4;           // capacity optimizer grid
  double q_step = 0.005;             // sweep resolution
  double gamma = -1.0;               // multi-target margin; < 0 -> log(n)/2
  double cells_per_axis = 0.0;       // 0: per-recipe choice
  double p = -1.0;                   // codebook probability; < 0: capacity-achieving
  int mc_samples = 10000;
  double beta = -1.0;                // converse defaults when <= 0
  double kappa = -1.0;
  double phase_low = 0.9;            // phase-transition rate factors
  double phase_high = 1.1;
  bool separate = false;             // sim-nonadaptive: per-dimension search
  std::string model = "auto";        // auto | explicit | implicit
  bool fresh_codebook = true;

  std::string resolved_json() const;
};

/// Applies JSON content to a spec.  Unknown keys are rejected.
void apply_spec_json(ExperimentSpec& spec, const std::string& json_text);

/// Parses "20", "20,30,40" or "20:80:10" (inclusive range).
std::vector<int> parse_int_list(const std::string& text);

/// Runs the experiment; returns the process exit code.  Human-readable
/// progress goes to `log`; validation failures print machine-readable
/// JSON to stdout and return 2.
int run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace qsearch
