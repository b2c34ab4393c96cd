#pragma once

// Experiment drivers that produce the data behind the accuracy figures:
// static likelihood-size sweeps, dynamic batch-size runs, the decay-rate
// shift study and the filtering ablation. Each returns a numeric table.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plroute/io.hpp"

namespace plroute {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  std::vector<double> values(const std::string& name) const;
  Json to_json() const;
};

/// Settings under RunConfig::experiment; absent keys take these defaults.
struct StaticSweepSpec {
  std::vector<int> sizes{1000, 5000, 20000};
  int runs = 5;
  int validation = 20000;
  std::uint64_t seed = 1;
};

struct DynamicItersSpec {
  std::vector<int> batch_sizes{500, 1000, 2000};
  int iterations = 15;
  double beta = 0.0;
  int validation = 20000;
  std::uint64_t seed = 2;
};

struct BetaShiftSpec {
  std::vector<double> betas{0.1, 0.5, 0.9, 0.95, 0.99};
  int iterations = 15;
  int shift_after = 4;
  int n_obs = 2500;
  int a_max = 5;
  int validation = 20000;
  std::uint64_t seed = 3;
  /// Ground truth after the shift (default: shifted_parameters of the
  /// configured params, which drive the iterations before it).
  std::optional<ParameterMatrix> after;
};

struct FilterAblationSpec {
  int runs = 8;
  int iterations = 10;
  int n_obs = 2500;
  int validation = 20000;
  std::uint64_t seed = 4;
};

StaticSweepSpec static_sweep_spec(const Json& j);
DynamicItersSpec dynamic_iters_spec(const Json& j);
BetaShiftSpec beta_shift_spec(const Json& j);
FilterAblationSpec filter_ablation_spec(const Json& j);

/// Default post-shift ground truth: every preference coefficient negated.
ParameterMatrix shifted_parameters(const ParameterMatrix& p);

/// Columns: n_obs, run, accuracy, truth_accuracy.
Table run_static_sweep(const RunConfig& cfg, const StaticSweepSpec& spec);
/// Columns: iteration, then n=<size> per batch size.
Table run_dynamic_iters(const RunConfig& cfg, const DynamicItersSpec& spec);
/// Columns: iteration, truth, then beta=<value> per decay rate.
Table run_beta_shift(const RunConfig& cfg, const BetaShiftSpec& spec);
/// Columns: run, iteration, filtered, unfiltered.
Table run_filter_ablation(const RunConfig& cfg, const FilterAblationSpec& spec);

/// Dispatches on static-sweep | dynamic-iters | beta-shift | filter-ablation.
Table run_experiment(const std::string& name, const RunConfig& cfg);

/// First iteration after `shift_after` whose accuracy is within `tol` of the
/// accuracy at iteration `shift_after`, counted from the shift; -1 if none.
int recovery_iterations(const std::vector<double>& accuracy, int shift_after, double tol);

}  // namespace plroute
