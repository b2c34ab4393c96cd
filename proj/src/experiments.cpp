#include "plroute/experiments.hpp"

#include <algorithm>

#include "plroute/datagen.hpp"
#include "plroute/dynamic_inference.hpp"
#include "plroute/errors.hpp"
#include "plroute/random.hpp"

namespace plroute {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                    const char* experiment) {
  if (!j.is_object()) throw ValidationError("experiment settings must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError("unknown key \"" + key + "\" for experiment " + experiment);
    }
  }
}

template <typename T>
void read_key(const Json& j, const char* key, T& field) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(std::string("experiment key \"") + key + "\" has the wrong type");
  }
}

void require_positive(long long v, const char* what) {
  if (v < 1) throw ValidationError(std::string(what) + " must be positive");
}

std::string format_number(double x) { return Json(x).dump(); }

Dataset make_data(const RunConfig& cfg, const ParameterMatrix& truth, std::uint64_t seed,
                  int n) {
  GeneratorConfig g = cfg.datagen;
  g.params = truth;
  g.seed = seed;
  return generate_dataset(g, static_cast<std::size_t>(n));
}

double truth_accuracy(const RunConfig& cfg, const ParameterMatrix& truth,
                      const Dataset& validation) {
  return evaluate_accuracy(truth, reference_scaler(cfg.datagen), validation.observations);
}

McmcConfig with_seed(const McmcConfig& base, std::uint64_t seed) {
  McmcConfig m = base;
  m.seed = seed;
  return m;
}

struct SequenceSetup {
  std::vector<ParameterMatrix> truth;           // per iteration
  std::vector<const Dataset*> validation;       // per iteration
  int n_obs = 0;
  WeightingConfig weighting;
  DynamicOptions options;
  std::uint64_t data_seed = 0;
  std::uint64_t mcmc_seed = 0;
};

// Iteration 1 is a static fit on the first batch; every later iteration is
// one nightly update with a fresh batch stamped with its own day.
std::vector<double> dynamic_sequence(const RunConfig& cfg, const SequenceSetup& s) {
  const auto iterations = s.truth.size();
  std::vector<double> accuracy(iterations);
  Dataset first = make_data(cfg, s.truth[0], derive_seed(s.data_seed, 0), s.n_obs);
  const Scaler scaler = *first.scaler;
  ParticleSet posterior = fit_static(first, with_seed(cfg.mcmc, derive_seed(s.mcmc_seed, 0)));
  ObservationStore store;
  for (auto& obs : first.observations) store.add(std::move(obs), 0);
  accuracy[0] = evaluate_accuracy(posterior_mean(posterior), scaler, s.validation[0]->observations);

  // Records of day t are processed in the update for day t + 1.
  for (std::size_t t = 1; t < iterations; ++t) {
    const int day = static_cast<int>(t);
    Dataset batch = make_data(cfg, s.truth[t], derive_seed(s.data_seed, t), s.n_obs);
    for (auto& obs : batch.observations) store.add(std::move(obs), day);
    DynamicStepResult step =
        fit_dynamic_step(posterior, store, day + 1, s.weighting,
                         with_seed(cfg.mcmc, derive_seed(s.mcmc_seed, t)), scaler, s.options);
    posterior = std::move(step.posterior);
    store = std::move(step.store);
    accuracy[t] =
        evaluate_accuracy(posterior_mean(posterior), scaler, s.validation[t]->observations);
  }
  return accuracy;
}

}  // namespace

std::size_t Table::column(const std::string& col) const {
  auto it = std::find(columns.begin(), columns.end(), col);
  if (it == columns.end()) throw ValidationError("table " + name + " has no column " + col);
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::values(const std::string& col) const {
  const std::size_t c = column(col);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

Json Table::to_json() const {
  return Json{{"name", name}, {"columns", columns}, {"rows", rows}};
}

StaticSweepSpec static_sweep_spec(const Json& j) {
  reject_unknown(j, {"sizes", "runs", "validation", "seed"}, "static-sweep");
  StaticSweepSpec s;
  read_key(j, "sizes", s.sizes);
  read_key(j, "runs", s.runs);
  read_key(j, "validation", s.validation);
  read_key(j, "seed", s.seed);
  if (s.sizes.empty()) throw ValidationError("sizes must not be empty");
  for (int n : s.sizes) require_positive(n, "likelihood size");
  require_positive(s.runs, "runs");
  require_positive(s.validation, "validation size");
  return s;
}

DynamicItersSpec dynamic_iters_spec(const Json& j) {
  reject_unknown(j, {"batch_sizes", "iterations", "beta", "validation", "seed"}, "dynamic-iters");
  DynamicItersSpec s;
  read_key(j, "batch_sizes", s.batch_sizes);
  read_key(j, "iterations", s.iterations);
  read_key(j, "beta", s.beta);
  read_key(j, "validation", s.validation);
  read_key(j, "seed", s.seed);
  if (s.batch_sizes.empty()) throw ValidationError("batch_sizes must not be empty");
  for (int n : s.batch_sizes) require_positive(n, "batch size");
  require_positive(s.iterations, "iterations");
  require_positive(s.validation, "validation size");
  return s;
}

BetaShiftSpec beta_shift_spec(const Json& j) {
  reject_unknown(j,
                 {"betas", "iterations", "shift_after", "n_obs", "a_max", "validation", "seed",
                  "after"},
                 "beta-shift");
  BetaShiftSpec s;
  read_key(j, "betas", s.betas);
  read_key(j, "iterations", s.iterations);
  read_key(j, "shift_after", s.shift_after);
  read_key(j, "n_obs", s.n_obs);
  read_key(j, "a_max", s.a_max);
  read_key(j, "validation", s.validation);
  read_key(j, "seed", s.seed);
  if (auto it = j.find("after"); it != j.end()) s.after = params_from_json(*it);
  if (s.betas.empty()) throw ValidationError("betas must not be empty");
  require_positive(s.iterations, "iterations");
  require_positive(s.n_obs, "n_obs");
  require_positive(s.validation, "validation size");
  if (s.shift_after < 1 || s.shift_after >= s.iterations) {
    throw ValidationError("shift_after must lie in [1, iterations)");
  }
  return s;
}

FilterAblationSpec filter_ablation_spec(const Json& j) {
  reject_unknown(j, {"runs", "iterations", "n_obs", "validation", "seed"}, "filter-ablation");
  FilterAblationSpec s;
  read_key(j, "runs", s.runs);
  read_key(j, "iterations", s.iterations);
  read_key(j, "n_obs", s.n_obs);
  read_key(j, "validation", s.validation);
  read_key(j, "seed", s.seed);
  require_positive(s.runs, "runs");
  require_positive(s.iterations, "iterations");
  require_positive(s.n_obs, "n_obs");
  require_positive(s.validation, "validation size");
  return s;
}

ParameterMatrix shifted_parameters(const ParameterMatrix& p) {
  ParameterMatrix q = p;
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    q.a2[k] = -p.a2[k];
    q.a3[k] = -p.a3[k];
  }
  return q;
}

Table run_static_sweep(const RunConfig& cfg, const StaticSweepSpec& spec) {
  cfg.validate();
  const ParameterMatrix& truth = cfg.datagen.params;
  const Dataset validation = make_data(cfg, truth, derive_seed(spec.seed, 0), spec.validation);
  const double truth_acc = truth_accuracy(cfg, truth, validation);

  Table table{"static-sweep", {"n_obs", "run", "accuracy", "truth_accuracy"}, {}};
  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    for (int run = 0; run < spec.runs; ++run) {
      const std::uint64_t stream = 1 + si * 1000 + static_cast<std::uint64_t>(run);
      const Dataset train = make_data(cfg, truth, derive_seed(spec.seed, stream), spec.sizes[si]);
      const ParticleSet post =
          fit_static(train, with_seed(cfg.mcmc, derive_seed(cfg.mcmc.seed, stream)));
      const double acc =
          evaluate_accuracy(posterior_mean(post), *train.scaler, validation.observations);
      table.rows.push_back({static_cast<double>(spec.sizes[si]), static_cast<double>(run), acc,
                            truth_acc});
    }
  }
  return table;
}

Table run_dynamic_iters(const RunConfig& cfg, const DynamicItersSpec& spec) {
  cfg.validate();
  const ParameterMatrix& truth = cfg.datagen.params;
  const Dataset validation = make_data(cfg, truth, derive_seed(spec.seed, 0), spec.validation);

  Table table{"dynamic-iters", {"iteration"}, {}};
  std::vector<std::vector<double>> curves;
  for (std::size_t bi = 0; bi < spec.batch_sizes.size(); ++bi) {
    table.columns.push_back("n=" + std::to_string(spec.batch_sizes[bi]));
    SequenceSetup s;
    s.truth.assign(static_cast<std::size_t>(spec.iterations), truth);
    s.validation.assign(s.truth.size(), &validation);
    s.n_obs = spec.batch_sizes[bi];
    s.weighting = cfg.dynamic;
    s.weighting.beta = spec.beta;
    s.weighting.validate();
    s.data_seed = derive_seed(spec.seed, 100 + bi);
    s.mcmc_seed = derive_seed(cfg.mcmc.seed, 100 + bi);
    curves.push_back(dynamic_sequence(cfg, s));
  }
  for (int t = 0; t < spec.iterations; ++t) {
    std::vector<double> row{static_cast<double>(t + 1)};
    for (const auto& c : curves) row.push_back(c[static_cast<std::size_t>(t)]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table run_beta_shift(const RunConfig& cfg, const BetaShiftSpec& spec) {
  cfg.validate();
  const ParameterMatrix before = cfg.datagen.params;
  const ParameterMatrix after = spec.after.value_or(shifted_parameters(before));
  const Dataset val_before = make_data(cfg, before, derive_seed(spec.seed, 0), spec.validation);
  const Dataset val_after = make_data(cfg, after, derive_seed(spec.seed, 1), spec.validation);
  const double truth_before = truth_accuracy(cfg, before, val_before);
  const double truth_after = truth_accuracy(cfg, after, val_after);

  SequenceSetup s;
  for (int t = 0; t < spec.iterations; ++t) {
    const bool pre = t < spec.shift_after;
    s.truth.push_back(pre ? before : after);
    s.validation.push_back(pre ? &val_before : &val_after);
  }
  s.n_obs = spec.n_obs;
  s.data_seed = derive_seed(spec.seed, 2);
  s.mcmc_seed = derive_seed(cfg.mcmc.seed, 2);

  Table table{"beta-shift", {"iteration", "truth"}, {}};
  std::vector<std::vector<double>> curves;
  for (double beta : spec.betas) {
    table.columns.push_back("beta=" + format_number(beta));
    s.weighting = cfg.dynamic;
    s.weighting.beta = beta;
    s.weighting.a_max = spec.a_max;
    s.weighting.validate();
    curves.push_back(dynamic_sequence(cfg, s));
  }
  for (int t = 0; t < spec.iterations; ++t) {
    std::vector<double> row{static_cast<double>(t + 1),
                            t < spec.shift_after ? truth_before : truth_after};
    for (const auto& c : curves) row.push_back(c[static_cast<std::size_t>(t)]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table run_filter_ablation(const RunConfig& cfg, const FilterAblationSpec& spec) {
  cfg.validate();
  const ParameterMatrix& truth = cfg.datagen.params;
  const Dataset validation = make_data(cfg, truth, derive_seed(spec.seed, 0), spec.validation);

  Table table{"filter-ablation", {"run", "iteration", "filtered", "unfiltered"}, {}};
  for (int run = 0; run < spec.runs; ++run) {
    SequenceSetup s;
    s.truth.assign(static_cast<std::size_t>(spec.iterations), truth);
    s.validation.assign(s.truth.size(), &validation);
    s.n_obs = spec.n_obs;
    s.weighting = cfg.dynamic;
    s.data_seed = derive_seed(spec.seed, 100 + static_cast<std::uint64_t>(run));
    s.mcmc_seed = derive_seed(cfg.mcmc.seed, 100 + static_cast<std::uint64_t>(run));
    s.options.filter = true;
    const std::vector<double> filtered = dynamic_sequence(cfg, s);
    s.options.filter = false;
    const std::vector<double> unfiltered = dynamic_sequence(cfg, s);
    for (int t = 0; t < spec.iterations; ++t) {
      const auto i = static_cast<std::size_t>(t);
      table.rows.push_back(
          {static_cast<double>(run), static_cast<double>(t + 1), filtered[i], unfiltered[i]});
    }
  }
  return table;
}

Table run_experiment(const std::string& name, const RunConfig& cfg) {
  if (name == "static-sweep") return run_static_sweep(cfg, static_sweep_spec(cfg.experiment));
  if (name == "dynamic-iters") return run_dynamic_iters(cfg, dynamic_iters_spec(cfg.experiment));
  if (name == "beta-shift") return run_beta_shift(cfg, beta_shift_spec(cfg.experiment));
  if (name == "filter-ablation") {
    return run_filter_ablation(cfg, filter_ablation_spec(cfg.experiment));
  }
  throw ValidationError("unknown experiment \"" + name + "\"");
}

int recovery_iterations(const std::vector<double>& accuracy, int shift_after, double tol) {
  if (shift_after < 1 || static_cast<std::size_t>(shift_after) > accuracy.size()) {
    throw ValidationError("shift_after out of range");
  }
  const double target = accuracy[static_cast<std::size_t>(shift_after - 1)] - tol;
  for (std::size_t t = static_cast<std::size_t>(shift_after); t < accuracy.size(); ++t) {
    if (accuracy[t] >= target) return static_cast<int>(t) - shift_after + 1;
  }
  return -1;
}

}  // namespace plroute
