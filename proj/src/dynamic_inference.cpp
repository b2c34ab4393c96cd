#include "plroute/dynamic_inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "plroute/errors.hpp"

namespace plroute {

namespace {

// Absorbs rounding in w*n so that e.g. n equal weights give one copy each.
constexpr double kCopyTolerance = 1e-9;
constexpr double kBandwidthFloor = 1e-8;
constexpr std::size_t kMinDistinctParticles = 5;

double median(std::vector<double> x) {
  const std::size_t n = x.size();
  const auto mid = x.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(x.begin(), mid, x.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(x.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

void ObservationStore::add(Observation observation, int day, DayType day_type) {
  if (!entries_.empty() && day < entries_.back().day) {
    throw ValidationError("store entries must be added in nondecreasing day order");
  }
  observation.validate();
  entries_.push_back({std::move(observation), day, day_type});
}

ObservationStore ObservationStore::from_dataset(const Dataset& data) {
  if (data.meta.size() != data.observations.size()) {
    throw ValidationError("every store record needs a day");
  }
  // Records may arrive unsorted in files; keep insertion order within a day.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.meta[i].day) {
      throw ValidationError("store record " + std::to_string(i + 1) + " has no day");
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *data.meta[a].day < *data.meta[b].day;
  });
  ObservationStore store;
  for (std::size_t i : order) {
    store.add(data.observations[i], *data.meta[i].day,
              data.meta[i].day_type.value_or(DayType::weekday));
  }
  return store;
}

Dataset ObservationStore::to_dataset() const {
  Dataset d;
  d.observations.reserve(entries_.size());
  d.meta.reserve(entries_.size());
  for (const auto& e : entries_) {
    d.observations.push_back(e.observation);
    d.meta.push_back({e.day, e.day_type});
  }
  return d;
}

std::optional<int> ObservationStore::last_day() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.back().day;
}

int observation_age(int day_recorded, int today) { return std::max(0, today - (day_recorded + 1)); }

void WeightingConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in [0, 1]");
  if (a_max < 0) throw ValidationError("a_max must be nonnegative");
  if (n_max < 1) throw ValidationError("n_max must be positive");
  if (lambda_daytype && !(*lambda_daytype >= 0.0 && *lambda_daytype <= 1.0)) {
    throw ValidationError("lambda_daytype must lie in [0, 1]");
  }
}

double plugin_bandwidth_factor(std::size_t n_sample, std::size_t dim) {
  const double n = static_cast<double>(n_sample);
  const double d = static_cast<double>(dim);
  return std::pow(4.0 * n / (d + 4.0), 2.0 / (d + 6.0));
}

Eigen::VectorXd plugin_bandwidth(const ParticleSet& particles) {
  const Eigen::Index n = particles.particles.rows();
  if (n < 2) throw ValidationError("bandwidth needs at least two particles");
  const Eigen::Index d = particles.particles.cols();
  const Eigen::RowVectorXd mean = particles.particles.colwise().mean();
  const Eigen::MatrixXd centered = particles.particles.rowwise() - mean;
  const Eigen::VectorXd var =
      (centered.array().square().colwise().sum() / static_cast<double>(n)).transpose();
  const double factor =
      plugin_bandwidth_factor(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  return (factor * var).cwiseMax(kBandwidthFloor);
}

MixturePrior::MixturePrior(Eigen::MatrixXd centers, Eigen::VectorXd bandwidth)
    : centers_(std::move(centers)), bandwidth_(std::move(bandwidth)) {
  if (centers_.rows() < 1 || centers_.cols() < 1) {
    throw ValidationError("mixture prior needs at least one center");
  }
  if (bandwidth_.size() != centers_.cols()) {
    throw ValidationError("bandwidth length must match the center dimension");
  }
  if (!(bandwidth_.array() > 0.0).all() || !bandwidth_.allFinite()) {
    throw ValidationError("bandwidth entries must be positive");
  }
  inv_bandwidth_ = bandwidth_.cwiseInverse();
  log_norm_ = -std::log(static_cast<double>(centers_.rows())) -
              0.5 * (bandwidth_.array() * (2.0 * std::numbers::pi)).log().sum();
}

double MixturePrior::log_density(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const {
  if (a.size() != centers_.cols()) throw ValidationError("prior dimension mismatch");
  // Squared Mahalanobis distance to every center.
  const Eigen::MatrixXd diff = (-centers_).rowwise() + a.transpose();
  const Eigen::VectorXd log_k = -0.5 * (diff.array().square().matrix() * inv_bandwidth_);
  const double m = log_k.maxCoeff();
  const Eigen::VectorXd resp = (log_k.array() - m).exp();
  const double total = resp.sum();
  // Gradient: responsibility-weighted sum of -(a - c_i) / sigma^2.
  grad = -(diff.transpose() * resp / total).cwiseProduct(inv_bandwidth_);
  return m + std::log(total) + log_norm_;
}

std::vector<double> filter_weights(std::span<const double> log_likelihoods) {
  if (log_likelihoods.empty()) return {};
  std::vector<double> shifted(log_likelihoods.begin(), log_likelihoods.end());
  const double med = median(shifted);
  for (double& x : shifted) x -= med;
  // The median shift does not protect exp() from overflow on its own.
  const double top = *std::max_element(shifted.begin(), shifted.end());
  double sum = 0.0;
  for (double& x : shifted) {
    x = std::exp(x - top);
    sum += x;
  }
  for (double& x : shifted) x /= sum;
  return shifted;
}

ResamplePlan residual_resample(std::span<const double> weights, std::size_t n, Rng& rng) {
  ResamplePlan plan;
  plan.deterministic_copies.resize(weights.size(), 0);
  std::vector<double> residual(weights.size(), 0.0);
  std::size_t placed = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double scaled = weights[j] * static_cast<double>(n);
    const auto copies = static_cast<int>(std::floor(scaled + kCopyTolerance));
    plan.deterministic_copies[j] = copies;
    residual[j] = std::max(0.0, scaled - copies);
    placed += static_cast<std::size_t>(copies);
  }
  if (placed > n) throw NumericError("resampling weights sum to more than one");
  for (std::size_t j = 0; j < weights.size(); ++j) {
    for (int c = 0; c < plan.deterministic_copies[j]; ++c) plan.indices.push_back(j);
  }
  plan.n_residual = static_cast<int>(n - placed);
  if (plan.n_residual > 0) {
    if (std::accumulate(residual.begin(), residual.end(), 0.0) <= 0.0) {
      residual.assign(weights.begin(), weights.end());
    }
    std::discrete_distribution<std::size_t> pick(residual.begin(), residual.end());
    for (int k = 0; k < plan.n_residual; ++k) plan.indices.push_back(pick(rng));
  }
  return plan;
}

ParticleSet particle_filter_resample(const ParticleSet& particles,
                                     std::span<const Observation> batch, const Scaler& scaler,
                                     std::uint64_t seed, FilterReport* report) {
  const std::size_t n = particles.size();
  if (n == 0) throw ValidationError("cannot filter an empty particle set");
  if (batch.empty()) {
    if (report != nullptr) {
      *report = FilterReport{};
      report->weights.assign(n, 1.0 / static_cast<double>(n));
      report->deterministic_copies.assign(n, 1);
      report->distinct = n;
    }
    return particles;
  }

  const ChoiceLikelihood likelihood(batch, {}, scaler);
  std::vector<double> xi(n);
  for (std::size_t j = 0; j < n; ++j) {
    xi[j] = likelihood.evaluate(particles.particles.row(static_cast<Eigen::Index>(j)).transpose(),
                                nullptr);
  }
  const std::vector<double> omega = filter_weights(xi);
  Rng rng = make_rng(seed, 0);
  const ResamplePlan plan = residual_resample(omega, n, rng);

  ParticleSet out;
  out.day = particles.day;
  out.diagnostics = particles.diagnostics;
  out.particles.resize(particles.particles.rows(), particles.particles.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out.particles.row(static_cast<Eigen::Index>(i)) =
        particles.particles.row(static_cast<Eigen::Index>(plan.indices[i]));
  }
  if (report != nullptr) {
    report->weights = omega;
    report->deterministic_copies = plan.deterministic_copies;
    report->n_residual = plan.n_residual;
    report->distinct = std::set<std::size_t>(plan.indices.begin(), plan.indices.end()).size();
    report->degenerate = report->distinct < kMinDistinctParticles;
  }
  return out;
}

std::vector<double> compute_observation_weights(const ObservationStore& store, int today,
                                                const WeightingConfig& cfg,
                                                std::optional<DayType> target_day_type) {
  cfg.validate();
  std::vector<double> eta;
  eta.reserve(store.size());
  for (const auto& e : store.entries()) {
    const int age = observation_age(e.day, today);
    double w = age == 0 ? 1.0 : std::pow(cfg.beta, age);
    if (cfg.lambda_daytype && target_day_type) {
      w *= e.day_type == *target_day_type ? *cfg.lambda_daytype : 1.0 - *cfg.lambda_daytype;
    }
    eta.push_back(w);
  }
  return eta;
}

ObservationStore prune_store(const ObservationStore& store, int today,
                             const WeightingConfig& cfg) {
  cfg.validate();
  const auto& entries = store.entries();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (observation_age(entries[i].day, today) <= cfg.a_max) kept.push_back(i);
  }
  if (kept.size() > static_cast<std::size_t>(cfg.n_max)) {
    const std::vector<double> eta = compute_observation_weights(store, today, cfg);
    std::vector<std::size_t> ranked = kept;
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      if (eta[a] != eta[b]) return eta[a] > eta[b];
      return entries[a].day > entries[b].day;
    });
    ranked.resize(static_cast<std::size_t>(cfg.n_max));
    std::sort(ranked.begin(), ranked.end());
    kept = std::move(ranked);
  }
  ObservationStore out;
  for (std::size_t i : kept) out.add(entries[i].observation, entries[i].day, entries[i].day_type);
  return out;
}

DynamicStepResult fit_dynamic_step(const ParticleSet& prev, const ObservationStore& store,
                                   int today, const WeightingConfig& wcfg,
                                   const McmcConfig& mcfg, const Scaler& scaler,
                                   const DynamicOptions& options) {
  wcfg.validate();
  mcfg.validate();
  if (prev.size() == 0) {
    throw ValidationError("dynamic update needs the previous posterior particles");
  }
  if (prev.particles.cols() != static_cast<Eigen::Index>(kParamDim)) {
    throw ValidationError("previous particles must be 14-dimensional");
  }
  if (const auto last = store.last_day(); last && *last > today) {
    throw ValidationError("store contains records after day " + std::to_string(today));
  }

  DynamicStepResult result;
  result.store = prune_store(store, today, wcfg);
  const std::vector<double> eta =
      compute_observation_weights(result.store, today, wcfg, options.target_day_type);

  std::vector<Observation> all;
  std::vector<Observation> newest;
  all.reserve(result.store.size());
  for (const auto& e : result.store.entries()) {
    all.push_back(e.observation);
    if (observation_age(e.day, today) == 0) newest.push_back(e.observation);
  }

  ParticleSet filtered = prev;
  if (options.filter) {
    FilterReport report;
    filtered = particle_filter_resample(prev, newest, scaler, derive_seed(mcfg.seed, 1), &report);
    result.filter = std::move(report);
  }

  // Kernels sit on the filtered particles but take their width from the
  // unfiltered ones. A filter that keeps a single particle would otherwise
  // pin every later day to the floor bandwidth.
  const MixturePrior prior(filtered.particles, plugin_bandwidth(prev));
  const ChoiceLikelihood likelihood(all, eta, scaler);
  result.likelihood_size = likelihood.size();

  TargetDensity target;
  target.dim = kParamDim;
  target.logp_grad = [&](const Eigen::VectorXd& a, Eigen::VectorXd& grad) {
    const double ll = likelihood.evaluate(a, &grad);
    Eigen::VectorXd prior_grad;
    const double lp = prior.log_density(a, prior_grad);
    grad += prior_grad;
    return ll + lp;
  };

  Rng init_rng = make_rng(derive_seed(mcfg.seed, 2), 0);
  std::uniform_int_distribution<std::size_t> pick(0, filtered.size() - 1);
  const Eigen::VectorXd init =
      filtered.particles.row(static_cast<Eigen::Index>(pick(init_rng))).transpose();

  McmcConfig chain_cfg = mcfg;
  chain_cfg.seed = derive_seed(mcfg.seed, 3);
  const SampleChain chain = nuts_sample(target, init, chain_cfg);

  result.posterior.particles = chain.draws;
  result.posterior.day = today;
  ChainDiagnostics diag = summarize_chain(chain);
  if (result.filter && result.filter->degenerate) {
    diag.warnings.push_back("particle filter kept only " +
                            std::to_string(result.filter->distinct) + " distinct particles");
  }
  result.posterior.diagnostics = std::move(diag);
  return result;
}

}  // namespace plroute
