#pragma once

// Nightly sequential update: yesterday's posterior draws are refined with a
// residual particle filter, smoothed into a Gaussian-mixture prior and
// combined with an age-weighted likelihood over a bounded observation store.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plroute/likelihood.hpp"
#include "plroute/random.hpp"
#include "plroute/static_inference.hpp"

namespace plroute {

struct StoredObservation {
  Observation observation;
  int day = 0;
  DayType day_type = DayType::weekday;

  friend bool operator==(const StoredObservation&, const StoredObservation&) = default;
};

/// Dated observations in nondecreasing day order.
class ObservationStore {
 public:
  ObservationStore() = default;

  /// Throws ValidationError if `day` precedes the last stored day.
  void add(Observation observation, int day, DayType day_type = DayType::weekday);

  /// Requires day metadata on every record.
  static ObservationStore from_dataset(const Dataset& data);
  Dataset to_dataset() const;

  const std::vector<StoredObservation>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<int> last_day() const;

 private:
  std::vector<StoredObservation> entries_;
};

/// Days elapsed since the record was processed: today - (day + 1), floored
/// at 0 so a record stamped with the current day counts as the newest batch.
int observation_age(int day_recorded, int today);

struct WeightingConfig {
  double beta = 0.95;
  int a_max = 5;
  int n_max = 100000;
  std::optional<double> lambda_daytype;

  void validate() const;
};

/// (4 n / (d + 4))^(2 / (d + 6)).
double plugin_bandwidth_factor(std::size_t n_sample, std::size_t dim);

/// Diagonal mixture bandwidth: factor times the population variances of the
/// particles, floored at 1e-8.
Eigen::VectorXd plugin_bandwidth(const ParticleSet& particles);

/// Equal-weight mixture of diagonal Gaussians centred on particles.
class MixturePrior final : public PriorDensity {
 public:
  /// `bandwidth` holds the diagonal variances.
  MixturePrior(Eigen::MatrixXd centers, Eigen::VectorXd bandwidth);

  std::size_t dim() const override { return static_cast<std::size_t>(centers_.cols()); }
  double log_density(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const override;

  const Eigen::MatrixXd& centers() const { return centers_; }
  const Eigen::VectorXd& bandwidth() const { return bandwidth_; }

 private:
  Eigen::MatrixXd centers_;
  Eigen::VectorXd bandwidth_;
  Eigen::VectorXd inv_bandwidth_;
  double log_norm_ = 0.0;
};

/// Softmax of log-likelihoods shifted by their median.
std::vector<double> filter_weights(std::span<const double> log_likelihoods);

struct ResamplePlan {
  std::vector<int> deterministic_copies;
  int n_residual = 0;
  /// Indices into the input, deterministic copies first, then residual draws.
  std::vector<std::size_t> indices;
};

/// floor(w_j n) deterministic copies of each j, then the remaining draws
/// with replacement in proportion to the residuals w_j n - floor(w_j n).
ResamplePlan residual_resample(std::span<const double> weights, std::size_t n, Rng& rng);

struct FilterReport {
  std::vector<double> weights;
  std::vector<int> deterministic_copies;
  int n_residual = 0;
  std::size_t distinct = 0;
  bool degenerate = false;
};

/// Particles reweighted by the batch likelihood and resampled to the same
/// size. An empty batch returns the input unchanged.
ParticleSet particle_filter_resample(const ParticleSet& particles,
                                     std::span<const Observation> batch, const Scaler& scaler,
                                     std::uint64_t seed, FilterReport* report = nullptr);

/// beta^age, times lambda or (1 - lambda) by day type when configured.
/// beta^0 is 1 even for beta = 0.
std::vector<double> compute_observation_weights(const ObservationStore& store, int today,
                                                const WeightingConfig& cfg,
                                                std::optional<DayType> target_day_type = {});

/// Drops records older than a_max, then keeps the n_max heaviest (ties go to
/// the more recent day, then to earlier insertion). Order is preserved.
ObservationStore prune_store(const ObservationStore& store, int today,
                             const WeightingConfig& cfg);

struct DynamicOptions {
  bool filter = true;
  std::optional<DayType> target_day_type;
};

struct DynamicStepResult {
  ParticleSet posterior;
  ObservationStore store;  // after pruning
  std::optional<FilterReport> filter;
  std::size_t likelihood_size = 0;
};

/// One nightly update for day `today`.
DynamicStepResult fit_dynamic_step(const ParticleSet& prev, const ObservationStore& store,
                                   int today, const WeightingConfig& wcfg,
                                   const McmcConfig& mcfg, const Scaler& scaler,
                                   const DynamicOptions& options = {});

}  // namespace plroute
