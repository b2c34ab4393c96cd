#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plroute/model.hpp"
#include "plroute/sampler.hpp"

namespace plroute {

enum class DayType { weekday, weekend };

/// Optional day metadata attached to an observation in files and stores.
struct ObservationMeta {
  std::optional<int> day;
  std::optional<DayType> day_type;

  friend bool operator==(const ObservationMeta&, const ObservationMeta&) = default;
};

struct Dataset {
  std::vector<Observation> observations;
  /// Empty, or one entry per observation.
  std::vector<ObservationMeta> meta;
  std::optional<Scaler> scaler;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
  /// The attached scaler, or one fitted on the observations.
  Scaler scaler_or_fit() const;
};

/// Summary of the chain that produced a particle set.
struct ChainDiagnostics {
  double step_size = 0.0;
  double divergence_rate = 0.0;
  double mean_accept_stat = 0.0;
  double mean_tree_depth = 0.0;
  long long gradient_evaluations = 0;
  std::vector<std::string> warnings;
};

/// Posterior draws of the 14 free coefficients, one per row.
struct ParticleSet {
  Eigen::MatrixXd particles;
  int day = 0;
  std::optional<ChainDiagnostics> diagnostics;

  std::size_t size() const { return static_cast<std::size_t>(particles.rows()); }
  ParameterMatrix particle(std::size_t i) const;
};

struct PosteriorSummary {
  double level = 0.9;
  Eigen::VectorXd mean;
  Eigen::VectorXd ci_low;
  Eigen::VectorXd ci_high;
};

ChainDiagnostics summarize_chain(const SampleChain& chain);

/// Fits the standard-normal-prior model with NUTS, starting at a = 0.
/// Uses data.scaler when present, otherwise fits one on the data.
ParticleSet fit_static(const Dataset& data, const McmcConfig& config);

/// Componentwise mean and equal-tailed interval (linear-interpolated
/// empirical quantiles) at `level`.
PosteriorSummary posterior_summary(const ParticleSet& samples, double level);

ParameterMatrix posterior_mean(const ParticleSet& samples);

/// Per-observation probabilities under a point estimate.
std::vector<std::vector<double>> predict_probabilities(const ParameterMatrix& point,
                                                       const Scaler& scaler,
                                                       std::span<const Observation> data);

/// Fraction of observations whose most probable route (lowest index on
/// ties) equals the recorded choice.
double evaluate_accuracy(const ParameterMatrix& point, const Scaler& scaler,
                         std::span<const Observation> validation);

}  // namespace plroute
