#pragma once

// Two-level choice model: user/context features select attribute weights
// through a multinomial logit; the weights score routes with an additive
// value; routes compete through a softmax over those values.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace plroute {

inline constexpr std::size_t kNumFeatures = 7;
inline constexpr std::size_t kNumAttributes = 3;
inline constexpr std::size_t kParamDim = 14;
inline constexpr std::size_t kDefaultOfferSize = 8;

enum class AgeGroup { young, active, retired };

/// young < 25 <= active <= 65 < retired.
AgeGroup age_group_for(int age);

struct RawUserContext {
  int age = 0;
  double ses = 0.0;
  bool rain = false;
  double slack = 0.0;
  int disability = 0;
};

/// Encoded context (z11, z12, z13, ses, rain, slack, disability).
struct FeatureVector {
  std::array<double, kNumFeatures> z{};

  static FeatureVector make(AgeGroup group, double ses, bool rain, double slack, int disability);

  double operator[](std::size_t i) const { return z[i]; }
  AgeGroup age_group() const;
  double ses() const { return z[3]; }
  bool rain() const { return z[4] != 0.0; }
  double slack() const { return z[5]; }
  int disability() const { return static_cast<int>(z[6]); }

  /// Throws ValidationError unless the age block is one-hot, rain is 0/1,
  /// disability is 0/1/2 and everything is finite.
  void validate() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

FeatureVector encode_features(const RawUserContext& raw);

/// Total time (min), cost (currency) and walking time (min) of a route.
struct RouteAttributes {
  double t = 0.0;
  double c = 0.0;
  double tw = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? t : (i == 1 ? c : tw); }
  friend bool operator==(const RouteAttributes&, const RouteAttributes&) = default;
};

using OfferSet = std::vector<RouteAttributes>;

struct Observation {
  FeatureVector features;
  OfferSet offers;
  int choice = 0;

  void validate() const;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Free coefficients of the weight model. The time coefficients are pinned
/// to zero, so only the cost (a2) and walking (a3) rows are inferred.
struct ParameterMatrix {
  std::array<double, kNumFeatures> a2{};
  std::array<double, kNumFeatures> a3{};

  /// Layout: a2 followed by a3.
  Eigen::VectorXd flatten() const;
  static ParameterMatrix from_flat(const Eigen::Ref<const Eigen::VectorXd>& flat);

  friend bool operator==(const ParameterMatrix&, const ParameterMatrix&) = default;
};

/// Posterior means reported for the 200,000-observation benchmark fit.
/// Serves as the production-like ground truth for synthetic experiments.
ParameterMatrix reference_parameters();

/// Attribute weights (time, cost, walking). Positive, sum to one.
struct WeightVector {
  std::array<double, kNumAttributes> w{};

  double time() const { return w[0]; }
  double cost() const { return w[1]; }
  double walk() const { return w[2]; }
  double operator[](std::size_t i) const { return w[i]; }
};

/// Per-attribute standardization fitted once on a training corpus.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::array<double, kNumAttributes> mean, std::array<double, kNumAttributes> std);

  bool fitted() const { return fitted_; }
  const std::array<double, kNumAttributes>& mean() const;
  const std::array<double, kNumAttributes>& std() const;

  RouteAttributes apply(const RouteAttributes& raw) const;
  OfferSet apply(const OfferSet& raw) const;
  RouteAttributes invert(const RouteAttributes& standardized) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  void require_fitted() const;

  bool fitted_ = false;
  std::array<double, kNumAttributes> mean_{};
  std::array<double, kNumAttributes> std_{};
};

/// Population mean/std of every route of every observation. Standard
/// deviations below 1e-9 are replaced by 1.
Scaler fit_scaler(std::span<const Observation> data);
OfferSet apply_scaler(const Scaler& scaler, const OfferSet& offers);

WeightVector compute_weights(const ParameterMatrix& params, const FeatureVector& z);

/// v = -(w_t t + w_c c + w_w tw) on standardized attributes.
double route_value(const WeightVector& w, const RouteAttributes& standardized);

std::vector<double> choice_probabilities(const WeightVector& w, const OfferSet& standardized);

/// exp(v(rk)) / exp(v(rj)).
double choice_odds(const WeightVector& w, const RouteAttributes& rk, const RouteAttributes& rj);

double observation_log_likelihood(const ParameterMatrix& params, const Observation& obs,
                                  const Scaler& scaler);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

}  // namespace plroute
