#include "plroute/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plroute/errors.hpp"

namespace plroute {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw ValidationError(std::string(what) + " must be finite");
  }
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

AgeGroup age_group_for(int age) {
  if (age < 0) throw ValidationError("age must be nonnegative, got " + std::to_string(age));
  if (age < 25) return AgeGroup::young;
  if (age <= 65) return AgeGroup::active;
  return AgeGroup::retired;
}

FeatureVector FeatureVector::make(AgeGroup group, double ses, bool rain, double slack,
                                  int disability) {
  FeatureVector f;
  f.z[static_cast<std::size_t>(group)] = 1.0;
  f.z[3] = ses;
  f.z[4] = rain ? 1.0 : 0.0;
  f.z[5] = slack;
  f.z[6] = static_cast<double>(disability);
  f.validate();
  return f;
}

AgeGroup FeatureVector::age_group() const {
  if (z[0] == 1.0) return AgeGroup::young;
  if (z[1] == 1.0) return AgeGroup::active;
  return AgeGroup::retired;
}

void FeatureVector::validate() const {
  for (double v : z) require_finite(v, "feature value");
  int ones = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (z[i] == 1.0) {
      ++ones;
    } else if (z[i] != 0.0) {
      throw ValidationError("age block must be one-hot");
    }
  }
  if (ones != 1) throw ValidationError("age block must contain exactly one 1");
  if (z[4] != 0.0 && z[4] != 1.0) throw ValidationError("rain indicator must be 0 or 1");
  if (z[6] != 0.0 && z[6] != 1.0 && z[6] != 2.0) {
    throw ValidationError("disability must be 0, 1 or 2");
  }
}

FeatureVector encode_features(const RawUserContext& raw) {
  if (raw.disability < 0 || raw.disability > 2) {
    throw ValidationError("disability must be 0, 1 or 2, got " + std::to_string(raw.disability));
  }
  return FeatureVector::make(age_group_for(raw.age), raw.ses, raw.rain, raw.slack,
                             raw.disability);
}

void Observation::validate() const {
  features.validate();
  if (offers.size() < 2) throw ValidationError("offer set needs at least two routes");
  for (const auto& r : offers) {
    require_finite(r.t, "route time");
    require_finite(r.c, "route cost");
    require_finite(r.tw, "route walking time");
  }
  if (choice < 0 || static_cast<std::size_t>(choice) >= offers.size()) {
    throw ValidationError("choice " + std::to_string(choice) + " out of range for " +
                          std::to_string(offers.size()) + " routes");
  }
}

Eigen::VectorXd ParameterMatrix::flatten() const {
  Eigen::VectorXd flat(kParamDim);
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    flat[static_cast<Eigen::Index>(k)] = a2[k];
    flat[static_cast<Eigen::Index>(kNumFeatures + k)] = a3[k];
  }
  return flat;
}

ParameterMatrix ParameterMatrix::from_flat(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != static_cast<Eigen::Index>(kParamDim)) {
    throw ValidationError("parameter vector must have 14 entries, got " +
                          std::to_string(flat.size()));
  }
  ParameterMatrix p;
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    p.a2[k] = flat[static_cast<Eigen::Index>(k)];
    p.a3[k] = flat[static_cast<Eigen::Index>(kNumFeatures + k)];
  }
  return p;
}

ParameterMatrix reference_parameters() {
  ParameterMatrix p;
  p.a2 = {1.402, 0.135, 0.446, -2.315, -1.155, -3.263, -0.716};
  p.a3 = {1.110, -1.243, 1.843, 1.018, 2.934, 0.884, 3.281};
  return p;
}

Scaler::Scaler(std::array<double, kNumAttributes> mean, std::array<double, kNumAttributes> std)
    : fitted_(true), mean_(mean), std_(std) {
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    require_finite(mean_[i], "scaler mean");
    if (!(std_[i] > 0.0) || !std::isfinite(std_[i])) {
      throw ValidationError("scaler std entries must be positive and finite");
    }
  }
}

void Scaler::require_fitted() const {
  if (!fitted_) throw StateError("scaler has not been fitted");
}

const std::array<double, kNumAttributes>& Scaler::mean() const {
  require_fitted();
  return mean_;
}

const std::array<double, kNumAttributes>& Scaler::std() const {
  require_fitted();
  return std_;
}

RouteAttributes Scaler::apply(const RouteAttributes& raw) const {
  require_fitted();
  return {(raw.t - mean_[0]) / std_[0], (raw.c - mean_[1]) / std_[1],
          (raw.tw - mean_[2]) / std_[2]};
}

OfferSet Scaler::apply(const OfferSet& raw) const {
  OfferSet out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(apply(r));
  return out;
}

RouteAttributes Scaler::invert(const RouteAttributes& s) const {
  require_fitted();
  return {s.t * std_[0] + mean_[0], s.c * std_[1] + mean_[1], s.tw * std_[2] + mean_[2]};
}

Scaler fit_scaler(std::span<const Observation> data) {
  if (data.empty()) throw ValidationError("cannot fit a scaler on an empty dataset");
  std::array<double, kNumAttributes> sum{};
  std::size_t count = 0;
  for (const auto& obs : data) {
    for (const auto& r : obs.offers) {
      for (std::size_t i = 0; i < kNumAttributes; ++i) sum[i] += r[i];
      ++count;
    }
  }
  if (count == 0) throw ValidationError("cannot fit a scaler without routes");
  std::array<double, kNumAttributes> mean{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) mean[i] = sum[i] / static_cast<double>(count);
  // Second pass around the mean keeps the variance free of cancellation.
  std::array<double, kNumAttributes> ss{};
  for (const auto& obs : data) {
    for (const auto& r : obs.offers) {
      for (std::size_t i = 0; i < kNumAttributes; ++i) {
        const double d = r[i] - mean[i];
        ss[i] += d * d;
      }
    }
  }
  std::array<double, kNumAttributes> sd{};
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    sd[i] = std::sqrt(ss[i] / static_cast<double>(count));
    if (sd[i] < 1e-9) sd[i] = 1.0;
  }
  return Scaler(mean, sd);
}

OfferSet apply_scaler(const Scaler& scaler, const OfferSet& offers) { return scaler.apply(offers); }

WeightVector compute_weights(const ParameterMatrix& params, const FeatureVector& z) {
  double s2 = 0.0;
  double s3 = 0.0;
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    s2 += params.a2[k] * z[k];
    s3 += params.a3[k] * z[k];
  }
  if (!std::isfinite(s2) || !std::isfinite(s3)) {
    throw NumericError("non-finite logit in weight model");
  }
  const double m = std::max({0.0, s2, s3});
  const double e1 = std::exp(-m);
  const double e2 = std::exp(s2 - m);
  const double e3 = std::exp(s3 - m);
  const double total = e1 + e2 + e3;
  return WeightVector{{e1 / total, e2 / total, e3 / total}};
}

double route_value(const WeightVector& w, const RouteAttributes& r) {
  return -(w[0] * r.t + w[1] * r.c + w[2] * r.tw);
}

std::vector<double> choice_probabilities(const WeightVector& w, const OfferSet& offers) {
  if (offers.size() < 2) throw ValidationError("offer set needs at least two routes");
  std::vector<double> v(offers.size());
  for (std::size_t l = 0; l < offers.size(); ++l) v[l] = route_value(w, offers[l]);
  const double lse = log_sum_exp(v);
  for (double& x : v) x = std::exp(x - lse);
  return v;
}

double choice_odds(const WeightVector& w, const RouteAttributes& rk, const RouteAttributes& rj) {
  double log_odds = 0.0;
  for (std::size_t i = 0; i < kNumAttributes; ++i) log_odds -= w[i] * (rk[i] - rj[i]);
  return std::exp(log_odds);
}

double observation_log_likelihood(const ParameterMatrix& params, const Observation& obs,
                                  const Scaler& scaler) {
  if (!scaler.fitted()) throw StateError("scaler has not been fitted");
  obs.validate();
  const WeightVector w = compute_weights(params, obs.features);
  std::vector<double> v(obs.offers.size());
  for (std::size_t l = 0; l < obs.offers.size(); ++l) {
    v[l] = route_value(w, scaler.apply(obs.offers[l]));
  }
  const double ll = v[static_cast<std::size_t>(obs.choice)] - log_sum_exp(v);
  if (!std::isfinite(ll)) throw NumericError("non-finite log-likelihood");
  return std::min(ll, 0.0);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace plroute
