#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "plroute/model.hpp"
#include "plroute/random.hpp"

namespace plroute::testing {

inline ParameterMatrix random_params(Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  ParameterMatrix p;
  for (auto& x : p.a2) x = n(rng);
  for (auto& x : p.a3) x = n(rng);
  return p;
}

inline FeatureVector random_features(Rng& rng) {
  std::uniform_int_distribution<int> g(0, 2), d(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution rain(0.5);
  return FeatureVector::make(static_cast<AgeGroup>(g(rng)), u(rng), rain(rng), u(rng), d(rng));
}

inline RouteAttributes random_route(Rng& rng) {
  std::uniform_real_distribution<double> t(5.0, 80.0), c(0.0, 40.0), f(0.0, 1.0);
  RouteAttributes r;
  r.t = t(rng);
  r.c = c(rng);
  r.tw = r.t * f(rng);
  return r;
}

inline Observation random_observation(Rng& rng, int k = 8) {
  Observation o;
  o.features = random_features(rng);
  for (int i = 0; i < k; ++i) o.offers.push_back(random_route(rng));
  std::uniform_int_distribution<int> c(0, k - 1);
  o.choice = c(rng);
  return o;
}

inline std::vector<Observation> random_observations(Rng& rng, int n, int k = 8) {
  std::vector<Observation> out;
  for (int i = 0; i < n; ++i) out.push_back(random_observation(rng, k));
  return out;
}

/// Softmax weights in long double, written independently of the library.
inline std::array<long double, 3> weights_ld(const ParameterMatrix& p, const FeatureVector& z) {
  long double s2 = 0, s3 = 0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    s2 += static_cast<long double>(p.a2[i]) * z.z[i];
    s3 += static_cast<long double>(p.a3[i]) * z.z[i];
  }
  const long double e1 = 1.0L, e2 = std::exp(s2), e3 = std::exp(s3);
  const long double s = e1 + e2 + e3;
  return {e1 / s, e2 / s, e3 / s};
}

inline std::vector<long double> probabilities_ld(const std::array<long double, 3>& w,
                                                 const OfferSet& standardized) {
  std::vector<long double> v;
  for (const auto& r : standardized) v.push_back(-(w[0] * r.t + w[1] * r.c + w[2] * r.tw));
  long double s = 0;
  for (auto x : v) s += std::exp(x);
  for (auto& x : v) x = std::exp(x) / s;
  return v;
}

}  // namespace plroute::testing
