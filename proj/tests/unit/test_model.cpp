#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "plroute/errors.hpp"
#include "plroute/model.hpp"

using namespace plroute;
using namespace plroute::testing;

TEST_CASE("feature encoding") {
  auto z = encode_features({30, 0.5, true, 0.2, 0});
  CHECK(z.z == std::array<double, 7>{0, 1, 0, 0.5, 1, 0.2, 0});
  z = encode_features({70, 0.1, false, 1.0, 2});
  CHECK(z.z == std::array<double, 7>{0, 0, 1, 0.1, 0, 1.0, 2});
  z = encode_features({25, 0, false, 0, 0});
  CHECK(z.z == std::array<double, 7>{0, 1, 0, 0, 0, 0, 0});
  CHECK(age_group_for(24) == AgeGroup::young);
  CHECK(age_group_for(65) == AgeGroup::active);
  CHECK(age_group_for(66) == AgeGroup::retired);
  CHECK_THROWS_AS(age_group_for(-1), ValidationError);
  CHECK_THROWS_AS(encode_features({30, 0.5, true, 0.2, 3}), ValidationError);

  FeatureVector bad = z;
  bad.z[0] = 1.0;  // two age groups set
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = z;
  bad.z[4] = 0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("attribute weights") {
  Rng rng = make_rng(11);
  const FeatureVector z = random_features(rng);
  WeightVector w = compute_weights(ParameterMatrix{}, z);
  for (double x : w.w) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));

  // s2 = ln 2 through the ses column alone.
  ParameterMatrix p;
  const FeatureVector z1 = FeatureVector::make(AgeGroup::active, 1.0, false, 0.0, 0);
  p.a2[3] = std::log(2.0);
  w = compute_weights(p, z1);
  CHECK(w.time() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(w.cost() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w.walk() == doctest::Approx(0.25).epsilon(1e-15));

  const FeatureVector zt = FeatureVector::make(AgeGroup::active, 0.5, true, 0.5, 0);
  const auto ref = weights_ld(reference_parameters(), zt);
  w = compute_weights(reference_parameters(), zt);
  for (int i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(static_cast<double>(ref[i])).epsilon(1e-14));

  for (int trial = 0; trial < 200; ++trial) {
    const ParameterMatrix q = random_params(rng, 30.0);
    const FeatureVector zz = random_features(rng);
    const WeightVector ww = compute_weights(q, zz);
    const auto oracle = weights_ld(q, zz);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      CHECK(ww[i] >= 0.0);
      CHECK(std::abs(ww[i] - static_cast<double>(oracle[i])) < 1e-13);
      s += ww[i];
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("route values, probabilities and odds") {
  const WeightVector third{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
  CHECK(route_value(third, {3, 3, 3}) == doctest::Approx(-3.0));
  CHECK(route_value(WeightVector{{1, 0, 0}}, {4.5, 2, 1}) == -4.5);
  CHECK(route_value(WeightVector{{0.2, 0.5, 0.3}}, {1.0, -0.5, 2.0}) == doctest::Approx(-0.55));

  const OfferSet same(8, RouteAttributes{1.0, 2.0, 0.5});
  for (double p : choice_probabilities(third, same)) CHECK(p == doctest::Approx(0.125));

  // Values 0 and ln 3 under w = (1, 0, 0).
  const OfferSet two{{0.0, 0, 0}, {-std::log(3.0), 0, 0}};
  const auto p2 = choice_probabilities(WeightVector{{1, 0, 0}}, two);
  CHECK(p2[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p2[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS_AS(choice_probabilities(third, OfferSet{{1, 1, 1}}), ValidationError);

  CHECK(choice_odds(third, {1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(choice_odds(WeightVector{{0.5, 0.5, 0}}, {3, 1, 1}, {1, 1, 1}) ==
        doctest::Approx(0.367879441171).epsilon(1e-11));

  Rng rng = make_rng(5);
  for (int i = 0; i < 100; ++i) {
    const WeightVector w = compute_weights(random_params(rng), random_features(rng));
    const RouteAttributes a = random_route(rng), b = random_route(rng);
    CHECK(choice_odds(w, a, b) * choice_odds(w, b, a) == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Extended-precision oracle on generated offers.
  for (int i = 0; i < 100; ++i) {
    Observation o = random_observation(rng);
    std::vector<Observation> one{o};
    const Scaler s = fit_scaler(one);
    const OfferSet st = s.apply(o.offers);
    const auto p = choice_probabilities(third, st);
    const auto q = probabilities_ld({1.0L / 3, 1.0L / 3, 1.0L / 3}, st);
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(std::abs(p[k] - static_cast<double>(q[k])) < 1e-15);
    }
  }
}

TEST_CASE("scaler") {
  Observation o;
  o.features = FeatureVector::make(AgeGroup::young, 0, false, 0, 0);
  o.offers = {{0, 5, 1}, {2, 5, 3}};
  std::vector<Observation> d{o};
  const Scaler s = fit_scaler(d);
  CHECK(s.mean()[0] == 1.0);
  CHECK(s.std()[0] == 1.0);
  CHECK(s.mean()[1] == 5.0);
  CHECK(s.std()[1] == 1.0);  // constant column floored

  Rng rng = make_rng(3);
  const auto data = random_observations(rng, 50);
  const Scaler fitted = fit_scaler(data);
  for (const auto& obs : data) {
    for (const auto& r : obs.offers) {
      const auto back = fitted.invert(fitted.apply(r));
      CHECK(std::abs(back.t - r.t) < 1e-12);
      CHECK(std::abs(back.c - r.c) < 1e-12);
      CHECK(std::abs(back.tw - r.tw) < 1e-12);
    }
  }
  CHECK_THROWS_AS(fit_scaler(std::span<const Observation>{}), ValidationError);
  CHECK_THROWS_AS(Scaler().mean(), StateError);
  CHECK_THROWS_AS(Scaler({0, 0, 0}, {1, 0, 1}), ValidationError);
}

TEST_CASE("observation log-likelihood") {
  Observation o;
  o.features = FeatureVector::make(AgeGroup::retired, 0.3, true, 0.1, 1);
  o.offers = OfferSet(8, RouteAttributes{10, 5, 2});
  o.choice = 3;
  const Scaler unit({0, 0, 0}, {1, 1, 1});
  CHECK(observation_log_likelihood(reference_parameters(), o, unit) ==
        doctest::Approx(-2.0794415416798).epsilon(1e-12));

  Observation two;
  two.features = o.features;
  two.offers = {{0, 0, 0}, {-std::log(3.0), 0, 0}};
  two.choice = 1;
  // With a2 = a3 = 0 the time weight is 1/3; scale time by 3 to get values (0, ln 3).
  two.offers[1].t *= 3.0;
  CHECK(observation_log_likelihood(ParameterMatrix{}, two, unit) ==
        doctest::Approx(-0.287682072452).epsilon(1e-11));
  CHECK_THROWS_AS(observation_log_likelihood(ParameterMatrix{}, two, Scaler{}), StateError);

  Rng rng = make_rng(8);
  for (int i = 0; i < 100; ++i) {
    const ParameterMatrix p = random_params(rng, 2.0);
    const Observation obs = random_observation(rng);
    std::vector<Observation> one{obs};
    const Scaler s = fit_scaler(one);
    const auto q = probabilities_ld(weights_ld(p, obs.features), s.apply(obs.offers));
    const double oracle = static_cast<double>(std::log(q[static_cast<std::size_t>(obs.choice)]));
    CHECK(observation_log_likelihood(p, obs, s) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("observation validation and argmax") {
  Observation o;
  o.features = FeatureVector::make(AgeGroup::young, 0, false, 0, 0);
  o.offers = {{1, 1, 1}};
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o.offers.push_back({2, 2, 2});
  o.choice = 2;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  o.choice = 1;
  CHECK_NOTHROW(o.validate());
  o.offers[0].t = std::nan("");
  CHECK_THROWS_AS(o.validate(), ValidationError);

  const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  CHECK(argmax(v) == 1);
}

TEST_CASE("parameter layout") {
  const ParameterMatrix p = reference_parameters();
  CHECK(p.a2[5] == -3.263);
  CHECK(p.a3[6] == 3.281);
  const Eigen::VectorXd f = p.flatten();
  CHECK(f.size() == 14);
  CHECK(f[0] == p.a2[0]);
  CHECK(f[7] == p.a3[0]);
  CHECK(ParameterMatrix::from_flat(f) == p);
}
