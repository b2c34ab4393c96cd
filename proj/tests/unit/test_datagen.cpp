#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "plroute/datagen.hpp"
#include "plroute/errors.hpp"

using namespace plroute;
using namespace plroute::testing;

TEST_CASE("latent route endpoints") {
  const OfferBounds b{50, 20, 30};
  RouteAttributes r = route_from_latent(0.0, b, 0, 0, 0);
  CHECK(r == RouteAttributes{0, 30, 0});
  r = route_from_latent(1.0, b, 0, 0, 0);
  CHECK(r == RouteAttributes{50, 0, 20});
  r = route_from_latent(0.5, b, 0, 30, 0);  // walking noise clamped to t
  CHECK(r.tw == r.t);
  r = route_from_latent(0.5, b, 0, -30, 0);
  CHECK(r.tw == 0.0);
}

TEST_CASE("dominance") {
  const std::vector<RouteAttributes> r{{10, 10, 1}, {5, 5, 1}, {5, 12, 1}};
  CHECK(is_strictly_dominated(r, 0));
  CHECK_FALSE(is_strictly_dominated(r, 1));
  CHECK_FALSE(is_strictly_dominated(r, 2));  // equal time is not strict
}

TEST_CASE("offer sets satisfy the invariants") {
  GeneratorConfig cfg;
  cfg.params = reference_parameters();
  Rng rng = make_rng(1);
  GenerationStats stats;
  for (int i = 0; i < 2000; ++i) {
    const OfferSet o = generate_offer_set(cfg, rng, &stats);
    REQUIRE(o.size() == 8);
    for (std::size_t k = 0; k < o.size(); ++k) {
      CHECK(o[k].t >= 0.0);
      CHECK(o[k].c >= 0.0);
      CHECK(o[k].tw >= 0.0);
      CHECK(o[k].tw <= o[k].t);
      CHECK_FALSE(is_strictly_dominated(o, k));
    }
  }
  CHECK(stats.regenerations > 0);
}

TEST_CASE("generation is deterministic and well-formed") {
  GeneratorConfig cfg;
  cfg.params = reference_parameters();
  cfg.seed = 42;
  cfg.reference_size = 500;
  const Dataset a = generate_dataset(cfg, 50);
  const Dataset b = generate_dataset(cfg, 50);
  CHECK(a.observations == b.observations);
  REQUIRE(a.scaler.has_value());
  CHECK(*a.scaler == *b.scaler);
  for (const auto& o : a.observations) CHECK_NOTHROW(o.validate());
  const Dataset one = generate_dataset(cfg, 1);
  CHECK(one.observations[0] == a.observations[0]);  // stream 0 is shared
  cfg.seed = 43;
  CHECK(generate_dataset(cfg, 50).observations != a.observations);
  CHECK_THROWS_AS(generate_dataset(cfg, 0), ValidationError);
}

TEST_CASE("reference scaler ignores params and seed") {
  GeneratorConfig a;
  a.reference_size = 300;
  GeneratorConfig b = a;
  b.params = reference_parameters();
  b.seed = 999;
  CHECK(reference_scaler(a) == reference_scaler(b));
}

TEST_CASE("config validation") {
  GeneratorConfig cfg;
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = GeneratorConfig{};
  cfg.age_probs = {0, 0, 0};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = GeneratorConfig{};
  cfg.bounds.time_low = 90;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("class probabilities are configurable") {
  GeneratorConfig cfg;
  cfg.age_probs = {0, 0, 1};
  cfg.disability_probs = {0, 1, 0};
  cfg.rain_prob = 1.0;
  Rng rng = make_rng(3);
  for (int i = 0; i < 100; ++i) {
    const FeatureVector z = generate_features(cfg, rng);
    CHECK(z.age_group() == AgeGroup::retired);
    CHECK(z.disability() == 1);
    CHECK(z.rain());
  }
}

TEST_CASE("choice sampling follows the probabilities") {
  Rng rng = make_rng(4);
  const std::vector<double> p{0.1, 0.6, 0.3};
  std::array<int, 3> counts{};
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[sample_choice(p, rng)];
  for (int k = 0; k < 3; ++k) {
    const double sd = std::sqrt(n * p[k] * (1 - p[k]));
    CHECK(std::abs(counts[k] - n * p[k]) < 4 * sd);
  }
}
