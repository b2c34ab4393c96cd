#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "plroute/decision.hpp"
#include "plroute/errors.hpp"

using namespace plroute;
using namespace plroute::testing;

TEST_CASE("cluster labels: trivial cases") {
  Rng rng = make_rng(1);
  std::vector<RouteAttributes> r;
  for (int i = 0; i < 4; ++i) r.push_back(random_route(rng));
  auto labels = cluster_routes(r, 4, 3);
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
  labels = cluster_routes(r, 1, 3);
  CHECK(labels == std::vector<int>(4, 0));
  CHECK_THROWS_AS(cluster_routes(r, 0, 3), ValidationError);
  CHECK_THROWS_AS(cluster_routes({}, 2, 3), ValidationError);
}

TEST_CASE("cluster labels: identical routes keep every cluster nonempty") {
  const std::vector<RouteAttributes> r(10, RouteAttributes{5, 5, 1});
  const auto labels = cluster_routes(r, 3, 9);
  CHECK(std::set<int>(labels.begin(), labels.end()).size() == 3);
  CHECK(labels == cluster_routes(r, 3, 9));
}

TEST_CASE("two well-separated groups match the optimal 2-partition") {
  Rng rng = make_rng(2);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::uniform_int_distribution<int> size(4, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = size(rng);
    std::vector<RouteAttributes> r;
    std::vector<int> truth;
    for (int i = 0; i < n; ++i) {
      const int g = (i == 0) ? 0 : (i == 1 ? 1 : static_cast<int>(rng() % 2));
      const double base = g == 0 ? 10.0 : 60.0;
      r.push_back({base + jitter(rng), (g == 0 ? 30.0 : 5.0) + jitter(rng), base / 4 + jitter(rng)});
      truth.push_back(g);
    }
    // Brute-force optimal partition by within-cluster sum of squares on the
    // locally standardized attributes.
    std::array<double, 3> mean{}, sd{};
    for (const auto& x : r) for (int a = 0; a < 3; ++a) mean[a] += x[a] / n;
    for (const auto& x : r) for (int a = 0; a < 3; ++a) sd[a] += (x[a] - mean[a]) * (x[a] - mean[a]) / n;
    for (auto& s : sd) s = std::sqrt(s);
    double best = INFINITY;
    unsigned best_mask = 0;
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      double cost = 0.0;
      for (int side = 0; side < 2; ++side) {
        std::array<double, 3> c{};
        int cnt = 0;
        for (int i = 0; i < n; ++i) {
          if (((mask >> i) & 1u) != static_cast<unsigned>(side)) continue;
          for (int a = 0; a < 3; ++a) c[a] += (r[i][a] - mean[a]) / sd[a];
          ++cnt;
        }
        for (auto& v : c) v /= cnt;
        for (int i = 0; i < n; ++i) {
          if (((mask >> i) & 1u) != static_cast<unsigned>(side)) continue;
          for (int a = 0; a < 3; ++a) {
            const double d = (r[i][a] - mean[a]) / sd[a] - c[a];
            cost += d * d;
          }
        }
      }
      if (cost < best) {
        best = cost;
        best_mask = mask;
      }
    }
    const auto labels = cluster_routes(r, 2, static_cast<std::uint64_t>(trial));
    for (int i = 0; i < n; ++i) {
      const bool same_opt = ((best_mask >> i) & 1u) == (best_mask & 1u);
      CHECK((labels[i] == labels[0]) == same_opt);
      CHECK((labels[i] == labels[0]) == (truth[i] == truth[0]));
    }
  }
}

TEST_CASE("select routes picks the within-cluster value maximum") {
  Rng rng = make_rng(3);
  const Scaler s({30, 15, 8}, {15, 8, 6});
  for (int trial = 0; trial < 100; ++trial) {
    const ParameterMatrix p = random_params(rng);
    const FeatureVector z = random_features(rng);
    std::vector<RouteAttributes> c;
    for (int i = 0; i < 20; ++i) c.push_back(random_route(rng));
    const auto picked = select_routes(p, s, z, c, 4, 7);
    const auto labels = cluster_routes(c, 4, 7);
    const WeightVector w = compute_weights(p, z);
    CHECK(picked.size() == 4);
    CHECK(std::set<std::size_t>(picked.begin(), picked.end()).size() == 4);
    for (std::size_t k = 0; k < picked.size(); ++k) {
      CHECK(labels[picked[k]] == static_cast<int>(k));
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (labels[i] != static_cast<int>(k)) continue;
        CHECK(route_value(w, s.apply(c[i])) <= route_value(w, s.apply(c[picked[k]])));
      }
    }
  }
}

TEST_CASE("select routes: time-only weights pick the fastest route per cluster") {
  ParameterMatrix p;
  for (auto& x : p.a2) x = -40.0;  // drive cost and walk weights to zero
  for (auto& x : p.a3) x = -40.0;
  const FeatureVector z = FeatureVector::make(AgeGroup::active, 1, true, 1, 2);
  Rng rng = make_rng(4);
  std::vector<RouteAttributes> c;
  for (int i = 0; i < 20; ++i) c.push_back(random_route(rng));
  const Scaler s({30, 15, 8}, {15, 8, 6});
  const auto picked = select_routes(p, s, z, c, 4, 1);
  const auto labels = cluster_routes(c, 4, 1);
  for (std::size_t k = 0; k < picked.size(); ++k) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (labels[i] == static_cast<int>(k)) CHECK(c[picked[k]].t <= c[i].t);
    }
  }

  // Identical candidates: distinct indices, deterministic.
  const std::vector<RouteAttributes> same(6, RouteAttributes{10, 10, 2});
  const auto a = select_routes(p, s, z, same, 3, 5);
  CHECK(a == select_routes(p, s, z, same, 3, 5));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 3);
}

namespace {

CandidateUser user(std::string id, bool reduced, double walk, std::optional<double> savings,
                   const FeatureVector& z) {
  CandidateUser u;
  u.id = std::move(id);
  u.reduced_mobility = reduced;
  u.walking_time_to_pickup = walk;
  u.emission_savings = savings;
  u.features = z;
  return u;
}

}  // namespace

TEST_CASE("car-pool ranking tiers") {
  const Scaler s({30, 15, 8}, {15, 8, 6});
  const ParameterMatrix p = reference_parameters();
  Rng rng = make_rng(5);
  RideOffer ride{"driver", {25, 6, 3}, 3, {}};

  std::vector<CandidateUser> c;
  for (int i = 0; i < 9; ++i) c.push_back(user("u" + std::to_string(i), false, 3, {}, random_features(rng)));
  c.push_back(user("rm", true, 8, {}, random_features(rng)));
  auto r = rank_carpool(ride, c, p, s);
  CHECK(r.order.front().id == "rm");
  CHECK(r.order.front().tier == PriorityTier::reduced_mobility);

  std::vector<CandidateUser> t1{user("a", true, 5, {}, c[0].features),
                                user("b", true, 2, {}, c[1].features),
                                user("c", true, 9, {}, c[2].features)};
  r = rank_carpool(ride, t1, p, s);
  CHECK(r.order[0].id == "b");
  CHECK(r.order[1].id == "a");
  CHECK(r.order[2].id == "c");

  // Tier 3 by descending value, recomputed independently.
  r = rank_carpool(ride, std::span(c).first(9), p, s);
  for (std::size_t i = 1; i < r.order.size(); ++i) {
    CHECK(r.order[i - 1].value >= r.order[i].value);
  }
  for (const auto& e : r.order) {
    const auto it = std::find_if(c.begin(), c.end(), [&](const auto& u) { return u.id == e.id; });
    CHECK(e.value == route_value(compute_weights(p, it->features), s.apply(ride.route)));
  }
  CHECK(r.assigned.size() == 3);
  CHECK(r.waiting.size() == 6);
}

TEST_CASE("car-pool vetoes, capacity and cancellations") {
  const Scaler s({30, 15, 8}, {15, 8, 6});
  const ParameterMatrix p = reference_parameters();
  const FeatureVector z = FeatureVector::make(AgeGroup::young, 0.5, false, 0.5, 0);
  RideOffer ride{"d", {25, 6, 3}, 2, {"banned"}};
  std::vector<CandidateUser> c{user("banned", true, 1, {}, z), user("x", false, 1, 2.0, z),
                               user("y", false, 1, 1.0, z), user("w", false, 1, {}, z)};
  c[2].vetoes = {"x"};  // y refuses to ride with x
  c[3].vetoes = {"d"};  // w refuses this driver
  c[1].alternative = RouteAttributes{25, 6, 3};
  const auto r = rank_carpool(ride, c, p, s);
  REQUIRE(r.order.size() == 2);
  CHECK(r.order[0].id == "x");
  CHECK(r.order[0].tier == PriorityTier::emissions);
  CHECK(*r.order[0].acceptance_probability == doctest::Approx(0.5));
  CHECK(r.assigned == std::vector<std::string>{"x"});
  CHECK(r.waiting == std::vector<std::string>{"y"});

  // Alg. 4's loop: a seated rider cancels, is penalized and drops behind an
  // otherwise equal rider.
  std::vector<CandidateUser> pair{user("a", false, 1, {}, z), user("b", false, 1, {}, z)};
  RideOffer one{"d", {25, 6, 3}, 1, {}};
  auto first = rank_carpool(one, pair, p, s);
  CHECK(first.assigned == std::vector<std::string>{"a"});
  CancellationPenalties penalties;
  record_cancellation(penalties, "a");
  CHECK(penalties["a"] == kDefaultCancellationPenalty);
  auto second = rank_carpool(one, pair, p, s, penalties);
  CHECK(second.assigned == std::vector<std::string>{"b"});
  CHECK(second.order[1].value == doctest::Approx(first.order[0].value - 0.5));

  RideOffer bad{"d", {1, 1, 1}, -1, {}};
  CHECK_THROWS_AS(rank_carpool(bad, pair, p, s), ValidationError);
}

TEST_CASE("minimum incentive") {
  const RouteAttributes l1{20, 5, 2};
  RouteAttributes l2{30, 5, 2};
  auto q = min_incentive({1.0, 1.0, 0.0}, l1, l2);
  CHECK(q.incentive == doctest::Approx(10.0));
  CHECK_FALSE(q.floored);
  q = min_incentive({0.6, 0.3, 0.0}, l1, l2);
  CHECK(q.incentive == doctest::Approx(20.0));

  // Detour already better: negative incentive, floored to zero.
  l2 = {15, 3, 2};
  q = min_incentive({0.6, 0.3, 0.0}, l1, l2);
  CHECK(q.floored);
  CHECK(q.floored_incentive() == 0.0);
  CHECK_THROWS_AS(min_incentive({1.0, 0.0, 0.0}, l1, l2), NumericError);

  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const RawUnitWeights w{u(rng), u(rng), u(rng)};
    const RouteAttributes a = random_route(rng), b = random_route(rng);
    const auto qq = min_incentive(w, a, b);
    CHECK(std::abs(incentive_odds(w, a, b, qq.incentive) - 1.0) < 1e-10);
  }

  const WeightVector wv{{0.5, 0.3, 0.2}};
  const Scaler s({0, 0, 0}, {10, 3, 4});
  const RawUnitWeights raw = raw_unit_weights(wv, s);
  CHECK(raw.time == doctest::Approx(0.05));
  CHECK(raw.cost == doctest::Approx(0.1));
  CHECK(raw.walk == doctest::Approx(0.05));
}

namespace {

IncentiveProblem small_problem(Rng& rng, int routes, int passengers) {
  IncentiveProblem pr;
  pr.driver = random_features(rng);
  pr.baseline = random_route(rng);
  for (int r = 0; r < routes; ++r) {
    DetourOption d{random_route(rng), {}};
    for (int j = 0; j < passengers; ++j) d.served.push_back({random_features(rng), random_route(rng)});
    pr.detours.push_back(d);
  }
  pr.i_max = 1.0;
  pr.step = 0.1;
  return pr;
}

}  // namespace

TEST_CASE("incentive optimization equals grid enumeration") {
  Rng rng = make_rng(7);
  const Scaler s({30, 15, 8}, {15, 8, 6});
  std::uniform_real_distribution<double> kappa(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    IncentiveProblem pr = small_problem(rng, 2, 2);
    pr.kappa = kappa(rng);
    const ParameterMatrix p = random_params(rng);
    const IncentiveSolution sol = optimize_incentive(pr, p, s);
    double best = -INFINITY, best_i = -1;
    for (int k = 0; k <= 10; ++k) {
      const double inc = k * 0.1;
      // Independent evaluation of the expected utility.
      const WeightVector wd = compute_weights(p, pr.driver);
      const double vb = route_value(wd, s.apply(pr.baseline));
      double eu = 0.0;
      for (const auto& d : pr.detours) {
        RouteAttributes paid = d.route;
        paid.c -= inc;
        const double vd = route_value(wd, s.apply(paid));
        double prob = std::exp(vd) / (std::exp(vd) + std::exp(vb));
        double util = vd;
        for (const auto& ps : d.served) {
          const WeightVector wp = compute_weights(p, ps.features);
          const double vr = route_value(wp, s.apply(d.route));
          const double va = route_value(wp, s.apply(ps.alternative));
          prob *= std::exp(vr) / (std::exp(vr) + std::exp(va));
          util += vr;
        }
        eu += prob * util;
      }
      const double obj = eu - pr.kappa * inc;
      if (obj > best + 1e-12) {
        best = obj;
        best_i = inc;
      }
    }
    CHECK(sol.incentive == doctest::Approx(best_i).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("incentive optimization edge cases") {
  const Scaler s({30, 15, 8}, {15, 8, 6});
  const ParameterMatrix p = reference_parameters();
  IncentiveProblem pr;
  pr.driver = FeatureVector::make(AgeGroup::active, 0.5, false, 0.5, 0);
  pr.baseline = {60, 30, 20};
  // Detour better than the baseline and above-average in every attribute:
  // positive utilities, so kappa > 0 with a small acceptance gain favors 0.
  pr.detours = {{{5, 2, 1}, {}}};
  pr.kappa = 5.0;
  CHECK(optimize_incentive(pr, p, s).incentive == 0.0);

  // kappa = 0 and positive utility: the objective grows with I.
  pr.kappa = 0.0;
  pr.i_max = 3.0;
  CHECK(optimize_incentive(pr, p, s).incentive == doctest::Approx(3.0));

  pr.detours.clear();
  CHECK_THROWS_AS(optimize_incentive(pr, p, s), ValidationError);
  pr.detours = {{{5, 2, 1}, {}}};
  pr.step = 0.0;
  CHECK_THROWS_AS(pr.validate(), ValidationError);
}
