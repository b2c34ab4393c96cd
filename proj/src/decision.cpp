#include "plroute/decision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "plroute/errors.hpp"
#include "plroute/random.hpp"

namespace plroute {

namespace {

using Point = std::array<double, kNumAttributes>;

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumAttributes; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<Point> standardize_locally(std::span<const RouteAttributes> routes) {
  Point mean{};
  for (const auto& r : routes) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) mean[i] += r[i];
  }
  for (double& m : mean) m /= static_cast<double>(routes.size());
  Point sd{};
  for (const auto& r : routes) {
    for (std::size_t i = 0; i < kNumAttributes; ++i) sd[i] += (r[i] - mean[i]) * (r[i] - mean[i]);
  }
  for (double& s : sd) {
    s = std::sqrt(s / static_cast<double>(routes.size()));
    if (s < 1e-9) s = 1.0;
  }
  std::vector<Point> out;
  out.reserve(routes.size());
  for (const auto& r : routes) {
    Point p;
    for (std::size_t i = 0; i < kNumAttributes; ++i) p[i] = (r[i] - mean[i]) / sd[i];
    out.push_back(p);
  }
  return out;
}

std::vector<Point> seed_centers(const std::vector<Point>& pts, std::size_t k, Rng& rng) {
  std::vector<Point> centers;
  std::vector<bool> used(pts.size(), false);
  std::uniform_int_distribution<std::size_t> first(0, pts.size() - 1);
  const std::size_t i0 = first(rng);
  centers.push_back(pts[i0]);
  used[i0] = true;
  std::vector<double> d2(pts.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[i] = std::min(d2[i], squared_distance(pts[i], c));
      total += d2[i];
    }
    std::size_t next = 0;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
      next = pick(rng);
    } else {
      // Every point coincides with a center; take the first unused one.
      next = static_cast<std::size_t>(std::find(used.begin(), used.end(), false) - used.begin());
    }
    centers.push_back(pts[next]);
    used[next] = true;
  }
  return centers;
}

std::size_t nearest(const Point& p, const std::vector<Point>& centers) {
  std::size_t best = 0;
  double best_d = squared_distance(p, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squared_distance(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double logistic_of_difference(double v_take, double v_other) {
  return 1.0 / (1.0 + std::exp(v_other - v_take));
}

}  // namespace

std::vector<int> cluster_routes(std::span<const RouteAttributes> routes, int k,
                                std::uint64_t seed) {
  if (k < 1) throw ValidationError("number of clusters must be positive");
  if (routes.empty()) throw ValidationError("cannot cluster an empty route set");
  const std::size_t n = routes.size();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<int> labels(n);
  if (n <= kk) {
    std::iota(labels.begin(), labels.end(), 0);
    return labels;
  }

  const std::vector<Point> pts = standardize_locally(routes);
  Rng rng = make_rng(seed, 0);
  std::vector<Point> centers = seed_centers(pts, kk, rng);
  std::vector<std::size_t> assign(n, kk);

  for (int iter = 0; iter < 100; ++iter) {
    std::vector<std::size_t> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest(pts[i], centers);

    // Refill empty clusters with the worst-fitting point of a shared cluster.
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t c : next) ++counts[c];
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) continue;
      std::size_t donor = n;
      double worst = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[next[i]] < 2) continue;
        const double d = squared_distance(pts[i], centers[next[i]]);
        if (d > worst) {
          worst = d;
          donor = i;
        }
      }
      --counts[next[donor]];
      next[donor] = c;
      counts[c] = 1;
    }

    const bool stable = next == assign;
    assign = std::move(next);
    for (std::size_t c = 0; c < kk; ++c) {
      Point sum{};
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        for (std::size_t j = 0; j < kNumAttributes; ++j) sum[j] += pts[i][j];
      }
      for (std::size_t j = 0; j < kNumAttributes; ++j) sum[j] /= static_cast<double>(counts[c]);
      centers[c] = sum;
    }
    if (stable) break;
  }

  std::vector<int> relabel(kk, -1);
  int next_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (relabel[assign[i]] < 0) relabel[assign[i]] = next_label++;
    labels[i] = relabel[assign[i]];
  }
  return labels;
}

std::vector<std::size_t> select_routes(const ParameterMatrix& point, const Scaler& scaler,
                                       const FeatureVector& features,
                                       std::span<const RouteAttributes> candidates, int k,
                                       std::uint64_t seed) {
  if (candidates.empty()) throw ValidationError("no candidate routes to select from");
  const WeightVector w = compute_weights(point, features);
  const std::vector<int> labels = cluster_routes(candidates, k, seed);
  const int n_clusters = *std::max_element(labels.begin(), labels.end()) + 1;

  std::vector<std::size_t> best(static_cast<std::size_t>(n_clusters), candidates.size());
  std::vector<double> best_value(static_cast<std::size_t>(n_clusters),
                                 -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const double v = route_value(w, scaler.apply(candidates[i]));
    if (best[c] == candidates.size() || v > best_value[c]) {
      best[c] = i;
      best_value[c] = v;
    }
  }
  return best;
}

void record_cancellation(CancellationPenalties& penalties, const std::string& user_id,
                         double penalty) {
  penalties[user_id] += penalty;
}

CarpoolRanking rank_carpool(const RideOffer& offer, std::span<const CandidateUser> candidates,
                            const ParameterMatrix& point, const Scaler& scaler,
                            const CancellationPenalties& penalties) {
  if (offer.capacity < 0) throw ValidationError("ride capacity must be nonnegative");
  const RouteAttributes ride = scaler.apply(offer.route);

  std::vector<std::pair<RankedCandidate, const CandidateUser*>> tiers[3];
  for (const auto& user : candidates) {
    if (user.walking_time_to_pickup < 0.0) {
      throw ValidationError("walking time of candidate " + user.id + " is negative");
    }
    if (user.vetoes.contains(offer.driver_id) || offer.vetoes.contains(user.id)) continue;
    const WeightVector w = compute_weights(point, user.features);
    RankedCandidate r;
    r.id = user.id;
    const double v_ride = route_value(w, ride);
    r.value = v_ride;
    if (auto it = penalties.find(user.id); it != penalties.end()) r.value += it->second;
    if (user.alternative) {
      r.acceptance_probability =
          logistic_of_difference(v_ride, route_value(w, scaler.apply(*user.alternative)));
    }
    if (user.reduced_mobility) {
      r.tier = PriorityTier::reduced_mobility;
    } else if (user.emission_savings && *user.emission_savings > 0.0) {
      r.tier = PriorityTier::emissions;
    } else {
      r.tier = PriorityTier::preference;
    }
    tiers[static_cast<int>(r.tier) - 1].emplace_back(std::move(r), &user);
  }

  std::stable_sort(tiers[0].begin(), tiers[0].end(), [](const auto& a, const auto& b) {
    return a.second->walking_time_to_pickup < b.second->walking_time_to_pickup;
  });
  std::stable_sort(tiers[1].begin(), tiers[1].end(), [](const auto& a, const auto& b) {
    return *a.second->emission_savings > *b.second->emission_savings;
  });
  std::stable_sort(tiers[2].begin(), tiers[2].end(),
                   [](const auto& a, const auto& b) { return a.first.value > b.first.value; });

  CarpoolRanking out;
  std::vector<const CandidateUser*> seated;
  for (auto& tier : tiers) {
    for (auto& [ranked, user] : tier) {
      const bool conflict = std::any_of(seated.begin(), seated.end(), [&](const CandidateUser* s) {
        return s->vetoes.contains(user->id) || user->vetoes.contains(s->id);
      });
      if (!conflict && static_cast<int>(seated.size()) < offer.capacity) {
        seated.push_back(user);
        out.assigned.push_back(ranked.id);
      } else {
        out.waiting.push_back(ranked.id);
      }
      out.order.push_back(std::move(ranked));
    }
  }
  return out;
}

RawUnitWeights raw_unit_weights(const WeightVector& w, const Scaler& scaler) {
  const auto& sd = scaler.std();
  return {w[0] / sd[0], w[1] / sd[1], w[2] / sd[2]};
}

IncentiveQuote min_incentive(const RawUnitWeights& w, const RouteAttributes& baseline,
                             const RouteAttributes& detour) {
  if (!(w.cost > 1e-12)) throw NumericError("cost weight too small to price an incentive");
  IncentiveQuote q;
  q.incentive = (w.time / w.cost) * (detour.t - baseline.t) - (baseline.c - detour.c);
  q.floored = q.incentive < 0.0;
  return q;
}

double incentive_odds(const RawUnitWeights& w, const RouteAttributes& baseline,
                      const RouteAttributes& detour, double incentive) {
  return std::exp(-w.time * (baseline.t - detour.t) -
                  w.cost * (baseline.c - (detour.c - incentive)));
}

void IncentiveProblem::validate() const {
  if (detours.empty()) throw ValidationError("incentive problem needs at least one detour");
  if (!(i_max > 0.0)) throw ValidationError("i_max must be positive");
  if (!(step > 0.0)) throw ValidationError("incentive step must be positive");
  if (!(kappa >= 0.0)) throw ValidationError("kappa must be nonnegative");
  driver.validate();
  for (const auto& d : detours) {
    for (const auto& p : d.served) p.features.validate();
  }
}

double expected_total_utility(const IncentiveProblem& problem, const ParameterMatrix& point,
                              const Scaler& scaler, double incentive) {
  const WeightVector wd = compute_weights(point, problem.driver);
  const double v_base = route_value(wd, scaler.apply(problem.baseline));
  double total = 0.0;
  for (const auto& detour : problem.detours) {
    RouteAttributes paid = detour.route;
    paid.c -= incentive;
    const double v_driver = route_value(wd, scaler.apply(paid));
    double prob = logistic_of_difference(v_driver, v_base);
    double utility = v_driver;
    const RouteAttributes ride = scaler.apply(detour.route);
    for (const auto& p : detour.served) {
      const WeightVector wp = compute_weights(point, p.features);
      const double v_ride = route_value(wp, ride);
      prob *= logistic_of_difference(v_ride, route_value(wp, scaler.apply(p.alternative)));
      utility += v_ride;
    }
    total += prob * utility;
  }
  return total;
}

IncentiveSolution optimize_incentive(const IncentiveProblem& problem,
                                     const ParameterMatrix& point, const Scaler& scaler) {
  problem.validate();
  const auto n_steps = static_cast<long>(std::floor(problem.i_max / problem.step + 1e-9));
  IncentiveSolution best;
  bool have = false;
  for (long s = 0; s <= n_steps; ++s) {
    const double incentive = static_cast<double>(s) * problem.step;
    const double eu = expected_total_utility(problem, point, scaler, incentive);
    const double objective = eu - problem.kappa * incentive;
    if (!have || objective > best.objective) {
      best = {incentive, eu, objective};
      have = true;
    }
  }
  return best;
}

}  // namespace plroute
