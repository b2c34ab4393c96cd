#include "plroute/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plroute/errors.hpp"

namespace plroute {

namespace {

void validate_probs(const std::array<double, 3>& p, const char* what) {
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw ValidationError(std::string(what) + " must be nonnegative");
    }
    s += x;
  }
  if (!(s > 0.0)) throw ValidationError(std::string(what) + " must not all be zero");
}

bool is_invalid(const RouteAttributes& r) { return r.t < 0.0 || r.c < 0.0; }

}  // namespace

void GeneratorConfig::validate() const {
  if (k < 2) throw ValidationError("offer sets need at least two routes");
  if (!(bounds.time_low > 0.0 && bounds.time_low < bounds.time_high)) {
    throw ValidationError("time bounds must be positive and ordered");
  }
  if (!(bounds.cost_low > 0.0 && bounds.cost_low < bounds.cost_high)) {
    throw ValidationError("cost bounds must be positive and ordered");
  }
  if (!(noise_coeff >= 0.0)) throw ValidationError("noise_coeff must be nonnegative");
  if (max_regen_attempts < 1) throw ValidationError("max_regen_attempts must be positive");
  if (!(rain_prob >= 0.0 && rain_prob <= 1.0)) throw ValidationError("rain_prob must lie in [0, 1]");
  if (reference_size < 1) throw ValidationError("reference_size must be positive");
  validate_probs(age_probs, "age class probabilities");
  validate_probs(disability_probs, "disability class probabilities");
}

RouteAttributes route_from_latent(double u, const OfferBounds& b, double eps_t, double eps_tw,
                                  double eps_c) {
  RouteAttributes r;
  r.t = u * b.max_time + eps_t;
  r.tw = u * b.max_walk + eps_tw;
  r.c = (1.0 - u) * b.max_cost + eps_c;
  r.tw = std::min(std::max(r.tw, 0.0), std::max(r.t, 0.0));
  return r;
}

bool is_strictly_dominated(std::span<const RouteAttributes> routes, std::size_t i) {
  for (std::size_t j = 0; j < routes.size(); ++j) {
    if (j != i && routes[j].c < routes[i].c && routes[j].t < routes[i].t) return true;
  }
  return false;
}

namespace {

// One attempt at a full offer set. Returns false when some route exhausts its
// regeneration budget while still invalid or dominated.
bool try_offer_set(const GeneratorConfig& cfg, Rng& rng, GenerationStats* stats, OfferSet& routes) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OfferBounds b;
  b.max_time = cfg.bounds.time_low + (cfg.bounds.time_high - cfg.bounds.time_low) * unit(rng);
  b.max_walk = b.max_time * unit(rng);
  b.max_cost = cfg.bounds.cost_low + (cfg.bounds.cost_high - cfg.bounds.cost_low) * unit(rng);
  const double sigma = cfg.noise_coeff * b.max_time * b.max_cost;

  auto draw_route = [&]() {
    const double u = unit(rng);
    double eps_t = 0.0;
    double eps_tw = 0.0;
    double eps_c = 0.0;
    if (sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, sigma);
      eps_t = noise(rng);
      eps_tw = noise(rng);
      eps_c = noise(rng);
    }
    return route_from_latent(u, b, eps_t, eps_tw, eps_c);
  };

  const auto k = static_cast<std::size_t>(cfg.k);
  routes.assign(k, RouteAttributes{});
  for (auto& r : routes) r = draw_route();

  std::vector<int> attempts(k, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (!is_invalid(routes[i]) && !is_strictly_dominated(routes, i)) continue;
      if (attempts[i] >= cfg.max_regen_attempts) {
        if (stats != nullptr) ++stats->capped_routes;
        return false;
      }
      routes[i] = draw_route();
      ++attempts[i];
      if (stats != nullptr) ++stats->regenerations;
      changed = true;
      break;
    }
  }
  return true;
}

}  // namespace

OfferSet generate_offer_set(const GeneratorConfig& cfg, Rng& rng, GenerationStats* stats) {
  OfferSet routes;
  for (int restart = 0; restart < kMaxOfferSetRestarts; ++restart) {
    if (try_offer_set(cfg, rng, stats, routes)) return routes;
  }
  throw NumericError("could not draw a dominance-free offer set within the regeneration budget");
}

FeatureVector generate_features(const GeneratorConfig& cfg, Rng& rng) {
  std::discrete_distribution<int> age(cfg.age_probs.begin(), cfg.age_probs.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution rain(cfg.rain_prob);
  std::discrete_distribution<int> disability(cfg.disability_probs.begin(),
                                             cfg.disability_probs.end());
  const auto group = static_cast<AgeGroup>(age(rng));
  const double ses = unit(rng);
  const bool wet = rain(rng);
  const double slack = unit(rng);
  const int dis = disability(rng);
  return FeatureVector::make(group, ses, wet, slack, dis);
}

std::size_t sample_choice(std::span<const double> probabilities, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return i;
  }
  return probabilities.size() - 1;
}

Scaler reference_scaler(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.reference_seed, 0);
  std::vector<Observation> corpus(static_cast<std::size_t>(cfg.reference_size));
  for (auto& obs : corpus) obs.offers = generate_offer_set(cfg, rng);
  return fit_scaler(corpus);
}

Observation generate_observation(const GeneratorConfig& cfg, const Scaler& choice_scaler,
                                 Rng& rng, GenerationStats* stats) {
  Observation obs;
  obs.offers = generate_offer_set(cfg, rng, stats);
  obs.features = generate_features(cfg, rng);
  const std::vector<double> p = choice_probabilities(compute_weights(cfg.params, obs.features),
                                                     choice_scaler.apply(obs.offers));
  obs.choice = static_cast<int>(sample_choice(p, rng));
  return obs;
}

Dataset generate_dataset(const GeneratorConfig& cfg, std::size_t n, GenerationStats* stats) {
  cfg.validate();
  if (n < 1) throw ValidationError("dataset size must be positive");
  const Scaler choice_scaler = reference_scaler(cfg);
  Dataset data;
  data.observations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(cfg.seed, i);
    data.observations.push_back(generate_observation(cfg, choice_scaler, rng, stats));
  }
  data.scaler = fit_scaler(data.observations);
  return data;
}

}  // namespace plroute
