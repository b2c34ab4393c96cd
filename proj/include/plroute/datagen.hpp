#pragma once

// Synthetic interactions: correlated, dominance-free offer sets, independent
// user features and a choice drawn from the model's own probabilities.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "plroute/model.hpp"
#include "plroute/random.hpp"
#include "plroute/static_inference.hpp"

namespace plroute {

struct GeneratorBounds {
  double time_low = 10.0;
  double time_high = 80.0;
  double cost_low = 10.0;
  double cost_high = 40.0;
};

struct GeneratorConfig {
  ParameterMatrix params;
  int k = static_cast<int>(kDefaultOfferSize);
  std::uint64_t seed = 0;
  GeneratorBounds bounds;
  double noise_coeff = 0.002;
  int max_regen_attempts = 50;

  std::array<double, 3> age_probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double rain_prob = 0.5;
  std::array<double, 3> disability_probs{1.0 / 3, 1.0 / 3, 1.0 / 3};

  /// Offer sets in the pre-pass that fixes the standardization used while
  /// sampling choices, and the seed of that pre-pass. The pre-pass does not
  /// depend on `params` or `seed`, so datasets drawn under different ground
  /// truths share one scale.
  int reference_size = 10000;
  std::uint64_t reference_seed = 0x5eed'0ffe'75e7ULL;

  void validate() const;
};

/// Per-offer-set scale draws.
struct OfferBounds {
  double max_time = 0.0;
  double max_walk = 0.0;
  double max_cost = 0.0;
};

/// Attributes from a latent position u in [0, 1] plus noise, with the
/// walking time clamped into [0, t].
RouteAttributes route_from_latent(double u, const OfferBounds& b, double eps_t, double eps_tw,
                                  double eps_c);

/// True when some other route is strictly cheaper and strictly faster.
bool is_strictly_dominated(std::span<const RouteAttributes> routes, std::size_t i);

struct GenerationStats {
  long long regenerations = 0;
  /// Routes that exhausted max_regen_attempts; each one discards its offer
  /// set and starts a fresh one.
  long long capped_routes = 0;
};

/// Fresh offer sets tried before generation gives up with a NumericError.
inline constexpr int kMaxOfferSetRestarts = 1000;

/// Draws until every route is valid and undominated. A route that is still
/// rejected after max_regen_attempts redraws restarts the whole set.
OfferSet generate_offer_set(const GeneratorConfig& cfg, Rng& rng,
                            GenerationStats* stats = nullptr);

FeatureVector generate_features(const GeneratorConfig& cfg, Rng& rng);

/// Inverse-CDF draw from a probability vector.
std::size_t sample_choice(std::span<const double> probabilities, Rng& rng);

/// Standardization used when sampling choices (see GeneratorConfig).
Scaler reference_scaler(const GeneratorConfig& cfg);

Observation generate_observation(const GeneratorConfig& cfg, const Scaler& choice_scaler,
                                 Rng& rng, GenerationStats* stats = nullptr);

/// n observations, observation i drawn from stream i of cfg.seed. The
/// returned dataset carries a scaler fitted on its own routes.
Dataset generate_dataset(const GeneratorConfig& cfg, std::size_t n,
                         GenerationStats* stats = nullptr);

}  // namespace plroute
