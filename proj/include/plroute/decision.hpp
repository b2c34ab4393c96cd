#pragma once

// Decision routines driven by a point estimate of the preference model:
// diverse route selection, car-pool seat ranking and incentive design.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "plroute/model.hpp"

namespace plroute {

// ---------------------------------------------------------------------------
// Route selection

/// k-means (k-means++ seeding) on the routes' attributes z-scored within the
/// candidate set. Labels are renumbered in order of first appearance, and
/// every cluster is nonempty. With n <= k each route is its own cluster.
std::vector<int> cluster_routes(std::span<const RouteAttributes> routes, int k,
                                std::uint64_t seed);

/// Indices of the highest-value candidate within each cluster (lowest index
/// on ties), ordered by cluster label.
std::vector<std::size_t> select_routes(const ParameterMatrix& point, const Scaler& scaler,
                                       const FeatureVector& features,
                                       std::span<const RouteAttributes> candidates, int k,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Car pooling

struct CandidateUser {
  std::string id;
  FeatureVector features;
  bool reduced_mobility = false;
  double walking_time_to_pickup = 0.0;
  /// Users with positive savings form the emissions tier.
  std::optional<double> emission_savings;
  std::set<std::string> vetoes;
  /// The user's best non-car-pool option, used for acceptance probabilities.
  std::optional<RouteAttributes> alternative;
};

struct RideOffer {
  std::string driver_id;
  RouteAttributes route;
  int capacity = 0;
  std::set<std::string> vetoes;
};

enum class PriorityTier { reduced_mobility = 1, emissions = 2, preference = 3 };

struct RankedCandidate {
  std::string id;
  PriorityTier tier = PriorityTier::preference;
  double value = 0.0;  // model value of the ride for this user, penalty included
  std::optional<double> acceptance_probability;
};

struct CarpoolRanking {
  std::vector<RankedCandidate> order;  // full priority order
  std::vector<std::string> assigned;   // first seats, rider-rider vetoes respected
  std::vector<std::string> waiting;    // everyone else, in priority order
};

/// Value penalties of riders who cancelled; keyed by user id.
using CancellationPenalties = std::map<std::string, double>;

inline constexpr double kDefaultCancellationPenalty = -0.5;

void record_cancellation(CancellationPenalties& penalties, const std::string& user_id,
                         double penalty = kDefaultCancellationPenalty);

/// Drops candidates in a veto relation with the driver, then orders:
/// reduced mobility by ascending walking time; positive emission savings by
/// descending savings; everyone else by descending model value. Ties keep
/// input order.
CarpoolRanking rank_carpool(const RideOffer& offer, std::span<const CandidateUser> candidates,
                            const ParameterMatrix& point, const Scaler& scaler,
                            const CancellationPenalties& penalties = {});

// ---------------------------------------------------------------------------
// Incentives

/// Value coefficients per raw unit: w_i / std_i. Their ratios reproduce
/// model odds in natural units.
struct RawUnitWeights {
  double time = 0.0;
  double cost = 0.0;
  double walk = 0.0;
};

RawUnitWeights raw_unit_weights(const WeightVector& w, const Scaler& scaler);

struct IncentiveQuote {
  double incentive = 0.0;  // may be negative: the detour already wins
  bool floored = false;    // true when incentive < 0
  double floored_incentive() const { return incentive < 0.0 ? 0.0 : incentive; }
};

/// Transfer that makes odds(baseline over detour) equal to one.
IncentiveQuote min_incentive(const RawUnitWeights& w, const RouteAttributes& baseline,
                             const RouteAttributes& detour);

/// odds(baseline over detour) when the detour's cost is reduced by `incentive`.
double incentive_odds(const RawUnitWeights& w, const RouteAttributes& baseline,
                      const RouteAttributes& detour, double incentive);

struct Passenger {
  FeatureVector features;
  RouteAttributes alternative;
};

struct DetourOption {
  RouteAttributes route;
  std::vector<Passenger> served;
};

struct IncentiveProblem {
  FeatureVector driver;
  RouteAttributes baseline;
  std::vector<DetourOption> detours;
  double i_max = 10.0;
  double step = 0.1;
  double kappa = 0.0;

  void validate() const;
};

struct IncentiveSolution {
  double incentive = 0.0;
  double expected_utility = 0.0;  // E_I[U] at the optimum
  double objective = 0.0;         // E_I[U] - kappa I
};

/// E_I[U]: sum over detours of P(driver takes it | I) * prod P(passenger
/// accepts) * (sum of passenger values + driver value with the incentive).
double expected_total_utility(const IncentiveProblem& problem, const ParameterMatrix& point,
                              const Scaler& scaler, double incentive);

/// Grid search over {0, step, ..., i_max} for the largest E_I[U] - kappa I;
/// ties go to the smallest incentive.
IncentiveSolution optimize_incentive(const IncentiveProblem& problem,
                                     const ParameterMatrix& point, const Scaler& scaler);

}  // namespace plroute
