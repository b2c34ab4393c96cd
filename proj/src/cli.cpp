#include "plroute/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <iostream>
#include <optional>

#include "plroute/datagen.hpp"
#include "plroute/decision.hpp"
#include "plroute/dynamic_inference.hpp"
#include "plroute/errors.hpp"
#include "plroute/experiments.hpp"
#include "plroute/io.hpp"
#include "plroute/static_inference.hpp"

namespace plroute {

namespace {

/// A file path, or inline JSON when the argument starts with '{' or '['.
Json json_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return Json::parse(arg);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("malformed inline JSON (") + e.what() + ")");
    }
  }
  return read_json_file(arg);
}

std::string str_member(const Json& j, const char* key, const std::string& fallback = {}) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (!fallback.empty()) return fallback;
    throw ParseError(std::string("missing \"") + key + "\"");
  }
  if (!it->is_string()) throw ParseError(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::set<std::string> string_set(const Json& j, const char* key) {
  std::set<std::string> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw ParseError(std::string("\"") + key + "\" must be an array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw ParseError(std::string("\"") + key + "\" must hold strings");
    out.insert(v.get<std::string>());
  }
  return out;
}

double num_member(const Json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ParseError(std::string("\"") + key + "\" must be a number");
  return it->get<double>();
}

std::vector<RouteAttributes> routes_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("candidates must be a JSON array of routes");
  std::vector<RouteAttributes> out;
  for (const auto& r : j) out.push_back(route_from_json(r));
  return out;
}

CandidateUser candidate_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("each candidate must be an object");
  CandidateUser u;
  u.id = str_member(j, "id");
  u.features = features_from_json(j.at("z"));
  if (auto it = j.find("reduced_mobility"); it != j.end()) {
    if (!it->is_boolean()) throw ParseError("reduced_mobility must be a boolean");
    u.reduced_mobility = it->get<bool>();
  }
  u.walking_time_to_pickup = num_member(j, "walking_time", 0.0);
  if (auto it = j.find("emission_savings"); it != j.end() && !it->is_null()) {
    u.emission_savings = num_member(j, "emission_savings", 0.0);
  }
  u.vetoes = string_set(j, "vetoes");
  if (auto it = j.find("alternative"); it != j.end() && !it->is_null()) {
    u.alternative = route_from_json(*it);
  }
  return u;
}

Json ranking_to_json(const CarpoolRanking& r) {
  Json order = Json::array();
  for (const auto& c : r.order) {
    Json e{{"id", c.id}, {"tier", static_cast<int>(c.tier)}, {"value", c.value}};
    if (c.acceptance_probability) e["acceptance_probability"] = *c.acceptance_probability;
    order.push_back(e);
  }
  return Json{{"order", order}, {"assigned", r.assigned}, {"waiting", r.waiting}};
}

Json dataset_summary(const Dataset& d, const std::string& path, const GenerationStats& stats) {
  return Json{{"n", d.size()},
              {"out", path},
              {"scaler", scaler_to_json(*d.scaler)},
              {"regenerations", stats.regenerations},
              {"capped_routes", stats.capped_routes}};
}

struct Options {
  // shared
  std::string posterior, data, out, config, params;
  std::uint64_t seed = 0;
  int warmup = 500, samples = 1000, max_depth = 10;
  double target_accept = 0.8, level = 0.9;
  // datagen
  long long n = 0;
  int k = static_cast<int>(kDefaultOfferSize);
  std::optional<int> stamp_day;
  std::string stamp_day_type;
  // fit-dynamic
  std::string store, prev, store_out, target_day_type;
  int today = 0, amax = 5, nmax = 100000;
  double beta = 0.95;
  std::optional<double> lambda;
  bool no_filter = false;
  // decisions
  std::string user, candidates, ride, penalties, baseline, detour;
  int clusters = 3;
  double imax = 10.0, kappa = 0.0, step = 0.1;
  // experiment
  std::string name;
};

McmcConfig mcmc_from(const Options& o) {
  McmcConfig m;
  m.n_warmup = o.warmup;
  m.n_samples = o.samples;
  m.target_accept = o.target_accept;
  m.max_tree_depth = o.max_depth;
  m.seed = o.seed;
  m.validate();
  return m;
}

void add_mcmc_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--warmup", o.warmup, "Warmup iterations")->capture_default_str();
  cmd->add_option("--samples", o.samples, "Post-warmup draws")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Sampler seed")->capture_default_str();
  cmd->add_option("--target-accept", o.target_accept)->capture_default_str();
  cmd->add_option("--max-depth", o.max_depth)->capture_default_str();
}

int cmd_datagen(const Options& o, std::ostream& out) {
  GeneratorConfig g;
  if (!o.config.empty()) g = run_config_from_json(json_argument(o.config)).datagen;
  else g.params = reference_parameters();
  if (!o.params.empty()) g.params = params_from_json(json_argument(o.params));
  g.seed = o.seed;
  g.k = o.k;
  if (o.n < 1) throw ValidationError("--n must be positive");
  GenerationStats stats;
  Dataset d = generate_dataset(g, static_cast<std::size_t>(o.n), &stats);
  if (o.stamp_day || !o.stamp_day_type.empty()) {
    ObservationMeta m;
    m.day = o.stamp_day;
    if (!o.stamp_day_type.empty()) m.day_type = day_type_from_name(o.stamp_day_type);
    d.meta.assign(d.size(), m);
  }
  if (o.out.empty()) {
    write_dataset(d, out);
  } else {
    write_dataset(d, std::filesystem::path(o.out));
    out << dataset_summary(d, o.out, stats).dump() << '\n';
  }
  return kExitOk;
}

int cmd_fit_static(const Options& o, std::ostream& out, std::ostream& err) {
  Dataset d = read_dataset(std::filesystem::path(o.data));
  if (d.empty()) throw ValidationError("dataset " + o.data + " is empty");
  d.scaler = fit_scaler(d.observations);
  ParticleSet p = fit_static(d, mcmc_from(o));
  for (const auto& w : p.diagnostics->warnings) err << "warning: " << w << '\n';
  if (!o.out.empty()) save_particles(p, *d.scaler, std::filesystem::path(o.out));
  out << Json{{"n_obs", d.size()},
              {"summary", summary_to_json(posterior_summary(p, o.level))},
              {"diagnostics", diagnostics_to_json(*p.diagnostics)},
              {"scaler", scaler_to_json(*d.scaler)}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_fit_dynamic(const Options& o, std::ostream& out, std::ostream& err) {
  const LoadedParticles prev = load_particles(std::filesystem::path(o.prev));
  const ObservationStore store =
      ObservationStore::from_dataset(read_dataset(std::filesystem::path(o.store)));
  WeightingConfig w;
  w.beta = o.beta;
  w.a_max = o.amax;
  w.n_max = o.nmax;
  w.lambda_daytype = o.lambda;
  w.validate();
  DynamicOptions opt;
  opt.filter = !o.no_filter;
  if (!o.target_day_type.empty()) opt.target_day_type = day_type_from_name(o.target_day_type);
  DynamicStepResult r =
      fit_dynamic_step(prev.particles, store, o.today, w, mcmc_from(o), prev.scaler, opt);
  for (const auto& msg : r.posterior.diagnostics->warnings) err << "warning: " << msg << '\n';
  if (!o.out.empty()) save_particles(r.posterior, prev.scaler, std::filesystem::path(o.out));
  if (!o.store_out.empty()) write_dataset(r.store.to_dataset(), std::filesystem::path(o.store_out));
  Json j{{"day", o.today},
         {"likelihood_size", r.likelihood_size},
         {"store_size", r.store.size()},
         {"summary", summary_to_json(posterior_summary(r.posterior, o.level))},
         {"diagnostics", diagnostics_to_json(*r.posterior.diagnostics)}};
  if (r.filter) {
    j["filter"] = Json{{"distinct", r.filter->distinct},
                       {"degenerate", r.filter->degenerate},
                       {"n_residual", r.filter->n_residual}};
  }
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const LoadedParticles post = load_particles(std::filesystem::path(o.posterior));
  const Dataset d = read_dataset(std::filesystem::path(o.data));
  const double acc =
      evaluate_accuracy(posterior_mean(post.particles), post.scaler, d.observations);
  out << Json{{"n_obs", d.size()}, {"accuracy", acc}}.dump() << '\n';
  return kExitOk;
}

int cmd_summary(const Options& o, std::ostream& out) {
  const LoadedParticles post = load_particles(std::filesystem::path(o.posterior));
  Json j = summary_to_json(posterior_summary(post.particles, o.level));
  j["n_sample"] = post.particles.size();
  j["day"] = post.particles.day;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_select_routes(const Options& o, std::ostream& out) {
  const LoadedParticles post = load_particles(std::filesystem::path(o.posterior));
  const FeatureVector z = features_from_json(json_argument(o.user));
  const std::vector<RouteAttributes> cands = routes_from_json(json_argument(o.candidates));
  const ParameterMatrix point = posterior_mean(post.particles);
  const std::vector<std::size_t> picked =
      select_routes(point, post.scaler, z, cands, o.clusters, o.seed);
  Json routes = Json::array();
  for (std::size_t i : picked) routes.push_back(route_to_json(cands[i]));
  out << Json{{"selected", picked},
              {"labels", cluster_routes(cands, o.clusters, o.seed)},
              {"routes", routes}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_rank_carpool(const Options& o, std::ostream& out) {
  const LoadedParticles post = load_particles(std::filesystem::path(o.posterior));
  const Json ride_j = json_argument(o.ride);
  RideOffer ride;
  ride.driver_id = str_member(ride_j, "driver_id");
  ride.route = route_from_json(ride_j.at("route"));
  ride.capacity = static_cast<int>(num_member(ride_j, "capacity", 1.0));
  ride.vetoes = string_set(ride_j, "vetoes");
  const Json cj = json_argument(o.candidates);
  if (!cj.is_array()) throw ParseError("candidates must be a JSON array");
  std::vector<CandidateUser> users;
  for (const auto& c : cj) users.push_back(candidate_from_json(c));
  CancellationPenalties penalties;
  if (!o.penalties.empty()) {
    const Json pj = json_argument(o.penalties);
    if (!pj.is_object()) throw ParseError("penalties must be an object of id -> penalty");
    for (const auto& [id, v] : pj.items()) {
      if (!v.is_number()) throw ParseError("penalty for " + id + " must be a number");
      penalties[id] = v.get<double>();
    }
  }
  const CarpoolRanking r =
      rank_carpool(ride, users, posterior_mean(post.particles), post.scaler, penalties);
  out << ranking_to_json(r).dump() << '\n';
  return kExitOk;
}

int cmd_incentive(const Options& o, std::ostream& out) {
  const LoadedParticles post = load_particles(std::filesystem::path(o.posterior));
  const ParameterMatrix point = posterior_mean(post.particles);
  IncentiveProblem problem;
  problem.driver = features_from_json(json_argument(o.user));
  problem.baseline = route_from_json(json_argument(o.baseline));
  problem.i_max = o.imax;
  problem.kappa = o.kappa;
  problem.step = o.step;
  const Json dj = json_argument(o.detour);
  Json result;
  const RawUnitWeights w = raw_unit_weights(compute_weights(point, problem.driver), post.scaler);
  result["raw_unit_weights"] = Json{{"time", w.time}, {"cost", w.cost}, {"walk", w.walk}};
  if (dj.is_object()) {
    const RouteAttributes detour = route_from_json(dj);
    const IncentiveQuote q = min_incentive(w, problem.baseline, detour);
    result["min_incentive"] = Json{{"incentive", q.incentive},
                                   {"floored", q.floored},
                                   {"applied", q.floored_incentive()}};
    problem.detours.push_back({detour, {}});
  } else if (dj.is_array()) {
    for (const auto& d : dj) {
      DetourOption opt;
      opt.route = route_from_json(d.at("route"));
      if (auto it = d.find("served"); it != d.end()) {
        for (const auto& p : *it) {
          opt.served.push_back({features_from_json(p.at("z")), route_from_json(p.at("alternative"))});
        }
      }
      problem.detours.push_back(std::move(opt));
    }
  } else {
    throw ParseError("--detour must be a route object or an array of detour options");
  }
  const IncentiveSolution s = optimize_incentive(problem, point, post.scaler);
  result["optimal"] = Json{{"incentive", s.incentive},
                           {"expected_utility", s.expected_utility},
                           {"objective", s.objective}};
  out << result.dump() << '\n';
  return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = run_config_from_json(json_argument(o.config));
  out << run_experiment(o.name, cfg).to_json().dump() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Route-choice preference inference and decision tools", "plroute"};
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic dataset");
  datagen->add_option("--params", o.params, "Ground-truth params (file or inline JSON)");
  datagen->add_option("--n", o.n, "Number of observations")->required();
  datagen->add_option("--seed", o.seed)->capture_default_str();
  datagen->add_option("--out", o.out, "Output JSONL (stdout when omitted)");
  datagen->add_option("--config", o.config, "Run config supplying generator settings");
  datagen->add_option("--k", o.k, "Routes per offer set")->capture_default_str();
  datagen->add_option("--day", o.stamp_day, "Stamp every record with this day");
  datagen->add_option("--day-type", o.stamp_day_type, "weekday or weekend");
  datagen->callback([&] { action = [&] { return cmd_datagen(o, out); }; });

  auto* fit_s = app.add_subcommand("fit-static", "Fit the static posterior with NUTS");
  fit_s->add_option("--data", o.data)->required();
  fit_s->add_option("--out", o.out, "Particle file to write");
  fit_s->add_option("--level", o.level)->capture_default_str();
  add_mcmc_flags(fit_s, o);
  fit_s->callback([&] { action = [&] { return cmd_fit_static(o, out, err); }; });

  auto* fit_d = app.add_subcommand("fit-dynamic", "One nightly sequential update");
  fit_d->add_option("--store", o.store, "Dated observation store (JSONL)")->required();
  fit_d->add_option("--prev", o.prev, "Previous particle file")->required();
  fit_d->add_option("--day", o.today, "Current day")->required();
  fit_d->add_option("--beta", o.beta)->capture_default_str();
  fit_d->add_option("--amax", o.amax)->capture_default_str();
  fit_d->add_option("--nmax", o.nmax)->capture_default_str();
  fit_d->add_option("--lambda", o.lambda, "Day-type weight");
  fit_d->add_option("--target-day-type", o.target_day_type);
  fit_d->add_flag("--no-filter", o.no_filter, "Skip the particle filter");
  fit_d->add_option("--out", o.out, "Particle file to write");
  fit_d->add_option("--store-out", o.store_out, "Write the pruned store here");
  fit_d->add_option("--level", o.level)->capture_default_str();
  add_mcmc_flags(fit_d, o);
  fit_d->callback([&] { action = [&] { return cmd_fit_dynamic(o, out, err); }; });

  auto* eval = app.add_subcommand("evaluate", "Top-1 accuracy of the posterior mean");
  eval->add_option("--data", o.data)->required();
  eval->add_option("--posterior", o.posterior)->required();
  eval->callback([&] { action = [&] { return cmd_evaluate(o, out); }; });

  auto* summary = app.add_subcommand("summary", "Posterior means and credible intervals");
  summary->add_option("--posterior", o.posterior)->required();
  summary->add_option("--level", o.level)->capture_default_str();
  summary->callback([&] { action = [&] { return cmd_summary(o, out); }; });

  auto* sel = app.add_subcommand("select-routes", "Pick diverse high-value routes");
  sel->add_option("--posterior", o.posterior)->required();
  sel->add_option("--user", o.user, "User features (file or inline JSON)")->required();
  sel->add_option("--candidates", o.candidates, "Route array (file or inline JSON)")->required();
  sel->add_option("--k", o.clusters)->capture_default_str();
  sel->add_option("--seed", o.seed)->capture_default_str();
  sel->callback([&] { action = [&] { return cmd_select_routes(o, out); }; });

  auto* rank = app.add_subcommand("rank-carpool", "Rank riders for a car-pool offer");
  rank->add_option("--posterior", o.posterior)->required();
  rank->add_option("--ride", o.ride)->required();
  rank->add_option("--candidates", o.candidates)->required();
  rank->add_option("--penalties", o.penalties, "Cancellation penalties by user id");
  rank->callback([&] { action = [&] { return cmd_rank_carpool(o, out); }; });

  auto* inc = app.add_subcommand("incentive", "Price a detour for a driver");
  inc->add_option("--posterior", o.posterior)->required();
  inc->add_option("--baseline", o.baseline)->required();
  inc->add_option("--detour", o.detour, "Route, or array of detour options")->required();
  inc->add_option("--user", o.user, "Driver features")->required();
  inc->add_option("--imax", o.imax)->capture_default_str();
  inc->add_option("--kappa", o.kappa)->capture_default_str();
  inc->add_option("--step", o.step)->capture_default_str();
  inc->callback([&] { action = [&] { return cmd_incentive(o, out); }; });

  auto* exp = app.add_subcommand("experiment", "Run an experiment driver");
  exp->add_option("--name", o.name)
      ->required()
      ->check(CLI::IsMember({"static-sweep", "dynamic-iters", "beta-shift", "filter-ablation"}));
  exp->add_option("--config", o.config, "Run config (file or inline JSON)");
  exp->callback([&] { action = [&] { return cmd_experiment(o, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    return action();
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Json::exception& e) {
    err << "error: malformed input (" << e.what() << ")\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  std::ios::sync_with_stdio(false);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace plroute
