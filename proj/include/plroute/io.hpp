#pragma once

// JSON Lines datasets, particle persistence, parameter files and run
// configuration. Doubles are written in shortest round-trip form, so every
// write/read pair here is bit-exact.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "plroute/datagen.hpp"
#include "plroute/dynamic_inference.hpp"
#include "plroute/model.hpp"
#include "plroute/sampler.hpp"
#include "plroute/static_inference.hpp"

namespace plroute {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Datasets

Json observation_to_json(const Observation& obs, const ObservationMeta& meta = {});

/// `line` is only used in error messages (1-based).
Observation observation_from_json(const Json& j, std::size_t line, ObservationMeta* meta);

/// Blank lines are skipped. Metadata is dropped from the result when no
/// record carries any.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& data, std::ostream& out);
void write_dataset(const Dataset& data, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Particle sets

inline constexpr const char* kParticleFormat = "plroute-particles";
inline constexpr int kParticleFormatVersion = 1;

struct LoadedParticles {
  ParticleSet particles;
  Scaler scaler;
};

void save_particles(const ParticleSet& p, const Scaler& scaler, std::ostream& out);
void save_particles(const ParticleSet& p, const Scaler& scaler,
                    const std::filesystem::path& path);
LoadedParticles load_particles(std::istream& in);
LoadedParticles load_particles(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Small records

Json scaler_to_json(const Scaler& s);
Scaler scaler_from_json(const Json& j);

Json params_to_json(const ParameterMatrix& p);
/// Accepts {"a2": [...], "a3": [...]} or a summary record whose "mean"
/// member has that layout.
ParameterMatrix params_from_json(const Json& j);

Json summary_to_json(const PosteriorSummary& s);
Json diagnostics_to_json(const ChainDiagnostics& d);

Json features_to_json(const FeatureVector& z);
FeatureVector features_from_json(const Json& j);
Json route_to_json(const RouteAttributes& r);
RouteAttributes route_from_json(const Json& j);

std::string day_type_name(DayType t);
DayType day_type_from_name(const std::string& s);

/// Parses a whole file as one JSON document.
Json read_json_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  RunConfig() { datagen.params = reference_parameters(); }

  McmcConfig mcmc;
  WeightingConfig dynamic;
  GeneratorConfig datagen;
  /// Driver-specific settings, interpreted by the experiment that runs.
  Json experiment = Json::object();

  void validate() const;
};

/// Sections: "model" {k}, "mcmc" {warmup, samples, target_accept, max_depth,
/// seed}, "dynamic" {beta, a_max, n_max, lambda_daytype}, "datagen" {params,
/// bounds, noise and class probabilities}, "experiment" {...}. Missing keys keep
/// their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& c);

}  // namespace plroute
