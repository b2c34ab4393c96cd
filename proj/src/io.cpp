#include "plroute/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "plroute/errors.hpp"

namespace plroute {

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + "missing \"" + key + "\"");
  return *it;
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + " must be a number");
  return j.get<double>();
}

long long integer(const Json& j, const std::string& what) {
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v)) return static_cast<long long>(v);
  }
  throw ParseError(what + " must be an integer");
}

template <std::size_t N>
std::array<double, N> number_array(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) {
    throw ParseError(what + " must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = number(j[i], what);
  return out;
}

template <std::size_t N>
Json finite_array(const std::array<double, N>& a, const char* what) {
  for (double x : a) {
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " has a non-finite entry");
  }
  return Json(a);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& section) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown key \"" + key + "\" in " + section);
  }
}

}  // namespace

std::string day_type_name(DayType t) { return t == DayType::weekday ? "weekday" : "weekend"; }

DayType day_type_from_name(const std::string& s) {
  if (s == "weekday") return DayType::weekday;
  if (s == "weekend") return DayType::weekend;
  throw ParseError("day_type must be \"weekday\" or \"weekend\", got \"" + s + "\"");
}

Json features_to_json(const FeatureVector& z) {
  z.validate();
  static const char* names[] = {"young", "active", "retired"};
  return Json{{"age_group", names[static_cast<int>(z.age_group())]},
              {"ses", z.ses()},
              {"rain", z.rain() ? 1 : 0},
              {"slack", z.slack()},
              {"disability", z.disability()}};
}

FeatureVector features_from_json(const Json& j) {
  const std::string w = "z: ";
  const Json& age = member(j, "age_group", w);
  if (!age.is_string()) throw ParseError("age_group must be a string");
  const std::string a = age.get<std::string>();
  AgeGroup group;
  if (a == "young") {
    group = AgeGroup::young;
  } else if (a == "active") {
    group = AgeGroup::active;
  } else if (a == "retired") {
    group = AgeGroup::retired;
  } else {
    throw ParseError("unknown age_group \"" + a + "\"");
  }
  const double ses = number(member(j, "ses", w), "ses");
  const long long rain = integer(member(j, "rain", w), "rain");
  if (rain != 0 && rain != 1) throw ValidationError("rain must be 0 or 1");
  const double slack = number(member(j, "slack", w), "slack");
  const long long dis = integer(member(j, "disability", w), "disability");
  if (dis < 0 || dis > 2) throw ValidationError("disability must be 0, 1 or 2");
  FeatureVector z = FeatureVector::make(group, ses, rain == 1, slack, static_cast<int>(dis));
  z.validate();
  return z;
}

Json route_to_json(const RouteAttributes& r) {
  return Json{{"t", r.t}, {"c", r.c}, {"tw", r.tw}};
}

RouteAttributes route_from_json(const Json& j) {
  const std::string w = "route: ";
  return {number(member(j, "t", w), "t"), number(member(j, "c", w), "c"),
          number(member(j, "tw", w), "tw")};
}

Json observation_to_json(const Observation& obs, const ObservationMeta& meta) {
  obs.validate();
  Json routes = Json::array();
  for (const auto& r : obs.offers) routes.push_back(route_to_json(r));
  Json j{{"z", features_to_json(obs.features)}, {"routes", routes}, {"choice", obs.choice}};
  if (meta.day) j["day"] = *meta.day;
  if (meta.day_type) j["day_type"] = day_type_name(*meta.day_type);
  return j;
}

Observation observation_from_json(const Json& j, std::size_t line, ObservationMeta* meta) {
  const std::string w = at_line(line);
  try {
    Observation obs;
    obs.features = features_from_json(member(j, "z", w));
    const Json& routes = member(j, "routes", w);
    if (!routes.is_array()) throw ParseError("routes must be an array");
    for (const auto& r : routes) obs.offers.push_back(route_from_json(r));
    const long long choice = integer(member(j, "choice", w), "choice");
    if (choice < 0 || choice >= static_cast<long long>(obs.offers.size())) {
      throw ValidationError("choice " + std::to_string(choice) + " out of range for " +
                            std::to_string(obs.offers.size()) + " routes");
    }
    obs.choice = static_cast<int>(choice);
    obs.validate();
    ObservationMeta m;
    if (auto it = j.find("day"); it != j.end()) m.day = static_cast<int>(integer(*it, "day"));
    if (auto it = j.find("day_type"); it != j.end()) {
      if (!it->is_string()) throw ParseError("day_type must be a string");
      m.day_type = day_type_from_name(it->get<std::string>());
    }
    if (meta != nullptr) *meta = m;
    return obs;
  } catch (const ParseError& e) {
    if (std::string(e.what()).starts_with(w)) throw;
    throw ParseError(w + e.what());
  } catch (const ValidationError& e) {
    if (std::string(e.what()).starts_with(w)) throw;
    throw ValidationError(w + e.what());
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::string text;
  std::size_t line = 0;
  bool any_meta = false;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(at_line(line) + "malformed JSON (" + e.what() + ")");
    }
    ObservationMeta meta;
    data.observations.push_back(observation_from_json(j, line, &meta));
    any_meta = any_meta || meta.day.has_value() || meta.day_type.has_value();
    data.meta.push_back(meta);
  }
  if (!any_meta) data.meta.clear();
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_dataset(in);
}

void write_dataset(const Dataset& data, std::ostream& out) {
  if (!data.meta.empty() && data.meta.size() != data.size()) {
    throw ValidationError("dataset metadata does not match its observations");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ObservationMeta meta = data.meta.empty() ? ObservationMeta{} : data.meta[i];
    out << observation_to_json(data.observations[i], meta).dump() << '\n';
  }
  if (!out) throw ValidationError("write failed");
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_dataset(data, out);
}

Json scaler_to_json(const Scaler& s) {
  return Json{{"mean", finite_array(s.mean(), "scaler mean")},
              {"std", finite_array(s.std(), "scaler std")}};
}

Scaler scaler_from_json(const Json& j) {
  return Scaler(number_array<kNumAttributes>(member(j, "mean", "scaler: "), "scaler mean"),
                number_array<kNumAttributes>(member(j, "std", "scaler: "), "scaler std"));
}

void save_particles(const ParticleSet& p, const Scaler& scaler, std::ostream& out) {
  if (p.particles.cols() != static_cast<Eigen::Index>(kParamDim)) {
    throw ValidationError("particles must have " + std::to_string(kParamDim) + " columns");
  }
  Json meta{{"format", kParticleFormat},
            {"version", kParticleFormatVersion},
            {"d", kParamDim},
            {"n_sample", p.size()},
            {"day", p.day},
            {"scaler", scaler_to_json(scaler)}};
  out << meta.dump() << '\n';
  for (Eigen::Index i = 0; i < p.particles.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < p.particles.cols(); ++k) {
      const double x = p.particles(i, k);
      if (!std::isfinite(x)) throw NumericError("particle " + std::to_string(i) + " is not finite");
      row.push_back(x);
    }
    out << row.dump() << '\n';
  }
  if (!out) throw ValidationError("write failed");
}

void save_particles(const ParticleSet& p, const Scaler& scaler,
                    const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  save_particles(p, scaler, out);
}

LoadedParticles load_particles(std::istream& in) {
  std::string text;
  std::size_t offset = 0;
  auto next_line = [&](std::size_t& start) {
    start = offset;
    if (!std::getline(in, text)) return false;
    offset += text.size() + (in.eof() ? 0 : 1);
    return true;
  };

  std::size_t start = 0;
  if (!next_line(start)) throw ParseError("particle file is empty (byte offset 0)");
  Json meta;
  try {
    meta = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("malformed particle metadata at byte offset 0 (" + std::string(e.what()) + ")");
  }
  const std::string w = "particle metadata: ";
  const Json& format = member(meta, "format", w);
  if (!format.is_string() || format.get<std::string>() != kParticleFormat) {
    throw ParseError(w + "not a particle file");
  }
  const long long version = integer(member(meta, "version", w), "version");
  if (version != kParticleFormatVersion) {
    throw StateError("particle format version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kParticleFormatVersion) + ")");
  }
  const long long d = integer(member(meta, "d", w), "d");
  if (d != static_cast<long long>(kParamDim)) {
    throw ValidationError("particle dimension mismatch: file has d=" + std::to_string(d) +
                          ", expected " + std::to_string(kParamDim));
  }
  const long long n = integer(member(meta, "n_sample", w), "n_sample");
  if (n < 0) throw ValidationError("n_sample must be nonnegative");

  LoadedParticles out;
  out.particles.day = static_cast<int>(integer(member(meta, "day", w), "day"));
  out.scaler = scaler_from_json(member(meta, "scaler", w));
  out.particles.particles.resize(n, static_cast<Eigen::Index>(kParamDim));

  for (long long i = 0; i < n; ++i) {
    if (!next_line(start)) {
      throw ParseError("truncated particle file at byte offset " + std::to_string(offset) +
                       ": expected " + std::to_string(n) + " draws, found " + std::to_string(i));
    }
    Json row;
    try {
      row = Json::parse(text);
    } catch (const Json::parse_error&) {
      throw ParseError("malformed or truncated particle row at byte offset " +
                       std::to_string(start));
    }
    if (!row.is_array() || row.size() != kParamDim) {
      throw ParseError("particle row at byte offset " + std::to_string(start) + " must hold " +
                       std::to_string(kParamDim) + " numbers");
    }
    for (std::size_t k = 0; k < kParamDim; ++k) {
      if (!row[k].is_number()) {
        throw ParseError("non-numeric particle entry at byte offset " + std::to_string(start));
      }
      out.particles.particles(i, static_cast<Eigen::Index>(k)) = row[k].get<double>();
    }
  }
  while (next_line(start)) {
    if (!blank(text)) {
      throw ParseError("unexpected content after the last draw at byte offset " +
                       std::to_string(start));
    }
  }
  return out;
}

LoadedParticles load_particles(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return load_particles(in);
}

Json params_to_json(const ParameterMatrix& p) {
  return Json{{"a2", finite_array(p.a2, "a2")}, {"a3", finite_array(p.a3, "a3")}};
}

ParameterMatrix params_from_json(const Json& j) {
  if (j.is_object() && j.contains("mean") && !j.contains("a2")) return params_from_json(j["mean"]);
  ParameterMatrix p;
  p.a2 = number_array<kNumFeatures>(member(j, "a2", "params: "), "a2");
  p.a3 = number_array<kNumFeatures>(member(j, "a3", "params: "), "a3");
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(p.a2[i]) || !std::isfinite(p.a3[i])) {
      throw ValidationError("params must be finite");
    }
  }
  return p;
}

Json summary_to_json(const PosteriorSummary& s) {
  auto split = [](const Eigen::VectorXd& v) {
    return params_to_json(ParameterMatrix::from_flat(v));
  };
  return Json{{"level", s.level},
              {"mean", split(s.mean)},
              {"ci_low", split(s.ci_low)},
              {"ci_high", split(s.ci_high)}};
}

Json diagnostics_to_json(const ChainDiagnostics& d) {
  return Json{{"step_size", d.step_size},
              {"divergence_rate", d.divergence_rate},
              {"mean_accept_stat", d.mean_accept_stat},
              {"mean_tree_depth", d.mean_tree_depth},
              {"gradient_evaluations", d.gradient_evaluations},
              {"warnings", d.warnings}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void RunConfig::validate() const {
  mcmc.validate();
  dynamic.validate();
  datagen.validate();
  if (!experiment.is_object()) throw ValidationError("experiment section must be an object");
}

RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("run config must be a JSON object");
  check_keys(j, {"model", "mcmc", "dynamic", "datagen", "experiment"}, "run config");
  RunConfig c;
  auto num = [](const Json& s, const char* key, auto& field) {
    if (auto it = s.find(key); it != s.end()) {
      using T = std::decay_t<decltype(field)>;
      if constexpr (std::is_floating_point_v<T>) {
        field = number(*it, key);
      } else {
        field = static_cast<T>(integer(*it, key));
      }
    }
  };
  if (auto it = j.find("model"); it != j.end()) {
    check_keys(*it, {"k"}, "model");
    num(*it, "k", c.datagen.k);
  }
  if (auto it = j.find("mcmc"); it != j.end()) {
    check_keys(*it, {"warmup", "samples", "target_accept", "max_depth", "seed"}, "mcmc");
    num(*it, "warmup", c.mcmc.n_warmup);
    num(*it, "samples", c.mcmc.n_samples);
    num(*it, "target_accept", c.mcmc.target_accept);
    num(*it, "max_depth", c.mcmc.max_tree_depth);
    num(*it, "seed", c.mcmc.seed);
  }
  if (auto it = j.find("dynamic"); it != j.end()) {
    check_keys(*it, {"beta", "a_max", "n_max", "lambda_daytype"}, "dynamic");
    num(*it, "beta", c.dynamic.beta);
    num(*it, "a_max", c.dynamic.a_max);
    num(*it, "n_max", c.dynamic.n_max);
    if (auto l = it->find("lambda_daytype"); l != it->end() && !l->is_null()) {
      c.dynamic.lambda_daytype = number(*l, "lambda_daytype");
    }
  }
  if (auto it = j.find("datagen"); it != j.end()) {
    const Json& s = *it;
    check_keys(s,
               {"time_low", "time_high", "cost_low", "cost_high", "noise_coeff",
                "max_regen_attempts", "age_probs", "rain_prob", "disability_probs",
                "reference_size", "reference_seed", "seed", "params"},
               "datagen");
    GeneratorConfig& g = c.datagen;
    num(s, "time_low", g.bounds.time_low);
    num(s, "time_high", g.bounds.time_high);
    num(s, "cost_low", g.bounds.cost_low);
    num(s, "cost_high", g.bounds.cost_high);
    num(s, "noise_coeff", g.noise_coeff);
    num(s, "max_regen_attempts", g.max_regen_attempts);
    num(s, "rain_prob", g.rain_prob);
    num(s, "reference_size", g.reference_size);
    num(s, "reference_seed", g.reference_seed);
    num(s, "seed", g.seed);
    if (auto p = s.find("params"); p != s.end()) g.params = params_from_json(*p);
    if (auto p = s.find("age_probs"); p != s.end()) g.age_probs = number_array<3>(*p, "age_probs");
    if (auto p = s.find("disability_probs"); p != s.end()) {
      g.disability_probs = number_array<3>(*p, "disability_probs");
    }
  }
  if (auto it = j.find("experiment"); it != j.end()) c.experiment = *it;
  c.validate();
  return c;
}

Json run_config_to_json(const RunConfig& c) {
  const GeneratorConfig& g = c.datagen;
  Json dynamic{{"beta", c.dynamic.beta}, {"a_max", c.dynamic.a_max}, {"n_max", c.dynamic.n_max}};
  dynamic["lambda_daytype"] =
      c.dynamic.lambda_daytype ? Json(*c.dynamic.lambda_daytype) : Json(nullptr);
  return Json{{"model", {{"k", g.k}}},
              {"mcmc",
               {{"warmup", c.mcmc.n_warmup},
                {"samples", c.mcmc.n_samples},
                {"target_accept", c.mcmc.target_accept},
                {"max_depth", c.mcmc.max_tree_depth},
                {"seed", c.mcmc.seed}}},
              {"dynamic", dynamic},
              {"datagen",
               {{"params", params_to_json(g.params)},
                {"time_low", g.bounds.time_low},
                {"time_high", g.bounds.time_high},
                {"cost_low", g.bounds.cost_low},
                {"cost_high", g.bounds.cost_high},
                {"noise_coeff", g.noise_coeff},
                {"max_regen_attempts", g.max_regen_attempts},
                {"age_probs", g.age_probs},
                {"rain_prob", g.rain_prob},
                {"disability_probs", g.disability_probs},
                {"reference_size", g.reference_size},
                {"reference_seed", g.reference_seed},
                {"seed", g.seed}}},
              {"experiment", c.experiment}};
}

}  // namespace plroute
