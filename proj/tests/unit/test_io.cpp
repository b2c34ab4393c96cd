#include <doctest.h>

#include <cstring>
#include <sstream>

#include "helpers.hpp"
#include "plroute/errors.hpp"
#include "plroute/io.hpp"

using namespace plroute;
using namespace plroute::testing;

namespace {

Dataset random_dataset(Rng& rng, int n, bool with_meta) {
  Dataset d;
  d.observations = random_observations(rng, n);
  if (with_meta) {
    for (int i = 0; i < n; ++i) {
      ObservationMeta m;
      if (i % 3 != 0) m.day = i / 2;
      if (i % 2 == 0) m.day_type = i % 4 == 0 ? DayType::weekend : DayType::weekday;
      d.meta.push_back(m);
    }
  }
  return d;
}

bool bit_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("dataset round trip") {
  Rng rng = make_rng(1);
  for (bool meta : {false, true}) {
    const Dataset d = random_dataset(rng, 40, meta);
    std::stringstream buf;
    write_dataset(d, buf);
    const Dataset back = read_dataset(buf);
    CHECK(back.observations == d.observations);
    CHECK(back.meta == d.meta);
  }
}

TEST_CASE("dataset parse errors") {
  std::stringstream empty;
  CHECK(read_dataset(empty).empty());

  Rng rng = make_rng(2);
  Dataset d = random_dataset(rng, 2, false);
  std::stringstream buf;
  write_dataset(d, buf);
  std::string text = buf.str();
  const auto second = text.find('\n') + 1;
  std::string bad = text.substr(0, second) +
                    std::string(text.begin() + static_cast<long>(second), text.end());
  // Replace the second record's choice with 8.
  const auto pos = bad.rfind("\"choice\":");
  bad.replace(pos, bad.find_first_of(",}", pos) - pos, "\"choice\":8");
  std::stringstream in(bad);
  try {
    read_dataset(in);
    FAIL("expected a validation error");
  } catch (const ParseError&) {
    FAIL("expected a validation error, not a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::stringstream garbage(text + "{not json\n");
  try {
    read_dataset(garbage);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  std::stringstream missing(R"({"z":{"age_group":"young","ses":0,"rain":0,"slack":0,"disability":0},"choice":0})");
  CHECK_THROWS_AS(read_dataset(missing), ParseError);
  std::stringstream wrong_age(R"({"z":{"age_group":"old","ses":0,"rain":0,"slack":0,"disability":0},"routes":[{"t":1,"c":1,"tw":0},{"t":2,"c":0,"tw":0}],"choice":0})");
  CHECK_THROWS_AS(read_dataset(wrong_age), ParseError);
}

TEST_CASE("particle round trip is bit-exact") {
  Rng rng = make_rng(3);
  std::normal_distribution<double> n(0.0, 1e3);
  ParticleSet p;
  p.day = 17;
  p.particles.resize(64, 14);
  for (Eigen::Index i = 0; i < p.particles.size(); ++i) p.particles.data()[i] = n(rng) / 7.0;
  p.particles(0, 0) = 5e-324;  // subnormal
  p.particles(0, 1) = -0.0;
  p.particles(0, 2) = 1.7976931348623157e308;
  const Scaler s({20.1234567890123, 11.1, 9.0}, {16.2, 8.6, 1e-3 / 3});
  std::stringstream buf;
  save_particles(p, s, buf);
  const LoadedParticles back = load_particles(buf);
  CHECK(bit_equal(back.particles.particles, p.particles));
  CHECK(back.scaler == s);
  CHECK(back.particles.day == 17);
}

TEST_CASE("particle load errors") {
  ParticleSet p;
  p.particles = Eigen::MatrixXd::Ones(3, 14);
  const Scaler s({0, 0, 0}, {1, 1, 1});
  std::stringstream buf;
  save_particles(p, s, buf);
  const std::string text = buf.str();

  std::string wrong_d = text;
  wrong_d.replace(wrong_d.find("\"d\":14"), 6, "\"d\":13");
  std::stringstream in1(wrong_d);
  try {
    load_particles(in1);
    FAIL("expected a dimension error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("dimension") != std::string::npos);
  }

  std::string wrong_v = text;
  wrong_v.replace(wrong_v.find("\"version\":1"), 11, "\"version\":2");
  std::stringstream in2(wrong_v);
  CHECK_THROWS_AS(load_particles(in2), StateError);

  // Cut the file in the middle of the last row.
  const std::string cut = text.substr(0, text.size() - 10);
  std::stringstream in3(cut);
  try {
    load_particles(in3);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("byte offset") != std::string::npos);
    const auto last_row = text.rfind('[');
    CHECK(msg.find(std::to_string(last_row)) != std::string::npos);
  }

  // Missing rows entirely.
  const std::string short_file = text.substr(0, text.find('\n') + 1);
  std::stringstream in4(short_file);
  try {
    load_particles(in4);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte offset " + std::to_string(short_file.size())) !=
          std::string::npos);
  }

  ParticleSet wide;
  wide.particles = Eigen::MatrixXd::Ones(2, 3);
  std::stringstream out;
  CHECK_THROWS_AS(save_particles(wide, s, out), ValidationError);
}

TEST_CASE("params and summaries") {
  const ParameterMatrix p = reference_parameters();
  CHECK(params_from_json(params_to_json(p)) == p);
  PosteriorSummary s;
  s.mean = p.flatten();
  s.ci_low = s.mean.array() - 1;
  s.ci_high = s.mean.array() + 1;
  CHECK(params_from_json(summary_to_json(s)) == p);
  CHECK_THROWS_AS(params_from_json(Json{{"a2", {1, 2}}, {"a3", {1, 2}}}), ParseError);
}

TEST_CASE("run config") {
  const RunConfig def;
  CHECK(def.datagen.params == reference_parameters());
  const Json j = run_config_to_json(def);
  const RunConfig back = run_config_from_json(j);
  CHECK(run_config_to_json(back) == j);

  const RunConfig c = run_config_from_json(
      Json::parse(R"({"mcmc":{"warmup":10,"samples":20,"seed":5},"dynamic":{"beta":0.5,"lambda_daytype":0.7},
                      "datagen":{"noise_coeff":0.0},"experiment":{"runs":2}})"));
  CHECK(c.mcmc.n_warmup == 10);
  CHECK(c.mcmc.n_samples == 20);
  CHECK(c.mcmc.seed == 5);
  CHECK(c.dynamic.beta == 0.5);
  CHECK(*c.dynamic.lambda_daytype == 0.7);
  CHECK(c.datagen.noise_coeff == 0.0);
  CHECK(c.experiment["runs"] == 2);

  CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"mcmc":{"warmpu":10}})")), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"dynamic":{"beta":2}})")), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(Json::parse(R"({"unknown":{}})")), ValidationError);
}
