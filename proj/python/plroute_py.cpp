// Python bindings. Structured values cross the boundary as JSON text; the
// pure-Python wrapper in plroute/__init__.py converts them to dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "plroute/cli.hpp"
#include "plroute/datagen.hpp"
#include "plroute/errors.hpp"
#include "plroute/io.hpp"
#include "plroute/static_inference.hpp"

namespace py = pybind11;
using namespace plroute;

namespace {

struct Posterior {
  ParticleSet particles;
  Scaler scaler;
};

Dataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in);
}

std::string dataset_to_jsonl(const Dataset& d) {
  std::ostringstream out;
  write_dataset(d, out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_plroute, m) {
  m.doc() = "Two-level Plackett-Luce route-choice model";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("reference_parameters", [] { return params_to_json(reference_parameters()).dump(); });

  m.def(
      "weights",
      [](const std::string& params, const std::string& z) {
        const WeightVector w =
            compute_weights(params_from_json(Json::parse(params)), features_from_json(Json::parse(z)));
        return std::vector<double>(w.w.begin(), w.w.end());
      },
      py::arg("params"), py::arg("z"));

  m.def(
      "choice_probabilities",
      [](const std::string& params, const std::string& z, const std::string& routes,
         const std::string& scaler) {
        OfferSet offers;
        for (const auto& r : Json::parse(routes)) offers.push_back(route_from_json(r));
        const WeightVector w =
            compute_weights(params_from_json(Json::parse(params)), features_from_json(Json::parse(z)));
        return choice_probabilities(w, scaler_from_json(Json::parse(scaler)).apply(offers));
      },
      py::arg("params"), py::arg("z"), py::arg("routes"), py::arg("scaler"));

  m.def(
      "generate_dataset",
      [](std::size_t n, std::uint64_t seed, const std::string& params) {
        GeneratorConfig cfg;
        cfg.params = params.empty() ? reference_parameters() : params_from_json(Json::parse(params));
        cfg.seed = seed;
        return dataset_to_jsonl(generate_dataset(cfg, n));
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("params") = "");

  py::class_<Posterior>(m, "Posterior")
      .def_property_readonly("particles",
                             [](const Posterior& p) { return p.particles.particles; })
      .def_property_readonly("day", [](const Posterior& p) { return p.particles.day; })
      .def_property_readonly("scaler",
                             [](const Posterior& p) { return scaler_to_json(p.scaler).dump(); })
      .def("mean", [](const Posterior& p) { return params_to_json(posterior_mean(p.particles)).dump(); })
      .def(
          "summary",
          [](const Posterior& p, double level) {
            return summary_to_json(posterior_summary(p.particles, level)).dump();
          },
          py::arg("level") = 0.9)
      .def("save",
           [](const Posterior& p, const std::string& path) {
             save_particles(p.particles, p.scaler, std::filesystem::path(path));
           })
      .def_static("load", [](const std::string& path) {
        LoadedParticles l = load_particles(std::filesystem::path(path));
        return Posterior{std::move(l.particles), l.scaler};
      });

  m.def(
      "fit_static",
      [](const std::string& jsonl, int warmup, int samples, std::uint64_t seed) {
        Dataset d = dataset_from_jsonl(jsonl);
        McmcConfig cfg;
        cfg.n_warmup = warmup;
        cfg.n_samples = samples;
        cfg.seed = seed;
        const Scaler scaler = fit_scaler(d.observations);
        Posterior p{fit_static(d, cfg), scaler};
        return p;
      },
      py::arg("data"), py::arg("warmup") = 500, py::arg("samples") = 1000, py::arg("seed") = 0,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "evaluate",
      [](const Posterior& p, const std::string& jsonl) {
        const Dataset d = dataset_from_jsonl(jsonl);
        return evaluate_accuracy(posterior_mean(p.particles), p.scaler, d.observations);
      },
      py::arg("posterior"), py::arg("data"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
