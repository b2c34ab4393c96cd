#include "plroute/static_inference.hpp"

#include <algorithm>
#include <cmath>

#include "plroute/errors.hpp"
#include "plroute/likelihood.hpp"

namespace plroute {

Scaler Dataset::scaler_or_fit() const {
  if (scaler && scaler->fitted()) return *scaler;
  return fit_scaler(observations);
}

ParameterMatrix ParticleSet::particle(std::size_t i) const {
  return ParameterMatrix::from_flat(particles.row(static_cast<Eigen::Index>(i)).transpose());
}

ChainDiagnostics summarize_chain(const SampleChain& chain) {
  ChainDiagnostics d;
  d.step_size = chain.adapted_step_size;
  d.divergence_rate = chain.divergence_rate();
  d.mean_accept_stat = chain.mean_accept_stat();
  d.mean_tree_depth = chain.mean_tree_depth();
  d.gradient_evaluations = chain.gradient_evaluations;
  return d;
}

ParticleSet fit_static(const Dataset& data, const McmcConfig& config) {
  config.validate();
  const StandardNormalPrior prior(kParamDim);
  // A fitted scaler is only needed when there is data to standardize.
  const Scaler scaler = data.empty() ? Scaler({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0})
                                     : data.scaler_or_fit();
  const ChoiceLikelihood likelihood(data.observations, {}, scaler);

  TargetDensity target;
  target.dim = kParamDim;
  target.logp_grad = [&](const Eigen::VectorXd& a, Eigen::VectorXd& grad) {
    const double ll = likelihood.evaluate(a, &grad);
    Eigen::VectorXd prior_grad;
    const double lp = prior.log_density(a, prior_grad);
    grad += prior_grad;
    return ll + lp;
  };

  const SampleChain chain =
      nuts_sample(target, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kParamDim)), config);
  ParticleSet out;
  out.particles = chain.draws;
  out.diagnostics = summarize_chain(chain);
  return out;
}

PosteriorSummary posterior_summary(const ParticleSet& samples, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie in (0, 1)");
  const Eigen::Index n = samples.particles.rows();
  if (n < 1) throw ValidationError("cannot summarize an empty sample");
  const Eigen::Index d = samples.particles.cols();
  PosteriorSummary s;
  s.level = level;
  s.mean = samples.particles.colwise().mean().transpose();
  s.ci_low.resize(d);
  s.ci_high.resize(d);
  const double lo_q = 0.5 * (1.0 - level);
  const double hi_q = 1.0 - lo_q;
  std::vector<double> col(static_cast<std::size_t>(n));
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, col.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return col[lo] + frac * (col[hi] - col[lo]);
  };
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = samples.particles(i, j);
    std::sort(col.begin(), col.end());
    // Clamp so rounding in the mean never pokes outside the interval.
    s.ci_low[j] = std::min(quantile(lo_q), s.mean[j]);
    s.ci_high[j] = std::max(quantile(hi_q), s.mean[j]);
  }
  return s;
}

ParameterMatrix posterior_mean(const ParticleSet& samples) {
  if (samples.particles.rows() < 1) throw ValidationError("cannot average an empty sample");
  return ParameterMatrix::from_flat(samples.particles.colwise().mean().transpose());
}

std::vector<std::vector<double>> predict_probabilities(const ParameterMatrix& point,
                                                       const Scaler& scaler,
                                                       std::span<const Observation> data) {
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (const auto& obs : data) {
    out.push_back(choice_probabilities(compute_weights(point, obs.features),
                                       scaler.apply(obs.offers)));
  }
  return out;
}

double evaluate_accuracy(const ParameterMatrix& point, const Scaler& scaler,
                         std::span<const Observation> validation) {
  if (validation.empty()) throw ValidationError("validation set is empty");
  std::size_t hits = 0;
  std::vector<double> v;
  for (const auto& obs : validation) {
    const WeightVector w = compute_weights(point, obs.features);
    v.resize(obs.offers.size());
    // The softmax is monotone, so the most probable route maximizes value.
    for (std::size_t l = 0; l < obs.offers.size(); ++l) {
      v[l] = route_value(w, scaler.apply(obs.offers[l]));
    }
    if (argmax(v) == static_cast<std::size_t>(obs.choice)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(validation.size());
}

}  // namespace plroute
