#include "plroute/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "plroute/errors.hpp"

namespace plroute {

double StandardNormalPrior::log_density(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const {
  if (a.size() != static_cast<Eigen::Index>(dim_)) {
    throw ValidationError("prior dimension mismatch");
  }
  grad = -a;
  return -0.5 * a.squaredNorm() -
         0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi);
}

ChoiceLikelihood::ChoiceLikelihood(std::span<const Observation> observations,
                                   std::span<const double> weights, const Scaler& scaler) {
  if (!weights.empty() && weights.size() != observations.size()) {
    throw ValidationError("observation weights must match the batch size");
  }
  if (!observations.empty() && !scaler.fitted()) {
    throw StateError("scaler has not been fitted");
  }
  offset_.push_back(0);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const double eta = weights.empty() ? 1.0 : weights[i];
    if (!std::isfinite(eta) || eta < 0.0) {
      throw ValidationError("observation weight " + std::to_string(i) +
                            " must be finite and nonnegative");
    }
    if (eta == 0.0) continue;
    const Observation& obs = observations[i];
    obs.validate();
    z_.insert(z_.end(), obs.features.z.begin(), obs.features.z.end());
    for (const auto& r : obs.offers) {
      const RouteAttributes s = scaler.apply(r);
      routes_.push_back(s.t);
      routes_.push_back(s.c);
      routes_.push_back(s.tw);
    }
    offset_.push_back(offset_.back() + obs.offers.size());
    choice_.push_back(obs.choice);
    eta_.push_back(eta);
    source_index_.push_back(i);
  }
}

double ChoiceLikelihood::evaluate(const Eigen::VectorXd& a, Eigen::VectorXd* grad) const {
  if (a.size() != static_cast<Eigen::Index>(kParamDim)) {
    throw ValidationError("parameter vector must have 14 entries");
  }
  if (grad != nullptr) grad->setZero(static_cast<Eigen::Index>(kParamDim));

  std::vector<double> v;
  double total = 0.0;
  for (std::size_t i = 0; i < choice_.size(); ++i) {
    const double* z = &z_[i * kNumFeatures];
    double s2 = 0.0;
    double s3 = 0.0;
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      s2 += a[static_cast<Eigen::Index>(k)] * z[k];
      s3 += a[static_cast<Eigen::Index>(kNumFeatures + k)] * z[k];
    }
    const double m = std::max({0.0, s2, s3});
    const double e1 = std::exp(-m);
    const double e2 = std::exp(s2 - m);
    const double e3 = std::exp(s3 - m);
    const double norm = e1 + e2 + e3;
    const double w1 = e1 / norm;
    const double w2 = e2 / norm;
    const double w3 = e3 / norm;

    const std::size_t begin = offset_[i];
    const std::size_t n_routes = offset_[i + 1] - begin;
    const double* r = &routes_[begin * kNumAttributes];
    v.resize(n_routes);
    double vmax = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < n_routes; ++l) {
      v[l] = -(w1 * r[3 * l] + w2 * r[3 * l + 1] + w3 * r[3 * l + 2]);
      vmax = std::max(vmax, v[l]);
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < n_routes; ++l) {
      v[l] = std::exp(v[l] - vmax);  // unnormalized probabilities from here on
      sum += v[l];
    }
    const auto c = static_cast<std::size_t>(choice_[i]);
    const double ll = -(w1 * r[3 * c] + w2 * r[3 * c + 1] + w3 * r[3 * c + 2]) - vmax -
                      std::log(sum);
    if (!std::isfinite(ll)) {
      throw NumericError("non-finite log-likelihood at observation " +
                         std::to_string(source_index_[i]));
    }
    const double eta = eta_[i];
    total += eta * ll;

    if (grad != nullptr) {
      // d ll / d w_j = -(r_c,j - E_p[r_j])
      double mean_t = 0.0;
      double mean_c = 0.0;
      double mean_w = 0.0;
      for (std::size_t l = 0; l < n_routes; ++l) {
        const double p = v[l] / sum;
        mean_t += p * r[3 * l];
        mean_c += p * r[3 * l + 1];
        mean_w += p * r[3 * l + 2];
      }
      const double g1 = -(r[3 * c] - mean_t);
      const double g2 = -(r[3 * c + 1] - mean_c);
      const double g3 = -(r[3 * c + 2] - mean_w);
      const double gbar = w1 * g1 + w2 * g2 + w3 * g3;
      // softmax Jacobian: d ll / d s_j = w_j (g_j - gbar)
      const double ds2 = eta * w2 * (g2 - gbar);
      const double ds3 = eta * w3 * (g3 - gbar);
      for (std::size_t k = 0; k < kNumFeatures; ++k) {
        (*grad)[static_cast<Eigen::Index>(k)] += ds2 * z[k];
        (*grad)[static_cast<Eigen::Index>(kNumFeatures + k)] += ds3 * z[k];
      }
    }
  }
  return total;
}

LogPosterior log_posterior_and_gradient(const ParameterMatrix& params,
                                        std::span<const Observation> batch,
                                        std::span<const double> weights,
                                        const PriorDensity& prior, const Scaler& scaler) {
  if (prior.dim() != kParamDim) throw ValidationError("prior must be 14-dimensional");
  const ChoiceLikelihood likelihood(batch, weights, scaler);
  const Eigen::VectorXd a = params.flatten();
  LogPosterior out;
  out.value = likelihood.evaluate(a, &out.gradient);
  Eigen::VectorXd prior_grad;
  const double lp = prior.log_density(a, prior_grad);
  if (!std::isfinite(lp)) throw NumericError("non-finite prior log-density");
  out.value += lp;
  out.gradient += prior_grad;
  return out;
}

}  // namespace plroute
