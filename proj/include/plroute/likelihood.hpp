#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "plroute/model.hpp"

namespace plroute {

/// Log-density with gradient over R^d.
class PriorDensity {
 public:
  virtual ~PriorDensity() = default;
  virtual std::size_t dim() const = 0;
  /// Writes the gradient into `grad` (resized to dim()) and returns log p(a).
  virtual double log_density(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const = 0;
};

/// N(0, I_d), normalizing constant included.
class StandardNormalPrior final : public PriorDensity {
 public:
  explicit StandardNormalPrior(std::size_t dim = kParamDim) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  double log_density(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const override;

 private:
  std::size_t dim_;
};

/// Weighted choice log-likelihood over a batch, with the attributes
/// standardized once up front. Observations with weight 0 are dropped.
class ChoiceLikelihood {
 public:
  ChoiceLikelihood() = default;
  /// `weights` may be empty (all ones) or match `observations` in length.
  ChoiceLikelihood(std::span<const Observation> observations, std::span<const double> weights,
                   const Scaler& scaler);

  std::size_t size() const { return choice_.size(); }

  /// Sum_i eta_i log p_i(a). If `grad` is non-null it receives the gradient.
  /// Throws NumericError naming the input index of a non-finite term.
  double evaluate(const Eigen::VectorXd& a, Eigen::VectorXd* grad) const;

 private:
  std::vector<double> z_;           // size() x kNumFeatures
  std::vector<double> routes_;      // concatenated standardized routes, 3 per route
  std::vector<std::size_t> offset_; // route offsets, size() + 1
  std::vector<int> choice_;
  std::vector<double> eta_;
  std::vector<std::size_t> source_index_;
};

struct LogPosterior {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Sum_i eta_i log p(choice_i | a) + log prior(a) and its exact gradient.
LogPosterior log_posterior_and_gradient(const ParameterMatrix& params,
                                        std::span<const Observation> batch,
                                        std::span<const double> weights,
                                        const PriorDensity& prior, const Scaler& scaler);

}  // namespace plroute
