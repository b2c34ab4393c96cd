#pragma once

// No-U-Turn sampler with an identity mass matrix, multinomial trajectory
// sampling and dual-averaging step-size adaptation during warmup.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace plroute {

struct TargetDensity {
  std::size_t dim = 0;
  /// Returns log p(x) and writes its gradient. May throw NumericError,
  /// which the sampler treats as a divergent point.
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)> logp_grad;
};

struct McmcConfig {
  int n_warmup = 500;
  int n_samples = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TransitionInfo {
  int tree_depth = 0;
  int n_leapfrog = 0;
  double accept_stat = 0.0;
  bool divergent = false;
};

struct SampleChain {
  Eigen::MatrixXd draws;  // n_samples x dim
  std::vector<TransitionInfo> diagnostics;
  double adapted_step_size = 0.0;
  /// Trajectory-point selection rule in use.
  std::string selection = "multinomial";

  double divergence_rate() const;
  double mean_accept_stat() const;
  double mean_tree_depth() const;
  /// Total gradient evaluations across warmup and sampling.
  long long gradient_evaluations = 0;
};

/// Runs one chain. Deterministic given (target, init, config).
/// Throws SamplerError if the density is not finite at `init` or if more
/// than half of the post-warmup transitions diverge.
SampleChain nuts_sample(const TargetDensity& target, const Eigen::VectorXd& init,
                        const McmcConfig& config);

}  // namespace plroute
