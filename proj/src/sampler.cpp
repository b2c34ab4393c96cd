#include "plroute/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plroute/errors.hpp"
#include "plroute/random.hpp"

namespace plroute {

void McmcConfig::validate() const {
  if (n_warmup < 1) throw ValidationError("n_warmup must be positive");
  if (n_samples < 1) throw ValidationError("n_samples must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ValidationError("target_accept must lie in (0, 1)");
  }
  if (max_tree_depth < 1) throw ValidationError("max_tree_depth must be positive");
}

double SampleChain::divergence_rate() const {
  if (diagnostics.empty()) return 0.0;
  const auto n = std::count_if(diagnostics.begin(), diagnostics.end(),
                               [](const TransitionInfo& t) { return t.divergent; });
  return static_cast<double>(n) / static_cast<double>(diagnostics.size());
}

double SampleChain::mean_accept_stat() const {
  if (diagnostics.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : diagnostics) s += t.accept_stat;
  return s / static_cast<double>(diagnostics.size());
}

double SampleChain::mean_tree_depth() const {
  if (diagnostics.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : diagnostics) s += t.tree_depth;
  return s / static_cast<double>(diagnostics.size());
}

namespace {

constexpr double kMaxEnergyError = 1000.0;

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd rho;
  Eigen::VectorXd grad;
  double logp = 0.0;
};

struct Subtree {
  PhasePoint minus;  // earliest point in trajectory time
  PhasePoint plus;   // latest point in trajectory time
  PhasePoint proposal;
  double log_sum_weight = -std::numeric_limits<double>::infinity();
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool uturn = false;
};

bool is_uturn(const PhasePoint& minus, const PhasePoint& plus) {
  const Eigen::VectorXd span = plus.theta - minus.theta;
  return span.dot(minus.rho) < 0.0 || span.dot(plus.rho) < 0.0;
}

class Integrator {
 public:
  explicit Integrator(const TargetDensity& target) : target_(target) {}

  /// One leapfrog step; returns false when the density could not be evaluated.
  bool step(const PhasePoint& from, double eps, PhasePoint& to) {
    to.rho = from.rho + 0.5 * eps * from.grad;
    to.theta = from.theta + eps * to.rho;
    if (!evaluate(to)) return false;
    to.rho += 0.5 * eps * to.grad;
    return true;
  }

  bool evaluate(PhasePoint& p) {
    ++evaluations;
    try {
      p.logp = target_.logp_grad(p.theta, p.grad);
    } catch (const NumericError&) {
      return false;
    }
    return std::isfinite(p.logp) && p.grad.allFinite();
  }

  long long evaluations = 0;

 private:
  const TargetDensity& target_;
};

double hamiltonian(const PhasePoint& p) { return -p.logp + 0.5 * p.rho.squaredNorm(); }

class Nuts {
 public:
  Nuts(const TargetDensity& target, const McmcConfig& config)
      : integrator_(target), config_(config), rng_(make_rng(config.seed, 0)) {}

  TransitionInfo transition(PhasePoint& current, double eps) {
    PhasePoint start = current;
    for (Eigen::Index i = 0; i < start.rho.size(); ++i) start.rho[i] = normal_(rng_);
    const double h0 = hamiltonian(start);

    PhasePoint minus = start;
    PhasePoint plus = start;
    PhasePoint proposal = start;
    double log_sum_weight = 0.0;
    double sum_accept = 0.0;
    int n_leapfrog = 0;
    bool divergent = false;
    int depth = 0;

    for (; depth < config_.max_tree_depth; ++depth) {
      const bool forward = unit_(rng_) < 0.5;
      Subtree sub = forward ? build(plus, depth, eps, h0) : build(minus, depth, -eps, h0);
      sum_accept += sub.sum_accept;
      n_leapfrog += sub.n_leapfrog;
      if (sub.divergent) {
        divergent = true;
        break;
      }
      if (sub.uturn) break;

      // Biased progressive sampling favours the newer half of the trajectory.
      if (std::log(unit_(rng_)) < sub.log_sum_weight - log_sum_weight) {
        proposal = sub.proposal;
      }
      log_sum_weight = log_add_exp(log_sum_weight, sub.log_sum_weight);
      if (forward) {
        plus = std::move(sub.plus);
      } else {
        minus = std::move(sub.minus);
      }
      if (is_uturn(minus, plus)) {
        ++depth;
        break;
      }
    }

    current = std::move(proposal);
    TransitionInfo info;
    info.tree_depth = depth;
    info.n_leapfrog = n_leapfrog;
    info.accept_stat = n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
    info.divergent = divergent;
    return info;
  }

  double initial_step_size(const PhasePoint& current) {
    double eps = 1.0;
    PhasePoint start = current;
    auto log_accept = [&](double e) {
      for (Eigen::Index i = 0; i < start.rho.size(); ++i) start.rho[i] = normal_(rng_);
      PhasePoint next;
      if (!integrator_.step(start, e, next)) return -std::numeric_limits<double>::infinity();
      const double delta = hamiltonian(start) - hamiltonian(next);
      return std::isfinite(delta) ? delta : -std::numeric_limits<double>::infinity();
    };
    double delta = log_accept(eps);
    const int direction = delta > std::log(0.8) ? 1 : -1;
    for (int i = 0; i < 100; ++i) {
      eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
      delta = log_accept(eps);
      if (direction == 1 && !(delta > std::log(0.8))) break;
      if (direction == -1 && delta > std::log(0.8)) break;
      if (eps < 1e-10 || eps > 1e7) break;
    }
    return eps;
  }

  Integrator& integrator() { return integrator_; }

 private:
  Subtree leaf(const PhasePoint& from, double eps, double h0) {
    Subtree t;
    t.n_leapfrog = 1;
    PhasePoint next;
    const bool ok = integrator_.step(from, eps, next);
    const double h = ok ? hamiltonian(next) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(h) || h - h0 > kMaxEnergyError) {
      t.divergent = true;
      t.sum_accept = 0.0;
      return t;
    }
    t.log_sum_weight = h0 - h;
    t.sum_accept = std::min(1.0, std::exp(h0 - h));
    t.minus = next;
    t.plus = next;
    t.proposal = std::move(next);
    return t;
  }

  Subtree build(const PhasePoint& from, int depth, double eps, double h0) {
    if (depth == 0) return leaf(from, eps, h0);
    Subtree first = build(from, depth - 1, eps, h0);
    if (first.divergent || first.uturn) return first;
    const PhasePoint& edge = eps > 0 ? first.plus : first.minus;
    Subtree second = build(edge, depth - 1, eps, h0);

    Subtree out;
    out.n_leapfrog = first.n_leapfrog + second.n_leapfrog;
    out.sum_accept = first.sum_accept + second.sum_accept;
    if (second.divergent || second.uturn) {
      out.divergent = second.divergent;
      out.uturn = second.uturn;
      return out;
    }
    out.log_sum_weight = log_add_exp(first.log_sum_weight, second.log_sum_weight);
    const bool take_second =
        std::log(unit_(rng_)) < second.log_sum_weight - out.log_sum_weight;
    out.proposal = take_second ? std::move(second.proposal) : std::move(first.proposal);
    if (eps > 0) {
      out.minus = std::move(first.minus);
      out.plus = std::move(second.plus);
    } else {
      out.minus = std::move(second.minus);
      out.plus = std::move(first.plus);
    }
    out.uturn = is_uturn(out.minus, out.plus);
    return out;
  }

  Integrator integrator_;
  const McmcConfig& config_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Dual averaging of log step size towards a target acceptance statistic.
class StepSizeAdapter {
 public:
  StepSizeAdapter(double eps0, double target) : mu_(std::log(10.0 * eps0)), target_(target) {}

  double update(double accept_stat) {
    ++m_;
    const double m = static_cast<double>(m_);
    const double eta = 1.0 / (m + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(m) / kGamma;
    const double w = std::pow(m, -kKappa);
    x_bar_ = w * x + (1.0 - w) * x_bar_;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_;
  double target_;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  long m_ = 0;
};

}  // namespace

SampleChain nuts_sample(const TargetDensity& target, const Eigen::VectorXd& init,
                        const McmcConfig& config) {
  config.validate();
  if (target.dim == 0 || !target.logp_grad) throw ValidationError("invalid target density");
  if (init.size() != static_cast<Eigen::Index>(target.dim)) {
    throw ValidationError("initial point has the wrong dimension");
  }

  Nuts nuts(target, config);
  PhasePoint current;
  current.theta = init;
  current.rho = Eigen::VectorXd::Zero(init.size());
  if (!nuts.integrator().evaluate(current)) {
    throw SamplerError("log-density is not finite at the initial point");
  }

  double eps = nuts.initial_step_size(current);
  StepSizeAdapter adapter(eps, config.target_accept);
  for (int it = 0; it < config.n_warmup; ++it) {
    const TransitionInfo info = nuts.transition(current, eps);
    eps = adapter.update(info.accept_stat);
  }
  eps = adapter.final_step_size();

  SampleChain chain;
  chain.draws.resize(config.n_samples, static_cast<Eigen::Index>(target.dim));
  chain.diagnostics.reserve(static_cast<std::size_t>(config.n_samples));
  chain.adapted_step_size = eps;
  for (int it = 0; it < config.n_samples; ++it) {
    chain.diagnostics.push_back(nuts.transition(current, eps));
    chain.draws.row(it) = current.theta.transpose();
  }
  chain.gradient_evaluations = nuts.integrator().evaluations;

  if (chain.divergence_rate() > 0.5) {
    std::ostringstream msg;
    msg << "sampler diverged on " << chain.divergence_rate() * 100.0
        << "% of transitions (step size " << eps << ", mean accept "
        << chain.mean_accept_stat() << ")";
    throw SamplerError(msg.str());
  }
  return chain;
}

}  // namespace plroute
