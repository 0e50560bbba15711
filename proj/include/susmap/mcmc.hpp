#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "susmap/epimodel.hpp"
#include "susmap/rng.hpp"

namespace susmap {

struct McmcConfig {
  int n_iter = 50000;
  int burn_in = 20000;
  int thin = 10;
  std::uint64_t seed = 0;
  double target_scalar = 0.44;   // single-site acceptance target
  double target_block = 0.234;   // block-proposal acceptance target
  double init_step_scalar = 0.5;
  double init_step_block = 0.1;
  bool exclude_infected_prev = false;
  int max_dense_units = 1500;    // capacity guard for the full-GP sampler

  // Diagnostic hooks: prior-only sampling and pinned hyperparameters, used
  // by calibration tests and the prior/posterior oracles.
  bool use_likelihood = true;
  std::optional<double> fix_alpha;
  std::optional<double> fix_sigma;
  std::optional<double> fix_rho;
  std::optional<double> fix_omega;
  std::optional<double> fix_tau;

  void validate() const {
    if (n_iter <= 0 || burn_in < 0 || burn_in >= n_iter)
      fail(errc::invalid_input, "require 0 <= burn_in < n_iter");
    if (thin < 1) fail(errc::invalid_input, "thin must be >= 1");
  }
};

// Robbins-Monro step-size adaptation toward a target acceptance rate.
// Adapts only until frozen (end of burn-in); the scale is constant after.
class AdaptiveScale {
 public:
  AdaptiveScale() = default;
  AdaptiveScale(double init_scale, double target)
      : log_scale_(std::log(init_scale)), target_(target) {}

  void observe(bool accepted) {
    ++proposed_;
    accepted_ += accepted ? 1 : 0;
    if (frozen_) return;
    ++adapt_count_;
    const double eta = 1.0 / std::pow(static_cast<double>(adapt_count_), 0.6);
    log_scale_ += eta * ((accepted ? 1.0 : 0.0) - target_);
  }

  void freeze() { frozen_ = true; }
  double scale() const { return std::exp(log_scale_); }
  double acceptance_rate() const {
    return proposed_ ? static_cast<double>(accepted_) / proposed_ : 0.0;
  }

 private:
  double log_scale_ = 0.0;
  double target_ = 0.44;
  long long accepted_ = 0;
  long long proposed_ = 0;
  long long adapt_count_ = 0;
  bool frozen_ = false;
};

// Iteration bookkeeping shared by the samplers: record at burn_in,
// burn_in + thin, ...
struct ChainRecorder {
  int n_iter, burn_in, thin;
  int n_recorded() const { return (n_iter - burn_in + thin - 1) / thin; }
  bool record_at(int iter) const { return iter >= burn_in && (iter - burn_in) % thin == 0; }
  int slot(int iter) const { return (iter - burn_in) / thin; }
};

// Post-burn-in, thinned draws. beta_draws holds one row per recorded
// sample; delta_draws is only populated by the basis-weight sampler.
struct Chain {
  Eigen::MatrixXd beta_draws;
  Eigen::MatrixXd delta_draws;
  std::map<std::string, Eigen::VectorXd> scalars;
  Eigen::VectorXd log_post;
  std::map<std::string, double> accept_rates;
  McmcConfig config;

  int n_samples() const { return static_cast<int>(beta_draws.rows()); }
  int n_units() const { return static_cast<int>(beta_draws.cols()); }
};

struct ParamSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  std::vector<ParamSummary> beta;          // per unit
  std::map<std::string, ParamSummary> hyper;
};

// Independent-susceptibility posterior: single-site random-walk Metropolis
// on log beta_i against the exponential(alpha) prior, with alpha itself
// updated on its Uniform(0,5) support. gamma and the kernel come fixed
// from the two-step estimates.
Chain fit_ism(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
              const BackgroundRate& gamma, const McmcConfig& cfg);

// Full-GP posterior: elementwise Metropolis on log beta with the
// N(omega, sigma^2 C(rho)) prior, sigma/rho/omega updated on transformed
// scales, dense factorizations refreshed on sigma/rho acceptance.
Chain fit_sdsm_full(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
                    const BackgroundRate& gamma, const McmcConfig& cfg);

PosteriorSummary posterior_summary(const Chain& chain);

ParamSummary summarize_series(const Eigen::VectorXd& draws);

// Geyer initial-positive-sequence effective sample size.
double ess_initial_positive_sequence(const Eigen::VectorXd& draws);

// Type-7 (linear interpolation) quantile of an unsorted sample.
double sample_quantile(Eigen::VectorXd values, double q);

// Shared transform helpers for bounded supports.
namespace transforms {
inline double logit(double u) { return std::log(u / (1.0 - u)); }
inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }
// x in (lo, hi) <-> unbounded s; log-Jacobian of x(s).
inline double to_unbounded(double x, double lo, double hi) { return logit((x - lo) / (hi - lo)); }
inline double to_bounded(double s, double lo, double hi) { return lo + (hi - lo) * sigmoid(s); }
inline double log_jacobian(double x, double lo, double hi) {
  return std::log(x - lo) + std::log(hi - x) - std::log(hi - lo);
}
}  // namespace transforms

// Data-informed starting field: per-unit incidence regularized by 0.5/T,
// divided by the mean positive kernel force.
Eigen::VectorXd initial_beta(const LikelihoodTable& table);

}  // namespace susmap
