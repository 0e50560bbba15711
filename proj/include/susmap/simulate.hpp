#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "susmap/epimodel.hpp"
#include "susmap/rng.hpp"
#include "susmap/spatial.hpp"

namespace susmap {

// Hyperparameters of the log-susceptibility Gaussian process. The
// covariance is the decaying exponential sigma2 * exp(-d/rho).
struct GpHyperparams {
  double omega = -0.5;  // mean of log beta
  double sigma2 = 1.0;  // marginal variance
  double rho = 400.0;   // range, km

  void validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail(errc::invalid_input, "sigma2 must be > 0");
    if (!(rho > 0.0) || !std::isfinite(rho)) fail(errc::invalid_input, "rho must be > 0");
    if (!std::isfinite(omega)) fail(errc::invalid_input, "omega must be finite");
  }
};

// Mean of the exponential prior on beta (mean parameterization: density
// (1/alpha) exp(-beta/alpha)).
struct IsmPrior {
  double alpha = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(errc::invalid_input, "alpha must be > 0");
  }
};

enum class FieldKind { independent, gp };

struct SimScenario {
  KernelParams kernel;
  double gamma = 0.001;
  int t_steps = 100;
  FieldKind field_kind = FieldKind::gp;
  GpHyperparams gp;
  IsmPrior ism;
  std::uint64_t seed = 0;
  double p0 = 0.05;                  // initial per-unit infection probability
  std::vector<int> initial_infected; // when nonempty, overrides p0

  void validate() const;
};

Eigen::MatrixXd cov_matrix(const DistanceMatrix& d, const GpHyperparams& gp);

// Lower Cholesky factor with escalating diagonal jitter (1e-8, x10, cap
// 1e-4); throws a numerical error with diagnostics past the cap.
struct CholFactor {
  Eigen::MatrixXd L;
  double jitter = 0.0;
};
CholFactor cholesky_with_jitter(const Eigen::MatrixXd& sigma);

// log beta = omega + L z with z iid standard normal.
SusceptibilityField sample_beta_gp(const DistanceMatrix& d, const GpHyperparams& gp,
                                   RngStream& rng);

SusceptibilityField sample_beta_independent(const IsmPrior& prior, int n, RngStream& rng);

// Forward SIS simulation. Column 1 comes from the initial-condition spec;
// each later cell draws its uniform from a (unit, t)-keyed stream, so the
// panel is identical regardless of evaluation order.
OutbreakPanel simulate_panel(const SimScenario& scenario, const DistanceMatrix& d,
                             const SusceptibilityField& beta);

// Stream wiring for a whole scenario: "field", "init" and "cells" streams
// all derive from the scenario seed, so changing T never perturbs the field.
struct SimulationResult {
  SusceptibilityField beta_true;
  OutbreakPanel panel;
};
SimulationResult simulate_scenario(const SimScenario& scenario, const DistanceMatrix& d);

// GP conditional mean of log beta at test locations given values at train
// locations (kriging predictor; sigma2 cancels in the mean).
Eigen::VectorXd gp_conditional_mean(const DistanceMatrix& d_full, const GpHyperparams& gp,
                                    const std::vector<int>& train_idx,
                                    const std::vector<int>& test_idx,
                                    const Eigen::VectorXd& x_train);

}  // namespace susmap
