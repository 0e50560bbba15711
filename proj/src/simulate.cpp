#include "susmap/simulate.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

namespace susmap {

void SimScenario::validate() const {
  kernel.validate();
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail(errc::invalid_input, "gamma must be >= 0");
  if (t_steps < 2) fail(errc::invalid_input, "scenario needs T >= 2");
  if (field_kind == FieldKind::gp) gp.validate();
  else ism.validate();
  if (initial_infected.empty() && !(p0 >= 0.0 && p0 <= 1.0))
    fail(errc::invalid_input, "p0 must be a probability");
}

Eigen::MatrixXd cov_matrix(const DistanceMatrix& d, const GpHyperparams& gp) {
  gp.validate();
  return gp.sigma2 * (-d.d / gp.rho).array().exp().matrix();
}

CholFactor cholesky_with_jitter(const Eigen::MatrixXd& sigma) {
  const double scale = sigma.diagonal().maxCoeff();
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd work = sigma;
    if (jitter > 0.0) work.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
    if (jitter == 0.0) jitter = 1e-8;
    else if (jitter < 1e-4) jitter = std::min(jitter * 10.0, 1e-4);
    else
      fail(errc::numerical, "covariance factorization failed at max jitter 1e-4 (n=" +
                                std::to_string(sigma.rows()) + ", scale=" +
                                std::to_string(scale) + ")");
  }
}

SusceptibilityField sample_beta_gp(const DistanceMatrix& d, const GpHyperparams& gp,
                                   RngStream& rng) {
  const Eigen::MatrixXd sigma = cov_matrix(d, gp);
  const CholFactor chol = cholesky_with_jitter(sigma);
  const int n = d.size();
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  Eigen::VectorXd log_beta = Eigen::VectorXd::Constant(n, gp.omega) + chol.L * z;
  return SusceptibilityField(log_beta.array().exp().matrix());
}

SusceptibilityField sample_beta_independent(const IsmPrior& prior, int n, RngStream& rng) {
  prior.validate();
  Eigen::VectorXd beta(n);
  for (int i = 0; i < n; ++i) beta[i] = rng.exponential(prior.alpha);
  return SusceptibilityField(std::move(beta));
}

OutbreakPanel simulate_panel(const SimScenario& scenario, const DistanceMatrix& d,
                             const SusceptibilityField& beta) {
  scenario.validate();
  const int n = d.size();
  if (beta.size() != n) fail(errc::invalid_input, "beta length does not match units");
  const int t_steps = scenario.t_steps;

  Eigen::MatrixXd kd(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kd(i, j) = kernel_eval(d.d(i, j), scenario.kernel);

  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(n, t_steps);
  RngStream init = RngStream::from(scenario.seed, "init");
  RngStream cells = RngStream::from(scenario.seed, "cells");

  if (!scenario.initial_infected.empty()) {
    y.col(0).setZero();
    for (int i : scenario.initial_infected) {
      if (i < 0 || i >= n) fail(errc::index, "initial infected unit out of range");
      y(i, 0) = 1;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      RngStream s = init.sub(static_cast<std::uint64_t>(i));
      y(i, 0) = s.uniform() < scenario.p0 ? 1 : 0;
    }
  }

  std::vector<int> infected;
  for (int t = 2; t <= t_steps; ++t) {
    infected.clear();
    for (int j = 0; j < n; ++j)
      if (y(j, t - 2) == 1) infected.push_back(j);
    for (int i = 0; i < n; ++i) {
      double mass = 0.0;
      for (int j : infected) mass += kd(i, j);
      const double h = beta.beta[i] * mass + scenario.gamma;
      const double p = -std::expm1(-h);
      RngStream s = cells.sub(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t));
      y(i, t - 1) = s.uniform() < p ? 1 : 0;
    }
  }
  return OutbreakPanel(std::move(y));
}

SimulationResult simulate_scenario(const SimScenario& scenario, const DistanceMatrix& d) {
  scenario.validate();
  RngStream field = RngStream::from(scenario.seed, "field");
  SusceptibilityField beta = scenario.field_kind == FieldKind::gp
                                 ? sample_beta_gp(d, scenario.gp, field)
                                 : sample_beta_independent(scenario.ism, d.size(), field);
  OutbreakPanel panel = simulate_panel(scenario, d, beta);
  return {std::move(beta), std::move(panel)};
}

Eigen::VectorXd gp_conditional_mean(const DistanceMatrix& d_full, const GpHyperparams& gp,
                                    const std::vector<int>& train_idx,
                                    const std::vector<int>& test_idx,
                                    const Eigen::VectorXd& x_train) {
  gp.validate();
  const int n_tr = static_cast<int>(train_idx.size());
  const int n_te = static_cast<int>(test_idx.size());
  if (x_train.size() != n_tr) fail(errc::invalid_input, "train values do not match train ids");
  if (n_tr == 0 || n_te == 0) fail(errc::invalid_input, "kriging needs nonempty train and test");

  Eigen::MatrixXd c_tr(n_tr, n_tr);
  for (int a = 0; a < n_tr; ++a)
    for (int b = 0; b < n_tr; ++b)
      c_tr(a, b) = std::exp(-d_full.d(train_idx[a], train_idx[b]) / gp.rho);
  Eigen::MatrixXd c_te(n_te, n_tr);
  for (int a = 0; a < n_te; ++a)
    for (int b = 0; b < n_tr; ++b)
      c_te(a, b) = std::exp(-d_full.d(test_idx[a], test_idx[b]) / gp.rho);

  const CholFactor chol = cholesky_with_jitter(c_tr);
  Eigen::VectorXd centered = x_train.array() - gp.omega;
  Eigen::VectorXd w = chol.L.triangularView<Eigen::Lower>().solve(centered);
  w = chol.L.transpose().triangularView<Eigen::Upper>().solve(w);
  return (c_te * w).array() + gp.omega;
}

}  // namespace susmap
