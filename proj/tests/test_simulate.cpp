#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>

#include "susmap/simulate.hpp"
#include "test_support.hpp"

using namespace susmap;

TEST_CASE("covariance matrix values and shape") {
  const auto units = testsupport::random_units(5, 400.0, 400.0, 5);
  DistanceMatrix d = pairwise_distances(units);
  GpHyperparams gp{-1.0, 2.5, 150.0};
  Eigen::MatrixXd sigma = cov_matrix(d, gp);

  for (int i = 0; i < 5; ++i) CHECK(sigma(i, i) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sigma.isApprox(sigma.transpose(), 1e-15));

  // One range length decays to exp(-1).
  DistanceMatrix toy;
  toy.d.resize(2, 2);
  toy.d << 0.0, 150.0, 150.0, 0.0;
  Eigen::MatrixXd s2 = cov_matrix(toy, {0.0, 1.0, 150.0});
  CHECK(s2(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("covariance decays strictly with distance") {
  GpHyperparams gp{0.0, 1.0, 300.0};
  DistanceMatrix d;
  d.d.resize(3, 3);
  d.d << 0.0, 10.0, 500.0, 10.0, 0.0, 200.0, 500.0, 200.0, 0.0;
  Eigen::MatrixXd sigma = cov_matrix(d, gp);
  CHECK(sigma(0, 1) > sigma(1, 2));
  CHECK(sigma(1, 2) > sigma(0, 2));
}

TEST_CASE("factorization with jitter succeeds on coincident points") {
  DistanceMatrix d;
  d.d = Eigen::MatrixXd::Zero(5, 5);  // all points coincide: rank-1 covariance
  Eigen::MatrixXd sigma = cov_matrix(d, {0.0, 1.0, 100.0});
  CholFactor chol = cholesky_with_jitter(sigma);
  CHECK(chol.jitter > 0.0);
  CHECK(chol.jitter <= 1e-4);
  Eigen::MatrixXd rebuilt = chol.L * chol.L.transpose();
  CHECK((rebuilt - sigma).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("GP field: degenerate variance pins the field at exp(omega)") {
  const auto units = testsupport::random_units(8, 300.0, 300.0, 11);
  DistanceMatrix d = pairwise_distances(units);
  GpHyperparams gp{-0.7, 1e-12, 250.0};
  RngStream rng = RngStream::from(123, "field");
  SusceptibilityField beta = sample_beta_gp(d, gp, rng);
  for (int i = 0; i < 8; ++i)
    CHECK(beta.beta[i] == doctest::Approx(std::exp(-0.7)).epsilon(1e-4));
}

TEST_CASE("GP field sampling is deterministic under a fixed seed") {
  const auto units = testsupport::random_units(6, 300.0, 300.0, 12);
  DistanceMatrix d = pairwise_distances(units);
  GpHyperparams gp{-0.5, 1.0, 200.0};
  RngStream a = RngStream::from(77, "field");
  RngStream b = RngStream::from(77, "field");
  SusceptibilityField f1 = sample_beta_gp(d, gp, a);
  SusceptibilityField f2 = sample_beta_gp(d, gp, b);
  CHECK((f1.beta - f2.beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("GP sampler calibration: empirical covariance of log beta") {
  // 5 fixed locations within ~140 km, sigma2=1, rho=400.
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(5, 2);
  coords << 0.0, 0.0, 100.0, 0.0, 0.0, 100.0, 100.0, 100.0, 50.0, 50.0;
  SpatialUnits units({"a", "b", "c", "d", "e"}, coords);
  DistanceMatrix d = pairwise_distances(units);
  GpHyperparams gp{-0.5, 1.0, 400.0};
  Eigen::MatrixXd sigma = cov_matrix(d, gp);

  const int n_draws = 20000;
  RngStream rng = RngStream::from(2024, "field");
  Eigen::MatrixXd draws(n_draws, 5);
  for (int r = 0; r < n_draws; ++r) {
    SusceptibilityField f = sample_beta_gp(d, gp, rng);
    draws.row(r) = f.beta.array().log().transpose();
  }
  Eigen::RowVectorXd mean = draws.colwise().mean();
  Eigen::MatrixXd centered = draws.rowwise() - mean;
  Eigen::MatrixXd emp = centered.transpose() * centered / (n_draws - 1);

  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(emp(i, j) - sigma(i, j)) / std::abs(sigma(i, j)) < 0.05);
}

TEST_CASE("independent field sampling: moments and determinism") {
  IsmPrior prior{0.5};
  RngStream rng = RngStream::from(31, "field");
  const int n = 100000;
  SusceptibilityField f = sample_beta_independent(prior, n, rng);
  const double mean = f.beta.mean();
  const double var = (f.beta.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean - 0.5) / 0.5 < 0.01);
  CHECK(std::abs(var - 0.25) / 0.25 < 0.03);

  RngStream r1 = RngStream::from(32, "field");
  RngStream r2 = RngStream::from(32, "field");
  SusceptibilityField a = sample_beta_independent(prior, 50, r1);
  SusceptibilityField b = sample_beta_independent(prior, 50, r2);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("panel simulation: absorbing extinction at gamma=0") {
  const auto units = testsupport::random_units(10, 200.0, 200.0, 41);
  DistanceMatrix d = pairwise_distances(units);
  SimScenario sc;
  sc.kernel = {50.0, 3.0};
  sc.gamma = 0.0;
  sc.t_steps = 20;
  sc.field_kind = FieldKind::independent;
  sc.ism = {1.0};
  sc.seed = 9;
  sc.p0 = 0.0;  // all-zero initial column
  SusceptibilityField beta(Eigen::VectorXd::Constant(10, 1.0));
  OutbreakPanel panel = simulate_panel(sc, d, beta);
  CHECK(panel.y.cast<int>().sum() == 0);
}

TEST_CASE("panel simulation: background-only rate matches Monte Carlo expectation") {
  const auto units = testsupport::random_units(300, 1000.0, 1000.0, 42);
  DistanceMatrix d = pairwise_distances(units);
  SimScenario sc;
  sc.kernel = {50.0, 3.0};
  sc.gamma = 0.01;
  sc.t_steps = 150;
  sc.field_kind = FieldKind::independent;
  sc.seed = 43;
  sc.p0 = 0.0;
  SusceptibilityField beta(Eigen::VectorXd::Constant(300, 1e-15));
  OutbreakPanel panel = simulate_panel(sc, d, beta);

  double cells = 0.0, hits = 0.0;
  for (int t = 2; t <= sc.t_steps; ++t)
    for (int i = 0; i < 300; ++i) {
      cells += 1.0;
      hits += panel.y(i, t - 1);
    }
  const double target = 1.0 - std::exp(-0.01);
  CHECK(std::abs(hits / cells - target) / target < 0.10);
}

TEST_CASE("panel simulation is bit-identical under a fixed seed") {
  const auto units = testsupport::random_units(20, 300.0, 300.0, 44);
  DistanceMatrix d = pairwise_distances(units);
  SimScenario sc;
  sc.kernel = {60.0, 3.0};
  sc.gamma = 0.005;
  sc.t_steps = 30;
  sc.field_kind = FieldKind::gp;
  sc.gp = {-0.5, 1.0, 300.0};
  sc.seed = 45;
  SimulationResult r1 = simulate_scenario(sc, d);
  SimulationResult r2 = simulate_scenario(sc, d);
  CHECK((r1.beta_true.beta - r2.beta_true.beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.panel.y - r2.panel.y).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("panel respects causality: columns regenerate from the previous column") {
  const auto units = testsupport::random_units(15, 400.0, 400.0, 46);
  DistanceMatrix d = pairwise_distances(units);
  SimScenario sc;
  sc.kernel = {80.0, 3.0};
  sc.gamma = 0.01;
  sc.t_steps = 25;
  sc.field_kind = FieldKind::gp;
  sc.gp = {-0.3, 1.0, 200.0};
  sc.seed = 47;
  SimulationResult r = simulate_scenario(sc, d);

  RngStream cells = RngStream::from(sc.seed, "cells");
  for (int t = 2; t <= sc.t_steps; ++t) {
    for (int i = 0; i < 15; ++i) {
      double mass = 0.0;
      for (int j = 0; j < 15; ++j)
        if (r.panel.y(j, t - 2) == 1) mass += kernel_eval(d.d(i, j), sc.kernel);
      const double p = -std::expm1(-(r.beta_true.beta[i] * mass + sc.gamma));
      RngStream s = cells.sub(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t));
      const int want = s.uniform() < p ? 1 : 0;
      CHECK(r.panel.y(i, t - 1) == want);
    }
  }
}

TEST_CASE("changing T does not perturb the sampled field") {
  const auto units = testsupport::random_units(12, 300.0, 300.0, 48);
  DistanceMatrix d = pairwise_distances(units);
  SimScenario sc;
  sc.kernel = {60.0, 3.0};
  sc.gamma = 0.01;
  sc.field_kind = FieldKind::gp;
  sc.gp = {-0.5, 1.0, 300.0};
  sc.seed = 49;
  sc.t_steps = 10;
  SimulationResult short_run = simulate_scenario(sc, d);
  sc.t_steps = 40;
  SimulationResult long_run = simulate_scenario(sc, d);
  CHECK((short_run.beta_true.beta - long_run.beta_true.beta).cwiseAbs().maxCoeff() == 0.0);
  // Shared prefix of the panel is identical as well.
  CHECK((short_run.panel.y - long_run.panel.y.leftCols(10)).cwiseAbs().maxCoeff() == 0);
}
