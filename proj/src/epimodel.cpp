#include "susmap/epimodel.hpp"

#include <algorithm>
#include <cmath>

namespace susmap {

namespace {

// log P and log(1-P) for P = 1 - exp(-h). The y=0 branch is exact:
// log(1-P) = -h. The y=1 branch is log(-expm1(-h)), -inf at h = 0.
inline double log_p_outbreak(double h) {
  if (h <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(-std::expm1(-h));
}

}  // namespace

OutbreakPanel::OutbreakPanel(Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y_,
                             std::vector<int> labels)
    : y(std::move(y_)), time_labels(std::move(labels)) {
  if (y.cols() < 2) fail(errc::invalid_input, "panel needs T >= 2 time steps");
  if (y.rows() < 1) fail(errc::invalid_input, "panel needs at least one unit");
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index t = 0; t < y.cols(); ++t)
      if (y(i, t) != 0 && y(i, t) != 1)
        fail(errc::invalid_input, "panel entries must be binary");
  if (time_labels.empty()) {
    time_labels.resize(static_cast<size_t>(y.cols()));
    for (int t = 0; t < y.cols(); ++t) time_labels[static_cast<size_t>(t)] = t + 1;
  }
  if (static_cast<Eigen::Index>(time_labels.size()) != y.cols())
    fail(errc::invalid_input, "time label count does not match panel width");
}

SusceptibilityField::SusceptibilityField(Eigen::VectorXd b) : beta(std::move(b)) {
  for (Eigen::Index i = 0; i < beta.size(); ++i)
    if (!(beta[i] > 0.0) || !std::isfinite(beta[i]))
      fail(errc::invalid_input, "susceptibility entries must be positive and finite");
}

double outbreak_probability(double lambda, const BackgroundRate& gamma) {
  if (lambda < 0.0 || !std::isfinite(lambda))
    fail(errc::invalid_input, "force of infection must be finite and >= 0");
  gamma.validate();
  return -std::expm1(-(lambda + gamma.gamma));
}

Eigen::MatrixXd kernel_force_matrix(const OutbreakPanel& panel, const DistanceMatrix& d,
                                    const KernelParams& k) {
  k.validate();
  const int n = panel.n_units();
  const int t_steps = panel.n_steps();
  if (d.size() != n) fail(errc::invalid_input, "distance matrix does not match panel");

  // Kernel values are reused across all time steps; N^2 memory is the
  // same as the distance matrix itself.
  Eigen::MatrixXd kd(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) kd(i, j) = kernel_eval(d.d(i, j), k);

  Eigen::MatrixXd forces = Eigen::MatrixXd::Zero(n, t_steps - 1);
  std::vector<int> infected;
  for (int t = 2; t <= t_steps; ++t) {
    infected.clear();
    for (int j = 0; j < n; ++j)
      if (panel.y(j, t - 2) == 1) infected.push_back(j);
    if (infected.empty()) continue;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j : infected) s += kd(i, j);
      forces(i, t - 2) = s;
    }
  }
  return forces;
}

Eigen::VectorXd force_of_infection(const OutbreakPanel& panel, const SusceptibilityField& beta,
                                   const DistanceMatrix& d, const KernelParams& k, int t) {
  if (t < 2 || t > panel.n_steps()) fail(errc::index, "time index out of range [2, T]");
  k.validate();
  const int n = panel.n_units();
  if (beta.size() != n || d.size() != n)
    fail(errc::invalid_input, "beta/distance dimensions do not match panel");

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (panel.y(j, t - 2) != 1) continue;
    for (int i = 0; i < n; ++i) lambda[i] += kernel_eval(d.d(i, j), k);
  }
  return lambda.cwiseProduct(beta.beta);
}

LikelihoodTable::LikelihoodTable(const OutbreakPanel& panel, const DistanceMatrix& d,
                                 const KernelParams& k, bool exclude_infected_prev) {
  forces_ = kernel_force_matrix(panel, d, k);
  const int n = panel.n_units();
  const int m = panel.n_steps() - 1;
  outcome_.resize(n, m);
  include_.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < m; ++c) {
      outcome_(i, c) = panel.y(i, c + 1);
      include_(i, c) = (exclude_infected_prev && panel.y(i, c) == 1) ? 0 : 1;
    }
  }
}

double LikelihoodTable::unit_loglik(int i, double beta_i, double gamma) const {
  double ll = 0.0;
  const int m = n_terms();
  for (int c = 0; c < m; ++c) {
    if (!include_(i, c)) continue;
    const double h = beta_i * forces_(i, c) + gamma;
    if (outcome_(i, c)) {
      ll += log_p_outbreak(h);
      if (is_degenerate_loglik(ll)) return ll;
    } else {
      ll -= h;
    }
  }
  return ll;
}

double LikelihoodTable::total_loglik(const Eigen::VectorXd& beta, double gamma) const {
  double ll = 0.0;
  for (int i = 0; i < n_units(); ++i) {
    ll += unit_loglik(i, beta[i], gamma);
    if (is_degenerate_loglik(ll)) return ll;
  }
  return ll;
}

double log_likelihood(const OutbreakPanel& panel, const SusceptibilityField& beta,
                      const BackgroundRate& gamma, const DistanceMatrix& d,
                      const KernelParams& k, bool exclude_infected_prev) {
  gamma.validate();
  if (beta.size() != panel.n_units())
    fail(errc::invalid_input, "beta length does not match panel");
  LikelihoodTable table(panel, d, k, exclude_infected_prev);
  return table.total_loglik(beta.beta, gamma.gamma);
}

Eigen::MatrixXd outbreak_probabilities(const Eigen::MatrixXd& forces,
                                       const SusceptibilityField& beta,
                                       const BackgroundRate& gamma) {
  gamma.validate();
  if (beta.size() != forces.rows())
    fail(errc::invalid_input, "beta length does not match force matrix");
  Eigen::MatrixXd probs(forces.rows(), forces.cols());
  for (Eigen::Index i = 0; i < forces.rows(); ++i)
    for (Eigen::Index c = 0; c < forces.cols(); ++c)
      probs(i, c) = -std::expm1(-(beta.beta[i] * forces(i, c) + gamma.gamma));
  return probs;
}

Eigen::VectorXd cross_entropy_by_unit(const OutbreakPanel& panel, const Eigen::MatrixXd& probs) {
  const int n = panel.n_units();
  const int m = panel.n_steps() - 1;
  if (probs.rows() != n || probs.cols() != m)
    fail(errc::invalid_input, "probability matrix must be N x (T-1)");

  Eigen::VectorXd loss = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double li = 0.0;
    for (int c = 0; c < m; ++c) {
      const double p = std::clamp(probs(i, c), kProbClamp, 1.0 - kProbClamp);
      li -= panel.y(i, c + 1) ? std::log(p) : std::log1p(-p);
    }
    loss[i] = li;
  }
  return loss;
}

}  // namespace susmap
