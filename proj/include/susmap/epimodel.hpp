#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "susmap/spatial.hpp"

namespace susmap {

// N x T binary outbreak history. Time indices are 1-based throughout
// (t = 1..T) to match the panel CSV; column t lives at y.col(t-1).
struct OutbreakPanel {
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y;
  std::vector<int> time_labels;  // ordered, typically 1..T

  OutbreakPanel() = default;
  OutbreakPanel(Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y_,
                std::vector<int> labels = {});

  int n_units() const { return static_cast<int>(y.rows()); }
  int n_steps() const { return static_cast<int>(y.cols()); }
};

struct SusceptibilityField {
  Eigen::VectorXd beta;

  SusceptibilityField() = default;
  explicit SusceptibilityField(Eigen::VectorXd b);
  int size() const { return static_cast<int>(beta.size()); }
};

struct BackgroundRate {
  double gamma = 0.0;

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      fail(errc::invalid_input, "gamma must be finite and >= 0");
  }
};

constexpr double kProbClamp = 1e-12;  // clamp for cross-entropy logs

inline bool is_degenerate_loglik(double ll) {
  return ll == -std::numeric_limits<double>::infinity();
}

// P = 1 - exp(-lambda - gamma); in [0,1) for finite hazard.
double outbreak_probability(double lambda, const BackgroundRate& gamma);

// Incoming kernel mass per (unit, step): F(i, t-2) = sum over j infected at
// t-1 of k(d_ij), for t = 2..T. This is the likelihood's sufficient
// statistic in beta: lambda_i(t) = beta_i * F(i, t-2).
Eigen::MatrixXd kernel_force_matrix(const OutbreakPanel& panel, const DistanceMatrix& d,
                                    const KernelParams& k);

// lambda_.(t) = beta .* (kernel mass from units infected at t-1); 2 <= t <= T.
Eigen::VectorXd force_of_infection(const OutbreakPanel& panel, const SusceptibilityField& beta,
                                   const DistanceMatrix& d, const KernelParams& k, int t);

// Sum over t=2..T, i=1..N of the Bernoulli log-pmf, conditioning on the
// first column. Returns -inf (degenerate, not an exception) when an
// observed outbreak has zero hazard. When exclude_infected_prev is set,
// units infected at t-1 are dropped from the product at t.
double log_likelihood(const OutbreakPanel& panel, const SusceptibilityField& beta,
                      const BackgroundRate& gamma, const DistanceMatrix& d,
                      const KernelParams& k, bool exclude_infected_prev = false);

// Fitted outbreak probabilities for t=2..T, same layout as the force matrix.
Eigen::MatrixXd outbreak_probabilities(const Eigen::MatrixXd& forces,
                                       const SusceptibilityField& beta,
                                       const BackgroundRate& gamma);

// Per-unit cross-entropy loss over t=2..T, probabilities clamped to
// [1e-12, 1-1e-12] before the logs.
Eigen::VectorXd cross_entropy_by_unit(const OutbreakPanel& panel, const Eigen::MatrixXd& probs);

// Panel + kernel force folded into the layout the samplers sweep over.
// Immutable once built; shared read-only by every likelihood evaluation.
class LikelihoodTable {
 public:
  LikelihoodTable() = default;
  LikelihoodTable(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
                  bool exclude_infected_prev = false);

  int n_units() const { return static_cast<int>(forces_.rows()); }
  int n_terms() const { return static_cast<int>(forces_.cols()); }

  // Log-likelihood contribution of unit i, O(T).
  double unit_loglik(int i, double beta_i, double gamma) const;
  // Full log-likelihood; fixed summation order (unit-major) for
  // reproducibility.
  double total_loglik(const Eigen::VectorXd& beta, double gamma) const;

  const Eigen::MatrixXd& forces() const { return forces_; }
  const Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>& outcomes() const {
    return outcome_;
  }
  const Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>& included() const {
    return include_;
  }

 private:
  Eigen::MatrixXd forces_;                                            // N x (T-1)
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> outcome_;  // y at t=2..T
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> include_;
};

}  // namespace susmap
