#include "susmap/twostep.hpp"

#include <cmath>

namespace susmap {

void PhiGrid::validate() const {
  if (values.empty()) fail(errc::invalid_input, "phi grid must be nonempty");
  double prev = 0.0;
  for (double v : values) {
    if (!(v > prev) || !std::isfinite(v))
      fail(errc::invalid_input, "phi grid must be strictly increasing and positive");
    prev = v;
  }
}

PhiGrid default_phi_grid(const DistanceMatrix& d, int size) {
  if (size < 1) fail(errc::invalid_input, "grid size must be >= 1");
  double lo = d.min_positive();
  double hi = d.max();
  if (lo <= 0.0 || hi <= lo) fail(errc::invalid_input, "degenerate distances for default grid");
  PhiGrid grid;
  grid.values.resize(static_cast<size_t>(size));
  if (size == 1) {
    grid.values[0] = std::sqrt(lo * hi);
    return grid;
  }
  const double la = std::log(lo), lb = std::log(hi);
  for (int i = 0; i < size; ++i)
    grid.values[static_cast<size_t>(i)] = std::exp(la + (lb - la) * i / (size - 1));
  return grid;
}

GammaEstimate estimate_gamma_mom(const OutbreakPanel& panel, const QuietWindow& window) {
  window.validate(panel.n_steps());
  long long count = 0;
  for (int t = window.t1; t < window.t2; ++t)
    for (int i = 0; i < panel.n_units(); ++i)
      if (panel.y(i, t - 1) == 1) ++count;
  const double denom = static_cast<double>(panel.n_units()) * window.width();
  GammaEstimate out;
  out.gamma.gamma = static_cast<double>(count) / denom;
  out.outbreak_count = count;
  out.window = window;
  out.zero_count_warning = (count == 0);
  return out;
}

QuietWindow find_quiet_window(const OutbreakPanel& panel, int width) {
  const int t_steps = panel.n_steps();
  if (width < 1 || width >= t_steps)
    fail(errc::invalid_input, "quiet window width must be in [1, T-1]");

  Eigen::VectorXi col_counts = Eigen::VectorXi::Zero(t_steps);
  for (int t = 0; t < t_steps; ++t)
    for (int i = 0; i < panel.n_units(); ++i) col_counts[t] += panel.y(i, t);

  // Sliding sum over columns t1..t1+width-1 (1-based).
  long long best = -1;
  int best_t1 = 1;
  long long cur = 0;
  for (int t = 0; t < width; ++t) cur += col_counts[t];
  best = cur;
  for (int t1 = 2; t1 + width - 1 <= t_steps; ++t1) {
    cur += col_counts[t1 + width - 2] - col_counts[t1 - 2];
    if (cur < best) {
      best = cur;
      best_t1 = t1;
    }
  }
  return {best_t1, best_t1 + width};
}

Eigen::VectorXd total_force_series(const OutbreakPanel& panel, const DistanceMatrix& d,
                                   const KernelParams& k) {
  const Eigen::MatrixXd forces = kernel_force_matrix(panel, d, k);
  return forces.colwise().sum().transpose();
}

PhiFit estimate_phi_grid(const OutbreakPanel& panel, const DistanceMatrix& d,
                         const PhiGrid& grid, double b0) {
  grid.validate();
  const int m = grid.size();
  const int n_terms = panel.n_steps() - 1;

  Eigen::VectorXd observed(n_terms);
  for (int t = 2; t <= panel.n_steps(); ++t) {
    double s = 0.0;
    for (int i = 0; i < panel.n_units(); ++i) s += panel.y(i, t - 1);
    observed[t - 2] = s;
  }

  PhiFit fit;
  fit.residuals.resize(m);
  fit.amplitudes.resize(m);
  bool any_signal = false;
  for (int kidx = 0; kidx < m; ++kidx) {
    KernelParams kernel{grid.values[static_cast<size_t>(kidx)], b0};
    const Eigen::VectorXd force = total_force_series(panel, d, kernel);
    const double mm = force.squaredNorm();
    const double c = mm > 0.0 ? observed.dot(force) / mm : 0.0;
    if (mm > 0.0) any_signal = true;
    fit.amplitudes[kidx] = c;
    fit.residuals[kidx] = (observed - c * force).squaredNorm();
    if (fit.index < 0 || fit.residuals[kidx] < fit.residuals[fit.index]) fit.index = kidx;
  }
  if (!any_signal)
    fail(errc::estimation_failed, "all transmission force series are identically zero");
  fit.phi_hat = grid.values[static_cast<size_t>(fit.index)];
  return fit;
}

}  // namespace susmap
