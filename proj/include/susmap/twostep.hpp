#pragma once

#include <Eigen/Dense>
#include <vector>

#include "susmap/epimodel.hpp"

namespace susmap {

// Low-activity stretch [t1, t2] used for the method-of-moments background
// rate; outbreaks are counted over columns t1..t2-1 (dt = t2 - t1 columns).
struct QuietWindow {
  int t1 = 1;
  int t2 = 2;

  int width() const { return t2 - t1; }
  void validate(int t_steps) const {
    if (t1 < 1 || t2 > t_steps || t1 >= t2)
      fail(errc::invalid_input, "quiet window must satisfy 1 <= t1 < t2 <= T");
  }
};

struct PhiGrid {
  std::vector<double> values;  // strictly increasing, all > 0, km

  void validate() const;
  int size() const { return static_cast<int>(values.size()); }
};

// 20 log-spaced values spanning [min positive distance, max distance].
PhiGrid default_phi_grid(const DistanceMatrix& d, int size = 20);

struct GammaEstimate {
  BackgroundRate gamma;
  long long outbreak_count = 0;
  QuietWindow window;
  bool zero_count_warning = false;  // degenerate; downstream likelihood may be -inf
};

// gamma_hat = (#outbreaks in window) / (N * dt).
GammaEstimate estimate_gamma_mom(const OutbreakPanel& panel, const QuietWindow& window);

// Contiguous window of the given width with minimal outbreak count; ties
// broken by the earliest t1.
QuietWindow find_quiet_window(const OutbreakPanel& panel, int width);

// M_t = sum_i sum_{j in I_{t-1}} k(d_ij) for t=2..T; beta and gamma excluded.
Eigen::VectorXd total_force_series(const OutbreakPanel& panel, const DistanceMatrix& d,
                                   const KernelParams& k);

struct PhiFit {
  double phi_hat = 0.0;
  int index = -1;                // position in the grid
  Eigen::VectorXd residuals;     // squared-distance curve over the grid
  Eigen::VectorXd amplitudes;    // profiled scalar per grid value
};

// Least-squares kernel range on a grid. The raw force series omits beta
// and gamma, so a scalar amplitude is profiled out per candidate before
// the squared distance to the observed count series is compared; the
// criterion is then scale-free in the observations.
PhiFit estimate_phi_grid(const OutbreakPanel& panel, const DistanceMatrix& d,
                         const PhiGrid& grid, double b0);

}  // namespace susmap
