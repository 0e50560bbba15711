#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "susmap/error.hpp"

namespace susmap {

// Point-referenced epidemiological units. Coordinates are planar projected
// kilometers; projecting from lon/lat is the caller's responsibility.
struct SpatialUnits {
  std::vector<std::string> ids;
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords;  // km

  SpatialUnits() = default;
  SpatialUnits(std::vector<std::string> ids_, Eigen::Matrix<double, Eigen::Dynamic, 2> coords_);

  int size() const { return static_cast<int>(coords.rows()); }
};

// Dense symmetric Euclidean distance matrix, km. N stays desk-scale
// (~2000 units) so precomputing all pairs is the right trade.
struct DistanceMatrix {
  Eigen::MatrixXd d;

  int size() const { return static_cast<int>(d.rows()); }
  double max() const { return d.maxCoeff(); }
  // Smallest strictly positive entry; 0 if all points coincide.
  double min_positive() const;
};

struct KernelParams {
  double phi = 100.0;  // range, km
  double b0 = 3.0;     // exponent; fixed by configuration, never estimated

  void validate() const {
    if (!(phi > 0.0) || !std::isfinite(phi)) fail(errc::invalid_input, "kernel phi must be > 0");
    if (!(b0 > 0.0) || !std::isfinite(b0)) fail(errc::invalid_input, "kernel b0 must be > 0");
  }
};

DistanceMatrix pairwise_distances(const SpatialUnits& units);

// k(d) = (1 + d/phi)^(-b0); k(0) = 1, strictly decreasing.
inline double kernel_eval(double d, const KernelParams& k) {
  if (d < 0.0 || !std::isfinite(d)) fail(errc::invalid_input, "kernel distance must be >= 0");
  return std::pow(1.0 + d / k.phi, -k.b0);
}

}  // namespace susmap
