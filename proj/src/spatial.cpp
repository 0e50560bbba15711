#include "susmap/spatial.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace susmap {

SpatialUnits::SpatialUnits(std::vector<std::string> ids_,
                           Eigen::Matrix<double, Eigen::Dynamic, 2> coords_)
    : ids(std::move(ids_)), coords(std::move(coords_)) {
  if (coords.rows() < 2) fail(errc::invalid_input, "need at least 2 units");
  if (static_cast<Eigen::Index>(ids.size()) != coords.rows())
    fail(errc::invalid_input, "unit id count does not match coordinate count");
  if (!coords.allFinite()) fail(errc::invalid_input, "non-finite unit coordinates");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) fail(errc::invalid_input, "duplicate unit id: " + id);
  }
}

double DistanceMatrix::min_positive() const {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.cols(); ++j)
      if (d(i, j) > 0.0 && d(i, j) < m) m = d(i, j);
  return std::isfinite(m) ? m : 0.0;
}

DistanceMatrix pairwise_distances(const SpatialUnits& units) {
  if (!units.coords.allFinite()) fail(errc::invalid_input, "non-finite unit coordinates");
  const Eigen::Index n = units.coords.rows();
  DistanceMatrix out;
  out.d.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = units.coords(i, 0) - units.coords(j, 0);
      const double dy = units.coords(i, 1) - units.coords(j, 1);
      const double dij = std::sqrt(dx * dx + dy * dy);
      out.d(i, j) = dij;
      out.d(j, i) = dij;
    }
  }
  return out;
}

}  // namespace susmap
