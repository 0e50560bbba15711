#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "susmap/epimodel.hpp"
#include "susmap/rng.hpp"
#include "susmap/spatial.hpp"

namespace testsupport {

inline susmap::SpatialUnits random_units(int n, double width, double height,
                                         std::uint64_t seed) {
  susmap::RngStream rng = susmap::RngStream::from(seed, "test-units");
  std::vector<std::string> ids;
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(n, 2);
  for (int i = 0; i < n; ++i) {
    ids.push_back("u" + std::to_string(i + 1));
    coords(i, 0) = width * rng.uniform();
    coords(i, 1) = height * rng.uniform();
  }
  return susmap::SpatialUnits(std::move(ids), std::move(coords));
}

inline susmap::OutbreakPanel random_panel(int n, int t, double p, std::uint64_t seed) {
  susmap::RngStream rng = susmap::RngStream::from(seed, "test-panel");
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(n, t);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < t; ++c) y(i, c) = rng.uniform() < p ? 1 : 0;
  return susmap::OutbreakPanel(std::move(y));
}

}  // namespace testsupport
