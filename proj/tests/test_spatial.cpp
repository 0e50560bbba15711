#include <doctest.h>

#include <cmath>

#include "susmap/spatial.hpp"
#include "test_support.hpp"

using namespace susmap;

TEST_CASE("pairwise distances: 3-4-5 triangle and coincident points") {
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(3, 2);
  coords << 0.0, 0.0, 3.0, 4.0, 0.0, 0.0;
  SpatialUnits units({"a", "b", "c"}, coords);
  DistanceMatrix d = pairwise_distances(units);
  CHECK(d.d(0, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(d.d(0, 2) == 0.0);
  CHECK(d.d(1, 0) == d.d(0, 1));
  CHECK(d.d.diagonal().isZero(0.0));
}

TEST_CASE("pairwise distances match per-pair recomputation on random points") {
  const auto units = testsupport::random_units(10, 500.0, 300.0, 42);
  DistanceMatrix d = pairwise_distances(units);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double dx = units.coords(i, 0) - units.coords(j, 0);
      const double dy = units.coords(i, 1) - units.coords(j, 1);
      CHECK(d.d(i, j) == doctest::Approx(std::sqrt(dx * dx + dy * dy)).epsilon(1e-14));
    }
  }
}

TEST_CASE("unit construction rejects bad input") {
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(2, 2);
  coords << 0.0, 0.0, 1.0, 1.0;
  CHECK_THROWS_AS(SpatialUnits({"a", "a"}, coords), error);
  Eigen::Matrix<double, Eigen::Dynamic, 2> bad = coords;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(SpatialUnits({"a", "b"}, bad), error);
  Eigen::Matrix<double, Eigen::Dynamic, 2> one(1, 2);
  one << 0.0, 0.0;
  CHECK_THROWS_AS(SpatialUnits({"a"}, one), error);
}

TEST_CASE("kernel analytic values") {
  KernelParams k1{10.0, 2.0};
  CHECK(kernel_eval(0.0, k1) == 1.0);
  CHECK(kernel_eval(10.0, k1) == doctest::Approx(0.25).epsilon(1e-15));
  KernelParams k2{25.0, 3.0};
  CHECK(kernel_eval(50.0, k2) == doctest::Approx(1.0 / 27.0).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_eval(-1.0, k1), error);
}

TEST_CASE("kernel is strictly decreasing and vanishes at long range") {
  KernelParams k{100.0, 2.0};
  double prev = kernel_eval(0.0, k);
  for (double d = 0.5; d < 2000.0; d *= 1.7) {
    const double v = kernel_eval(d, k);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  CHECK(kernel_eval(1e9, k) < 1e-10);
}

TEST_CASE("kernel params validate") {
  const KernelParams bad_phi{-1.0, 3.0};
  const KernelParams bad_b0{10.0, 0.0};
  CHECK_THROWS_AS(bad_phi.validate(), error);
  CHECK_THROWS_AS(bad_b0.validate(), error);
}
