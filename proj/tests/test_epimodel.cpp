#include <doctest.h>

#include <cmath>
#include <numeric>

#include "susmap/epimodel.hpp"
#include "test_support.hpp"

using namespace susmap;

namespace {

// Independent term-by-term recomputation of the Bernoulli log-likelihood,
// deliberately naive: triple loop, direct probability formula.
double oracle_loglik(const OutbreakPanel& panel, const Eigen::VectorXd& beta, double gamma,
                     const DistanceMatrix& d, const KernelParams& k) {
  double ll = 0.0;
  for (int t = 2; t <= panel.n_steps(); ++t) {
    for (int i = 0; i < panel.n_units(); ++i) {
      double lambda = 0.0;
      for (int j = 0; j < panel.n_units(); ++j)
        if (panel.y(j, t - 2) == 1) lambda += std::pow(1.0 + d.d(i, j) / k.phi, -k.b0);
      lambda *= beta[i];
      const double p = 1.0 - std::exp(-(lambda + gamma));
      ll += panel.y(i, t - 1) == 1 ? std::log(p) : std::log(1.0 - p);
    }
  }
  return ll;
}

}  // namespace

TEST_CASE("outbreak probability analytic values") {
  CHECK(outbreak_probability(0.0, {0.0}) == 0.0);
  CHECK(outbreak_probability(0.0, {0.001}) ==
        doctest::Approx(1.0 - std::exp(-0.001)).epsilon(1e-15));
  const double ln2 = std::log(2.0);
  CHECK(outbreak_probability(ln2, {ln2}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(outbreak_probability(-0.1, {0.0}), error);
  CHECK_THROWS_AS(outbreak_probability(0.1, {-0.5}), error);
}

TEST_CASE("outbreak probability stays in [0,1) and is monotone") {
  // Strict P < 1 holds up to the resolution of expm1 (exp(-h) above
  // half an ulp of 1); beyond that the double rounds to 1.
  double prev = -1.0;
  for (double h = 0.0; h < 36.0; h += 0.7) {
    const double p = outbreak_probability(h, {0.0});
    CHECK(p >= 0.0);
    CHECK(p < 1.0);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("force of infection: empty infectious set and hand computation") {
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(2, 2);
  coords << 0.0, 0.0, 10.0, 0.0;
  SpatialUnits units({"a", "b"}, coords);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{10.0, 2.0};

  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(2, 3);
  y << 0, 0, 0,
       1, 0, 0;
  OutbreakPanel panel(y);
  SusceptibilityField beta((Eigen::VectorXd(2) << 2.0, 3.0).finished());

  // t=2: unit b infected at t=1; a receives k(10)=0.25, b its own k(0)=1.
  Eigen::VectorXd lam2 = force_of_infection(panel, beta, d, k, 2);
  CHECK(lam2[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lam2[1] == doctest::Approx(3.0).epsilon(1e-15));

  // t=3: nothing infected at t=2.
  Eigen::VectorXd lam3 = force_of_infection(panel, beta, d, k, 3);
  CHECK(lam3.isZero(0.0));

  CHECK_THROWS_AS(force_of_infection(panel, beta, d, k, 1), error);
  CHECK_THROWS_AS(force_of_infection(panel, beta, d, k, 4), error);
}

TEST_CASE("force of infection matches naive loop on a random instance") {
  const auto units = testsupport::random_units(5, 200.0, 200.0, 7);
  const auto panel = testsupport::random_panel(5, 6, 0.4, 8);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{50.0, 3.0};
  Eigen::VectorXd b(5);
  b << 0.2, 1.1, 0.7, 2.0, 0.5;
  SusceptibilityField beta(b);

  for (int t = 2; t <= 6; ++t) {
    Eigen::VectorXd lam = force_of_infection(panel, beta, d, k, t);
    for (int i = 0; i < 5; ++i) {
      double want = 0.0;
      for (int j = 0; j < 5; ++j)
        if (panel.y(j, t - 2) == 1) want += kernel_eval(d.d(i, j), k);
      want *= b[i];
      CHECK(lam[i] == doctest::Approx(want).epsilon(1e-13));
    }
  }
}

TEST_CASE("self-term is included: infected unit contributes k(0) to itself") {
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(2, 2);
  coords << 0.0, 0.0, 5000.0, 0.0;  // second unit effectively decoupled
  SpatialUnits units({"a", "b"}, coords);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{10.0, 3.0};
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(2, 2);
  y << 1, 0,
       0, 0;
  OutbreakPanel panel(y);
  SusceptibilityField beta((Eigen::VectorXd(2) << 1.7, 1.0).finished());
  Eigen::VectorXd lam = force_of_infection(panel, beta, d, k, 2);
  CHECK(lam[0] == doctest::Approx(1.7).epsilon(1e-12));  // own previous infection
}

TEST_CASE("log likelihood analytic cases") {
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(2, 2);
  coords << 0.0, 0.0, 30.0, 0.0;
  SpatialUnits units({"a", "b"}, coords);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{30.0, 2.0};

  SUBCASE("all zeros with gamma=0 gives 0") {
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y =
        Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(2, 5);
    OutbreakPanel panel(y);
    SusceptibilityField beta((Eigen::VectorXd(2) << 1.0, 2.0).finished());
    CHECK(log_likelihood(panel, beta, {0.0}, d, k) == 0.0);
  }

  SUBCASE("single Bernoulli with P=0.5") {
    Eigen::Matrix<double, Eigen::Dynamic, 2> c1(2, 2);
    c1 << 0.0, 0.0, 1e6, 0.0;
    SpatialUnits far({"a", "b"}, c1);
    DistanceMatrix d1 = pairwise_distances(far);
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(2, 2);
    y << 0, 1,
         0, 0;
    OutbreakPanel panel(y);
    SusceptibilityField beta((Eigen::VectorXd(2) << 1.0, 1.0).finished());
    const double gamma = std::log(2.0);  // P = 1 - exp(-ln 2) = 0.5
    const double ll = log_likelihood(panel, beta, {gamma}, d1, k);
    // unit a: y=1 with P=0.5; unit b: y=0 with log(1-P) = -ln 2.
    CHECK(ll == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));
  }

  SUBCASE("observed outbreak with zero hazard is a -inf sentinel") {
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(2, 2);
    y << 0, 1,
         0, 0;
    OutbreakPanel panel(y);
    SusceptibilityField beta((Eigen::VectorXd(2) << 1.0, 1.0).finished());
    const double ll = log_likelihood(panel, beta, {0.0}, d, k);
    CHECK(is_degenerate_loglik(ll));
  }
}

TEST_CASE("log likelihood matches term-by-term oracle on random instances") {
  RngStream rng = RngStream::from(99, "ll-instances");
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    const int t = 2 + static_cast<int>(rng.uniform_int(4));
    const auto units = testsupport::random_units(n, 300.0, 300.0, 1000 + rep);
    const auto panel = testsupport::random_panel(n, t, 0.35, 2000 + rep);
    DistanceMatrix d = pairwise_distances(units);
    KernelParams k{20.0 + 100.0 * rng.uniform(), 2.0 + 2.0 * rng.uniform()};
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = 0.1 + 2.0 * rng.uniform();
    SusceptibilityField beta(b);
    const double gamma = 0.01 + 0.1 * rng.uniform();

    const double got = log_likelihood(panel, beta, {gamma}, d, k);
    const double want = oracle_loglik(panel, b, gamma, d, k);
    CHECK(std::abs(got - want) < 1e-12);
  }
}

TEST_CASE("log likelihood is invariant to joint unit permutation") {
  const int n = 6, t = 5;
  const auto units = testsupport::random_units(n, 400.0, 200.0, 31);
  const auto panel = testsupport::random_panel(n, t, 0.3, 32);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{60.0, 3.0};
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b[i] = 0.3 + 0.2 * i;

  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  Eigen::Matrix<double, Eigen::Dynamic, 2> pc(n, 2);
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> py(n, t);
  Eigen::VectorXd pb(n);
  std::vector<std::string> pids;
  for (int i = 0; i < n; ++i) {
    pc.row(i) = units.coords.row(perm[static_cast<size_t>(i)]);
    py.row(i) = panel.y.row(perm[static_cast<size_t>(i)]);
    pb[i] = b[perm[static_cast<size_t>(i)]];
    pids.push_back(units.ids[static_cast<size_t>(perm[static_cast<size_t>(i)])]);
  }
  SpatialUnits punits(pids, pc);
  OutbreakPanel ppanel(py);

  const double ll1 = log_likelihood(panel, SusceptibilityField(b), {0.02}, d, k);
  const double ll2 =
      log_likelihood(ppanel, SusceptibilityField(pb), {0.02}, pairwise_distances(punits), k);
  CHECK(ll1 == doctest::Approx(ll2).epsilon(1e-12));
}

TEST_CASE("log likelihood is additive over time slices") {
  const int n = 5, t = 6;
  const auto units = testsupport::random_units(n, 300.0, 300.0, 51);
  const auto panel = testsupport::random_panel(n, t, 0.3, 52);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{40.0, 3.0};
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n, 0.8);
  SusceptibilityField beta(b);
  const double gamma = 0.05;

  double slices = 0.0;
  for (int tt = 2; tt <= t; ++tt) {
    Eigen::VectorXd lam = force_of_infection(panel, beta, d, k, tt);
    for (int i = 0; i < n; ++i) {
      const double p = outbreak_probability(lam[i], {gamma});
      slices += panel.y(i, tt - 1) == 1 ? std::log(p) : std::log1p(-p);
    }
  }
  CHECK(log_likelihood(panel, beta, {gamma}, d, k) == doctest::Approx(slices).epsilon(1e-12));
}

TEST_CASE("exclude_infected_prev drops exactly the previously infected terms") {
  const int n = 4, t = 5;
  const auto units = testsupport::random_units(n, 100.0, 100.0, 61);
  const auto panel = testsupport::random_panel(n, t, 0.5, 62);
  DistanceMatrix d = pairwise_distances(units);
  KernelParams k{30.0, 3.0};
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n, 0.5);
  const double gamma = 0.05;

  double want = 0.0;
  for (int tt = 2; tt <= t; ++tt) {
    for (int i = 0; i < n; ++i) {
      if (panel.y(i, tt - 2) == 1) continue;
      double lambda = 0.0;
      for (int j = 0; j < n; ++j)
        if (panel.y(j, tt - 2) == 1) lambda += kernel_eval(d.d(i, j), k);
      lambda *= b[i];
      const double p = 1.0 - std::exp(-(lambda + gamma));
      want += panel.y(i, tt - 1) == 1 ? std::log(p) : std::log(1.0 - p);
    }
  }
  const double got = log_likelihood(panel, SusceptibilityField(b), {gamma}, d, k, true);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("cross entropy analytic and oracle cases") {
  const int n = 3, t = 11;  // 10 transition steps

  SUBCASE("uniform coin gives (T-1) ln 2 per unit") {
    auto panel = testsupport::random_panel(n, t, 0.5, 71);
    Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(n, t - 1, 0.5);
    Eigen::VectorXd loss = cross_entropy_by_unit(panel, probs);
    for (int i = 0; i < n; ++i)
      CHECK(loss[i] == doctest::Approx(10.0 * std::log(2.0)).epsilon(1e-14));
  }

  SUBCASE("perfect prediction has ~zero loss") {
    auto panel = testsupport::random_panel(n, t, 0.4, 72);
    Eigen::MatrixXd probs(n, t - 1);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < t - 1; ++c) probs(i, c) = panel.y(i, c + 1) ? 1.0 - 1e-12 : 1e-12;
    Eigen::VectorXd loss = cross_entropy_by_unit(panel, probs);
    for (int i = 0; i < n; ++i) CHECK(loss[i] == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("random instance matches direct summation") {
    auto panel = testsupport::random_panel(n, t, 0.4, 73);
    RngStream rng = RngStream::from(74, "probs");
    Eigen::MatrixXd probs(n, t - 1);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < t - 1; ++c) probs(i, c) = 0.05 + 0.9 * rng.uniform();
    Eigen::VectorXd loss = cross_entropy_by_unit(panel, probs);
    for (int i = 0; i < n; ++i) {
      double want = 0.0;
      for (int c = 0; c < t - 1; ++c)
        want -= panel.y(i, c + 1) ? std::log(probs(i, c)) : std::log(1.0 - probs(i, c));
      CHECK(loss[i] == doctest::Approx(want).epsilon(1e-12));
      CHECK(loss[i] >= 0.0);
    }
  }
}

TEST_CASE("panel validation") {
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(2, 2);
  y << 0, 2,
       0, 0;
  CHECK_THROWS_AS(OutbreakPanel{y}, error);
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> one_col(2, 1);
  one_col << 0, 0;
  CHECK_THROWS_AS(OutbreakPanel{one_col}, error);
}
