#include "susmap/picar.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace susmap {

namespace {

struct CircumTriangle {
  int a, b, c;
  double cx, cy, r2;
  bool degenerate = false;
};

CircumTriangle make_triangle(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts, int a, int b,
                             int c) {
  CircumTriangle t{a, b, c, 0.0, 0.0, 0.0};
  const double ax = pts(a, 0), ay = pts(a, 1);
  const double bx = pts(b, 0), by = pts(b, 1);
  const double cx = pts(c, 0), cy = pts(c, 1);
  const double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
  const double scale = std::max({std::abs(ax) + std::abs(ay), std::abs(bx) + std::abs(by),
                                 std::abs(cx) + std::abs(cy), 1.0});
  if (std::abs(d) < 1e-12 * scale * scale) {
    t.degenerate = true;
    return t;
  }
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  t.cx = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
  t.cy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
  const double dx = t.cx - ax, dy = t.cy - ay;
  t.r2 = dx * dx + dy * dy;
  return t;
}

// Strict containment with relative slack: cocircular points count as
// outside, which keeps square grids triangulable.
bool in_circumcircle(const CircumTriangle& t, double px, double py) {
  if (t.degenerate) return false;
  const double dx = px - t.cx, dy = py - t.cy;
  return dx * dx + dy * dy < t.r2 * (1.0 - 1e-12);
}

std::vector<CircumTriangle> bowyer_watson(const Eigen::Matrix<double, Eigen::Dynamic, 2>& input) {
  const int n = static_cast<int>(input.rows());
  Eigen::Matrix<double, Eigen::Dynamic, 2> pts(n + 3, 2);
  pts.topRows(n) = input;

  const double min_x = input.col(0).minCoeff(), max_x = input.col(0).maxCoeff();
  const double min_y = input.col(1).minCoeff(), max_y = input.col(1).maxCoeff();
  const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
  const double mx = 0.5 * (min_x + max_x), my = 0.5 * (min_y + max_y);
  pts(n, 0) = mx - 20.0 * span;
  pts(n, 1) = my - 10.0 * span;
  pts(n + 1, 0) = mx + 20.0 * span;
  pts(n + 1, 1) = my - 10.0 * span;
  pts(n + 2, 0) = mx;
  pts(n + 2, 1) = my + 20.0 * span;

  std::vector<CircumTriangle> tris{make_triangle(pts, n, n + 1, n + 2)};

  std::vector<std::array<int, 2>> polygon;
  for (int p = 0; p < n; ++p) {
    const double px = pts(p, 0), py = pts(p, 1);
    polygon.clear();
    std::map<std::pair<int, int>, int> edge_count;
    std::vector<CircumTriangle> kept;
    kept.reserve(tris.size());
    for (const auto& t : tris) {
      if (in_circumcircle(t, px, py)) {
        const std::array<std::pair<int, int>, 3> es = {
            std::minmax(t.a, t.b), std::minmax(t.b, t.c), std::minmax(t.c, t.a)};
        for (const auto& e : es) ++edge_count[e];
      } else {
        kept.push_back(t);
      }
    }
    tris.swap(kept);
    for (const auto& [e, cnt] : edge_count) {
      if (cnt != 1) continue;  // interior edge of the cavity
      CircumTriangle t = make_triangle(pts, e.first, e.second, p);
      if (!t.degenerate) tris.push_back(t);
    }
  }

  std::vector<CircumTriangle> out;
  for (const auto& t : tris)
    if (t.a < n && t.b < n && t.c < n) out.push_back(t);
  return out;
}

std::vector<int> convex_hull(const Eigen::Matrix<double, Eigen::Dynamic, 2>& pts) {
  const int n = static_cast<int>(pts.rows());
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (pts(a, 0) != pts(b, 0)) return pts(a, 0) < pts(b, 0);
    return pts(a, 1) < pts(b, 1);
  });
  auto cross = [&](int o, int a, int b) {
    return (pts(a, 0) - pts(o, 0)) * (pts(b, 1) - pts(o, 1)) -
           (pts(a, 1) - pts(o, 1)) * (pts(b, 0) - pts(o, 0));
  };
  std::vector<int> hull(2 * static_cast<size_t>(n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[static_cast<size_t>(k - 2)], hull[static_cast<size_t>(k - 1)],
                           idx[static_cast<size_t>(i)]) <= 0)
      --k;
    hull[static_cast<size_t>(k++)] = idx[static_cast<size_t>(i)];
  }
  for (int i = n - 2, lower = k + 1; i >= 0; --i) {
    while (k >= lower && cross(hull[static_cast<size_t>(k - 2)], hull[static_cast<size_t>(k - 1)],
                               idx[static_cast<size_t>(i)]) <= 0)
      --k;
    hull[static_cast<size_t>(k++)] = idx[static_cast<size_t>(i)];
  }
  hull.resize(static_cast<size_t>(k - 1));
  return hull;
}

}  // namespace

Eigen::MatrixXd Mesh::adjacency() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_vertices(), n_vertices());
  for (const auto& [a, b] : edges) {
    w(a, b) = 1.0;
    w(b, a) = 1.0;
  }
  return w;
}

Mesh build_mesh(const SpatialUnits& units, double buffer_km) {
  const int n = units.size();
  if (n < 3) fail(errc::invalid_input, "mesh needs at least 3 units");
  if (buffer_km < 0.0) fail(errc::invalid_input, "mesh buffer must be >= 0");

  // Collinearity check: max triangle area against the span.
  {
    double span = std::max(units.coords.col(0).maxCoeff() - units.coords.col(0).minCoeff(),
                           units.coords.col(1).maxCoeff() - units.coords.col(1).minCoeff());
    double max_cross = 0.0;
    for (int i = 2; i < n; ++i) {
      const double c =
          std::abs((units.coords(1, 0) - units.coords(0, 0)) * (units.coords(i, 1) - units.coords(0, 1)) -
                   (units.coords(1, 1) - units.coords(0, 1)) * (units.coords(i, 0) - units.coords(0, 0)));
      max_cross = std::max(max_cross, c);
    }
    if (max_cross < 1e-9 * std::max(span * span, 1.0))
      fail(errc::invalid_input, "unit locations are collinear; cannot build a mesh");
  }

  Eigen::Matrix<double, Eigen::Dynamic, 2> pts;
  if (buffer_km > 0.0) {
    const std::vector<int> hull = convex_hull(units.coords);
    const int h = static_cast<int>(hull.size());
    double cx = 0.0, cy = 0.0;
    for (int v : hull) {
      cx += units.coords(v, 0);
      cy += units.coords(v, 1);
    }
    cx /= h;
    cy /= h;
    // One ring: hull vertices and hull-edge midpoints pushed radially
    // outward by the buffer distance.
    std::vector<std::array<double, 2>> ring;
    auto push_out = [&](double x, double y) {
      const double dx = x - cx, dy = y - cy;
      const double norm = std::sqrt(dx * dx + dy * dy);
      if (norm < 1e-9) return;
      ring.push_back({x + buffer_km * dx / norm, y + buffer_km * dy / norm});
    };
    for (int i = 0; i < h; ++i) {
      const int v = hull[static_cast<size_t>(i)];
      const int w = hull[static_cast<size_t>((i + 1) % h)];
      push_out(units.coords(v, 0), units.coords(v, 1));
      push_out(0.5 * (units.coords(v, 0) + units.coords(w, 0)),
               0.5 * (units.coords(v, 1) + units.coords(w, 1)));
    }
    pts.resize(n + static_cast<int>(ring.size()), 2);
    pts.topRows(n) = units.coords;
    for (size_t i = 0; i < ring.size(); ++i) {
      pts(n + static_cast<Eigen::Index>(i), 0) = ring[i][0];
      pts(n + static_cast<Eigen::Index>(i), 1) = ring[i][1];
    }
  } else {
    pts = units.coords;
  }

  const auto tris = bowyer_watson(pts);
  if (tris.empty()) fail(errc::invalid_input, "triangulation failed (degenerate input)");

  Mesh mesh;
  mesh.vertices = pts;
  mesh.n_obs = n;
  std::set<std::pair<int, int>> edge_set;
  for (const auto& t : tris) {
    mesh.triangles.push_back({t.a, t.b, t.c});
    edge_set.insert(std::minmax(t.a, t.b));
    edge_set.insert(std::minmax(t.b, t.c));
    edge_set.insert(std::minmax(t.c, t.a));
  }
  mesh.edges.assign(edge_set.begin(), edge_set.end());
  return mesh;
}

double default_mesh_buffer(const SpatialUnits& units) {
  const double dx = units.coords.col(0).maxCoeff() - units.coords.col(0).minCoeff();
  const double dy = units.coords.col(1).maxCoeff() - units.coords.col(1).minCoeff();
  return 0.05 * std::sqrt(dx * dx + dy * dy);
}

Eigen::SparseMatrix<double> projector(const Mesh& mesh, const SpatialUnits& units) {
  const int n = units.size();
  Eigen::SparseMatrix<double> a(n, mesh.n_vertices());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(3 * n));

  for (int i = 0; i < n; ++i) {
    const double px = units.coords(i, 0), py = units.coords(i, 1);
    bool found = false;
    for (const auto& tri : mesh.triangles) {
      const double ax = mesh.vertices(tri[0], 0), ay = mesh.vertices(tri[0], 1);
      const double bx = mesh.vertices(tri[1], 0), by = mesh.vertices(tri[1], 1);
      const double cx = mesh.vertices(tri[2], 0), cy = mesh.vertices(tri[2], 1);
      const double v0x = bx - ax, v0y = by - ay;
      const double v1x = cx - ax, v1y = cy - ay;
      const double v2x = px - ax, v2y = py - ay;
      const double den = v0x * v1y - v1x * v0y;
      if (std::abs(den) < 1e-14) continue;
      const double wb = (v2x * v1y - v1x * v2y) / den;
      const double wc = (v0x * v2y - v2x * v0y) / den;
      const double wa = 1.0 - wb - wc;
      const double tol = -1e-9;
      if (wa < tol || wb < tol || wc < tol) continue;
      const double ca = std::max(wa, 0.0), cb = std::max(wb, 0.0), cc = std::max(wc, 0.0);
      const double sum = ca + cb + cc;
      if (ca > 0.0) triplets.emplace_back(i, tri[0], ca / sum);
      if (cb > 0.0) triplets.emplace_back(i, tri[1], cb / sum);
      if (cc > 0.0) triplets.emplace_back(i, tri[2], cc / sum);
      found = true;
      break;
    }
    if (!found)
      fail(errc::invalid_input,
           "unit " + units.ids[static_cast<size_t>(i)] + " lies outside the mesh");
  }
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

MoranBasis moran_basis(const Eigen::MatrixXd& adjacency, int p) {
  const int n = static_cast<int>(adjacency.rows());
  if (p < 1 || p >= n) fail(errc::invalid_input, "moran basis rank must satisfy 1 <= p < n");

  Eigen::MatrixXd centered = adjacency;
  // P W P with P = I - 11'/n, expanded to avoid forming P.
  const Eigen::VectorXd row_means = adjacency.rowwise().mean();
  const double grand_mean = row_means.mean();
  centered.colwise() -= row_means;
  centered.rowwise() -= row_means.transpose();
  centered.array() += grand_mean;
  centered = 0.5 * (centered + centered.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
  if (solver.info() != Eigen::Success) fail(errc::numerical, "Moran eigendecomposition failed");

  MoranBasis basis;
  basis.m.resize(n, p);
  basis.eigvals.resize(p);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - j);
    v -= (v.dot(ones) / n) * ones;  // exact constant-orthogonality
    const double norm = v.norm();
    if (norm < 1e-12) fail(errc::numerical, "Moran basis column degenerated to constant");
    v /= norm;
    // Deterministic sign: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    basis.m.col(j) = v;
    basis.eigvals[j] = solver.eigenvalues()[n - 1 - j];
  }
  return basis;
}

MoranBasis moran_basis(const Mesh& mesh, int p) { return moran_basis(mesh.adjacency(), p); }

PicarBasis build_picar_basis(const SpatialUnits& units, double buffer_km, int rank) {
  PicarBasis basis;
  basis.mesh = build_mesh(units, buffer_km);
  basis.a = projector(basis.mesh, units);
  MoranBasis mb = moran_basis(basis.mesh, rank);
  basis.m = std::move(mb.m);
  basis.eigvals = std::move(mb.eigvals);
  basis.projected = basis.a * basis.m;
  basis.rank = rank;
  return basis;
}

SusceptibilityField recover_beta(const Eigen::VectorXd& delta, double omega,
                                 const PicarBasis& basis) {
  if (delta.size() != basis.rank) fail(errc::invalid_input, "delta length does not match rank");
  Eigen::VectorXd log_beta = (basis.projected * delta).array() + omega;
  return SusceptibilityField(log_beta.array().exp().matrix());
}

double tau_log_prior(double tau) {
  constexpr double shape = 0.5;
  constexpr double scale = 2000.0;
  return (shape - 1.0) * std::log(tau) - tau / scale;
}

Chain fit_sdsm_picar(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
                     const BackgroundRate& gamma, const PicarBasis& basis,
                     const McmcConfig& cfg) {
  cfg.validate();
  gamma.validate();
  const int n = panel.n_units();
  const int p = basis.rank;
  if (basis.projected.rows() != n) fail(errc::invalid_input, "basis does not match panel units");

  const LikelihoodTable table(panel, d, k, cfg.exclude_infected_prev);
  const ChainRecorder rec{cfg.n_iter, cfg.burn_in, cfg.thin};

  RngStream rng = RngStream::from(cfg.seed, "picar");

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(p);
  double omega = cfg.fix_omega.value_or(-5.0);
  double tau = cfg.fix_tau.value_or(1000.0);
  if (!(omega > -10.0 && omega < 0.0)) fail(errc::invalid_input, "omega must lie in (-10,0)");
  if (!(tau > 0.0)) fail(errc::invalid_input, "tau must be > 0");

  // Start the field at the data-informed constant: omega from the initial
  // beta level unless pinned.
  if (!cfg.fix_omega) {
    const double level = std::log(initial_beta(table).mean());
    omega = std::clamp(level, -9.9, -0.01);
  }

  Eigen::VectorXd x = (basis.projected * delta).array() + omega;  // log beta
  auto total_loglik = [&](const Eigen::VectorXd& log_beta) {
    if (!cfg.use_likelihood) return 0.0;
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      ll += table.unit_loglik(i, std::exp(log_beta[i]), gamma.gamma);
      if (is_degenerate_loglik(ll)) return ll;
    }
    return ll;
  };
  double cur_ll = total_loglik(x);
  if (is_degenerate_loglik(cur_ll))
    fail(errc::numerical, "initial state has -inf likelihood (degenerate gamma/force)");

  AdaptiveScale delta_scale(cfg.init_step_block, cfg.target_block);
  AdaptiveScale omega_scale(cfg.init_step_scalar, cfg.target_scalar);
  AdaptiveScale tau_scale(cfg.init_step_scalar, cfg.target_scalar);

  Chain chain;
  chain.config = cfg;
  chain.beta_draws.resize(rec.n_recorded(), n);
  chain.delta_draws.resize(rec.n_recorded(), p);
  chain.scalars["omega"].resize(rec.n_recorded());
  chain.scalars["tau"].resize(rec.n_recorded());
  chain.log_post.resize(rec.n_recorded());

  Eigen::VectorXd z(p);
  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    if (iter == cfg.burn_in) {
      delta_scale.freeze();
      omega_scale.freeze();
      tau_scale.freeze();
    }

    {
      for (int j = 0; j < p; ++j) z[j] = rng.normal();
      const double step = delta_scale.scale();
      Eigen::VectorXd delta_new = delta + step * z;
      Eigen::VectorXd x_new = x + step * (basis.projected * z);
      const double ll_new = total_loglik(x_new);
      // With Q = I and orthonormal M the weight prior is iid N(0, 1/tau).
      const double log_ratio =
          ll_new - cur_ll - 0.5 * tau * (delta_new.squaredNorm() - delta.squaredNorm());
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) {
        delta.swap(delta_new);
        x.swap(x_new);
        cur_ll = ll_new;
      }
      delta_scale.observe(accept);
    }

    if (!cfg.fix_omega) {
      const double s = transforms::to_unbounded(omega, -10.0, 0.0);
      const double s_new = s + omega_scale.scale() * rng.normal();
      const double omega_new = transforms::to_bounded(s_new, -10.0, 0.0);
      Eigen::VectorXd x_new = x.array() + (omega_new - omega);
      const double ll_new = total_loglik(x_new);
      const double log_ratio = ll_new - cur_ll +
                               transforms::log_jacobian(omega_new, -10.0, 0.0) -
                               transforms::log_jacobian(omega, -10.0, 0.0);
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) {
        omega = omega_new;
        x.swap(x_new);
        cur_ll = ll_new;
      }
      omega_scale.observe(accept);
    }

    if (!cfg.fix_tau) {
      const double lt = std::log(tau);
      const double lt_new = lt + tau_scale.scale() * rng.normal();
      const double tau_new = std::exp(lt_new);
      const double log_ratio = tau_log_prior(tau_new) - tau_log_prior(tau) +
                               0.5 * p * (lt_new - lt) -
                               0.5 * (tau_new - tau) * delta.squaredNorm() + lt_new - lt;
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) tau = tau_new;
      tau_scale.observe(accept);
    }

    if (rec.record_at(iter)) {
      const int s = rec.slot(iter);
      chain.beta_draws.row(s) = x.array().exp().transpose();
      chain.delta_draws.row(s) = delta.transpose();
      chain.scalars["omega"][s] = omega;
      chain.scalars["tau"][s] = tau;
      chain.log_post[s] = cur_ll + 0.5 * p * std::log(tau) -
                          0.5 * tau * delta.squaredNorm() + tau_log_prior(tau);
    }
  }

  chain.accept_rates["delta"] = delta_scale.acceptance_rate();
  if (!cfg.fix_omega) chain.accept_rates["omega"] = omega_scale.acceptance_rate();
  if (!cfg.fix_tau) chain.accept_rates["tau"] = tau_scale.acceptance_rate();
  return chain;
}

}  // namespace susmap
