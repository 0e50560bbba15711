#include "susmap/modelchoice.hpp"

#include <algorithm>
#include <cmath>

namespace susmap {

Eigen::VectorXd binned_autocorrelation(const Eigen::VectorXd& values,
                                       const Eigen::MatrixXd& dist,
                                       const Eigen::VectorXd& bin_edges,
                                       Eigen::VectorXi* pair_counts) {
  const int n = static_cast<int>(values.size());
  const int n_bins = static_cast<int>(bin_edges.size()) - 1;
  if (n_bins < 1) fail(errc::invalid_input, "need at least one bin");
  if (dist.rows() != n || dist.cols() != n)
    fail(errc::invalid_input, "distance matrix does not match values");

  const Eigen::VectorXd r = values.array() - values.mean();
  const double var = r.squaredNorm() / n;
  if (!(var > 0.0))
    fail(errc::invalid_input, "autocorrelation undefined for constant input");

  Eigen::VectorXd sums = Eigen::VectorXd::Zero(n_bins);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(n_bins);
  const double lo = bin_edges[0];
  const double hi = bin_edges[n_bins];
  const double width = (hi - lo) / n_bins;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dij = dist(i, j);
      if (dij <= lo || dij > hi) continue;
      int b = static_cast<int>((dij - lo) / width);
      if (b >= n_bins) b = n_bins - 1;  // right edge lands in the last bin
      sums[b] += r[i] * r[j];
      ++counts[b];
    }
  }

  Eigen::VectorXd est(n_bins);
  for (int b = 0; b < n_bins; ++b)
    est[b] = counts[b] > 0 ? (sums[b] / counts[b]) / var
                           : std::numeric_limits<double>::quiet_NaN();
  if (pair_counts) *pair_counts = counts;
  return est;
}

Correlogram spatial_correlogram(const Eigen::VectorXd& values, const DistanceMatrix& d,
                                int n_bins, int n_perms, RngStream& rng) {
  const int n = static_cast<int>(values.size());
  if (n < 10) fail(errc::invalid_input, "correlogram needs at least 10 units");
  if (d.size() != n) fail(errc::invalid_input, "distance matrix does not match values");
  if (n_bins < 1 || n_perms < 39)
    fail(errc::invalid_input, "need n_bins >= 1 and n_perms >= 39");

  Correlogram c;
  c.n_permutations = n_perms;
  const double max_d = d.max();
  if (!(max_d > 0.0)) fail(errc::invalid_input, "all units coincide");
  c.bin_edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b) c.bin_edges[b] = max_d / 2.0 * b / n_bins;
  c.bin_centers.resize(n_bins);
  for (int b = 0; b < n_bins; ++b)
    c.bin_centers[b] = 0.5 * (c.bin_edges[b] + c.bin_edges[b + 1]);

  c.estimate = binned_autocorrelation(values, d.d, c.bin_edges, &c.n_pairs);
  c.valid.resize(static_cast<size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b)
    c.valid[static_cast<size_t>(b)] = c.n_pairs[b] >= 30 && std::isfinite(c.estimate[b]);

  // Null envelope: recompute the statistic under random relabelings of
  // the values over locations; each replicate has its own keyed stream.
  Eigen::MatrixXd perm_stats(n_perms, n_bins);
  std::vector<int> perm(static_cast<size_t>(n));
  Eigen::VectorXd shuffled(n);
  for (int repl = 0; repl < n_perms; ++repl) {
    RngStream stream = rng.sub(static_cast<std::uint64_t>(repl));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(stream.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    }
    for (int i = 0; i < n; ++i) shuffled[i] = values[perm[static_cast<size_t>(i)]];
    perm_stats.row(repl) = binned_autocorrelation(shuffled, d.d, c.bin_edges).transpose();
  }

  // Classic Monte Carlo envelope: k-th extreme order statistics.
  const int k = std::max(1, static_cast<int>(std::floor(0.025 * (n_perms + 1))));
  c.env_lo.resize(n_bins);
  c.env_hi.resize(n_bins);
  std::vector<double> column(static_cast<size_t>(n_perms));
  for (int b = 0; b < n_bins; ++b) {
    if (!c.valid[static_cast<size_t>(b)]) {
      c.env_lo[b] = std::numeric_limits<double>::quiet_NaN();
      c.env_hi[b] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    for (int repl = 0; repl < n_perms; ++repl) column[static_cast<size_t>(repl)] = perm_stats(repl, b);
    std::sort(column.begin(), column.end());
    c.env_lo[b] = column[static_cast<size_t>(k - 1)];
    c.env_hi[b] = column[static_cast<size_t>(n_perms - k)];
  }
  return c;
}

DependenceDecision apply_dependence_rule(const Correlogram& c, const HeuristicRule& rule) {
  DependenceDecision out;
  out.rule = rule;
  int checked = 0;
  for (int b = 0; b < c.n_bins() && checked < rule.check_bins; ++b) {
    if (!c.valid[static_cast<size_t>(b)]) continue;
    ++checked;
    if (c.estimate[b] > c.env_hi[b]) out.flagged_bins.push_back(b);
  }
  out.dependent = static_cast<int>(out.flagged_bins.size()) >= rule.min_exceed;
  return out;
}

HeuristicResult dependence_heuristic(const OutbreakPanel& panel, const SpatialUnits& units,
                                     const DistanceMatrix& d, const KernelParams& k,
                                     const BackgroundRate& gamma, const McmcConfig& cfg,
                                     const HeuristicRule& rule) {
  if (units.size() < 10) fail(errc::invalid_input, "dependence heuristic needs at least 10 units");
  if (panel.n_units() != units.size())
    fail(errc::invalid_input, "panel does not match units");

  HeuristicResult out;
  Chain chain = fit_ism(panel, d, k, gamma, cfg);
  out.beta_mean = chain.beta_draws.colwise().mean();

  const Eigen::MatrixXd forces = kernel_force_matrix(panel, d, k);
  const Eigen::MatrixXd probs =
      outbreak_probabilities(forces, SusceptibilityField(out.beta_mean), gamma);
  out.losses = cross_entropy_by_unit(panel, probs);

  RngStream perms = RngStream::from(cfg.seed, "heuristic-perms");
  out.correlogram = spatial_correlogram(out.losses, d, rule.n_bins, rule.n_perms, perms);
  out.decision = apply_dependence_rule(out.correlogram, rule);
  return out;
}

}  // namespace susmap
