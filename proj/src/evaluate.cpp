#include "susmap/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "susmap/threadpool.hpp"

namespace susmap {

Split train_test_split(int n_units, double train_fraction, RngStream& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(errc::invalid_input, "train fraction must lie in (0,1)");
  const int n_train = static_cast<int>(std::lround(train_fraction * n_units));
  if (n_train < 1 || n_train >= n_units)
    fail(errc::invalid_input, "split leaves an empty train or test side");

  std::vector<int> order(static_cast<size_t>(n_units));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n_units - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }

  Split split;
  split.train_fraction = train_fraction;
  split.train_idx.assign(order.begin(), order.begin() + n_train);
  split.test_idx.assign(order.begin() + n_train, order.end());
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

double mspe(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
            const std::vector<int>& test_idx) {
  if (test_idx.empty()) fail(errc::invalid_input, "mspe needs a nonempty test set");
  if (beta_hat.size() != beta_true.size())
    fail(errc::invalid_input, "estimate/truth length mismatch");
  double s = 0.0;
  for (int i : test_idx) {
    if (i < 0 || i >= beta_hat.size()) fail(errc::index, "test id out of range");
    const double e = beta_hat[i] - beta_true[i];
    s += e * e;
  }
  return s / static_cast<double>(test_idx.size());
}

namespace {

Eigen::VectorXd midranks(const Eigen::VectorXd& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return xs[a] < xs[b]; });
  Eigen::VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && xs[order[static_cast<size_t>(j + 1)]] == xs[order[static_cast<size_t>(i)]]) ++j;
    const double rank = 0.5 * (i + j) + 1.0;  // average of 1-based ranks i+1..j+1
    for (int t = i; t <= j; ++t) ranks[order[static_cast<size_t>(t)]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) {
  if (xs.size() != ys.size()) fail(errc::invalid_input, "spearman length mismatch");
  if (xs.size() < 3) fail(errc::invalid_input, "spearman needs at least 3 observations");
  const Eigen::VectorXd rx = midranks(xs);
  const Eigen::VectorXd ry = midranks(ys);
  const Eigen::VectorXd cx = rx.array() - rx.mean();
  const Eigen::VectorXd cy = ry.array() - ry.mean();
  const double den = cx.norm() * cy.norm();
  if (!(den > 0.0)) fail(errc::invalid_input, "spearman undefined for zero rank variance");
  return cx.dot(cy) / den;
}

Eigen::VectorXd incidence_ranking(const OutbreakPanel& panel) {
  Eigen::VectorXd inc(panel.n_units());
  for (int i = 0; i < panel.n_units(); ++i) {
    double s = 0.0;
    for (int t = 0; t < panel.n_steps(); ++t) s += panel.y(i, t);
    inc[i] = s / panel.n_steps();
  }
  return inc;
}

double oos_cross_entropy(const OutbreakPanel& panel, const Eigen::MatrixXd& probs_test,
                         const std::vector<int>& test_idx) {
  const int m = panel.n_steps() - 1;
  if (probs_test.rows() != static_cast<Eigen::Index>(test_idx.size()) || probs_test.cols() != m)
    fail(errc::invalid_input, "test probability matrix has wrong shape");
  double total = 0.0;
  for (size_t r = 0; r < test_idx.size(); ++r) {
    const int i = test_idx[r];
    for (int c = 0; c < m; ++c) {
      const double p = std::clamp(probs_test(static_cast<Eigen::Index>(r), c), kProbClamp,
                                  1.0 - kProbClamp);
      total -= panel.y(i, c + 1) ? std::log(p) : std::log1p(-p);
    }
  }
  return total;
}

namespace {

OutbreakPanel subset_panel(const OutbreakPanel& panel, const std::vector<int>& idx) {
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(
      static_cast<Eigen::Index>(idx.size()), panel.n_steps());
  for (size_t r = 0; r < idx.size(); ++r) y.row(static_cast<Eigen::Index>(r)) = panel.y.row(idx[r]);
  return OutbreakPanel(std::move(y), panel.time_labels);
}

DistanceMatrix subset_distances(const DistanceMatrix& d, const std::vector<int>& idx) {
  DistanceMatrix out;
  out.d.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  for (size_t a = 0; a < idx.size(); ++a)
    for (size_t b = 0; b < idx.size(); ++b)
      out.d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d.d(idx[a], idx[b]);
  return out;
}

Eigen::SparseMatrix<double> subset_rows(const Eigen::SparseMatrix<double>& a,
                                        const std::vector<int>& idx) {
  std::vector<int> slot(static_cast<size_t>(a.rows()), -1);
  for (size_t r = 0; r < idx.size(); ++r) slot[static_cast<size_t>(idx[r])] = static_cast<int>(r);

  Eigen::SparseMatrix<double> out(static_cast<Eigen::Index>(idx.size()), a.cols());
  std::vector<Eigen::Triplet<double>> trip;
  for (int col = 0; col < a.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it) {
      const int r = slot[static_cast<size_t>(it.row())];
      if (r >= 0) trip.emplace_back(r, col, it.value());
    }
  }
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace

FitPrediction fit_and_predict(const std::string& model, const SpatialUnits& units,
                              const OutbreakPanel& panel, const DistanceMatrix& d,
                              const KernelParams& k, const BackgroundRate& gamma,
                              const Split& split, const McmcConfig& cfg, int picar_rank,
                              double picar_buffer) {
  const auto t0 = std::chrono::steady_clock::now();
  const OutbreakPanel panel_tr = subset_panel(panel, split.train_idx);
  const DistanceMatrix d_tr = subset_distances(d, split.train_idx);
  const int n = units.size();

  FitPrediction out;
  out.beta_hat.resize(n);

  if (model == "ism") {
    Chain chain = fit_ism(panel_tr, d_tr, k, gamma, cfg);
    out.summary = posterior_summary(chain);
    const Eigen::VectorXd beta_mean = chain.beta_draws.colwise().mean();
    for (size_t r = 0; r < split.train_idx.size(); ++r)
      out.beta_hat[split.train_idx[r]] = beta_mean[static_cast<Eigen::Index>(r)];
    const double alpha_hat = chain.scalars.at("alpha").mean();
    for (int i : split.test_idx) out.beta_hat[i] = alpha_hat;
  } else if (model == "sdsm") {
    Chain chain = fit_sdsm_full(panel_tr, d_tr, k, gamma, cfg);
    out.summary = posterior_summary(chain);
    const Eigen::VectorXd beta_mean = chain.beta_draws.colwise().mean();
    for (size_t r = 0; r < split.train_idx.size(); ++r)
      out.beta_hat[split.train_idx[r]] = beta_mean[static_cast<Eigen::Index>(r)];
    // Kriging from the posterior-mean log field and hyperparameters.
    const Eigen::VectorXd x_mean =
        chain.beta_draws.array().log().colwise().mean().transpose();
    GpHyperparams gp;
    gp.omega = chain.scalars.at("omega").mean();
    const double sig = chain.scalars.at("sigma").mean();
    gp.sigma2 = sig * sig;
    gp.rho = chain.scalars.at("rho").mean();
    const Eigen::VectorXd x_test =
        gp_conditional_mean(d, gp, split.train_idx, split.test_idx, x_mean);
    for (size_t r = 0; r < split.test_idx.size(); ++r)
      out.beta_hat[split.test_idx[r]] = std::exp(x_test[static_cast<Eigen::Index>(r)]);
  } else if (model == "sdsm-picar") {
    const double buffer = picar_buffer >= 0.0 ? picar_buffer : default_mesh_buffer(units);
    // Mesh covers every unit location; only the training rows of the
    // projector enter the fit.
    PicarBasis basis = build_picar_basis(units, buffer, picar_rank);
    PicarBasis basis_tr;
    basis_tr.mesh = basis.mesh;
    basis_tr.m = basis.m;
    basis_tr.eigvals = basis.eigvals;
    basis_tr.rank = basis.rank;
    basis_tr.a = subset_rows(basis.a, split.train_idx);
    basis_tr.projected = basis_tr.a * basis_tr.m;
    Chain chain = fit_sdsm_picar(panel_tr, d_tr, k, gamma, basis_tr, cfg);
    out.summary = posterior_summary(chain);
    const Eigen::VectorXd beta_mean = chain.beta_draws.colwise().mean();
    for (size_t r = 0; r < split.train_idx.size(); ++r)
      out.beta_hat[split.train_idx[r]] = beta_mean[static_cast<Eigen::Index>(r)];
    const Eigen::VectorXd delta_hat = chain.delta_draws.colwise().mean();
    const double omega_hat = chain.scalars.at("omega").mean();
    const Eigen::SparseMatrix<double> a_te = subset_rows(basis.a, split.test_idx);
    const Eigen::VectorXd x_test = (a_te * basis.m) * delta_hat;
    for (size_t r = 0; r < split.test_idx.size(); ++r)
      out.beta_hat[split.test_idx[r]] = std::exp(x_test[static_cast<Eigen::Index>(r)] + omega_hat);
  } else {
    fail(errc::config, "unknown model '" + model + "' (expected ism|sdsm|sdsm-picar)");
  }

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

BenchmarkConfig BenchmarkConfig::desk_defaults() {
  BenchmarkConfig cfg;
  cfg.scenarios = {{"independent", FieldKind::independent, 0.0},
                   {"rho200", FieldKind::gp, 200.0},
                   {"rho400", FieldKind::gp, 400.0},
                   {"rho600", FieldKind::gp, 600.0}};
  cfg.chain.n_iter = 12000;
  cfg.chain.burn_in = 4000;
  cfg.chain.thin = 8;
  return cfg;
}

std::vector<EvalReport> run_benchmark_replicate(const BenchmarkConfig& cfg,
                                                const BenchScenario& scenario, int replicate) {
  RngStream base = RngStream::from(cfg.seed, "bench");
  std::uint64_t scen_hash = RngStream::from(0, scenario.name).key();
  RngStream rep = base.sub(scen_hash, static_cast<std::uint64_t>(replicate));

  // Unit locations: uniform over the rectangle, fresh per replicate.
  RngStream unit_rng = rep.sub(1);
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(cfg.n_units, 2);
  std::vector<std::string> ids;
  ids.reserve(static_cast<size_t>(cfg.n_units));
  for (int i = 0; i < cfg.n_units; ++i) {
    coords(i, 0) = cfg.domain_width * unit_rng.uniform();
    coords(i, 1) = cfg.domain_height * unit_rng.uniform();
    ids.push_back("u" + std::to_string(i + 1));
  }
  SpatialUnits units(std::move(ids), std::move(coords));
  const DistanceMatrix d = pairwise_distances(units);

  SimScenario sim;
  sim.kernel = cfg.kernel;
  sim.gamma = cfg.gamma;
  sim.t_steps = cfg.t_steps;
  sim.field_kind = scenario.field_kind;
  sim.gp = {cfg.gp_omega, cfg.gp_sigma2, scenario.field_kind == FieldKind::gp ? scenario.rho : 400.0};
  sim.ism = cfg.ism;
  sim.p0 = cfg.p0;
  sim.seed = rep.sub(2).key();
  const SimulationResult data = simulate_scenario(sim, d);

  RngStream split_rng = rep.sub(3);
  const Split split = train_test_split(cfg.n_units, cfg.train_fraction, split_rng);

  // Step one runs on the training panel only.
  KernelParams k_hat = cfg.kernel;
  BackgroundRate gamma_hat{cfg.gamma};
  double phi_hat = cfg.kernel.phi;
  if (cfg.estimate_step1) {
    const OutbreakPanel panel_tr = subset_panel(data.panel, split.train_idx);
    const DistanceMatrix d_tr = subset_distances(d, split.train_idx);
    const int width = std::max(4, cfg.t_steps / 10);
    const QuietWindow window = find_quiet_window(panel_tr, width);
    GammaEstimate ge = estimate_gamma_mom(panel_tr, window);
    // Degenerate all-quiet window: continuity floor so the likelihood
    // stays proper.
    gamma_hat.gamma = ge.zero_count_warning
                          ? 0.5 / (static_cast<double>(panel_tr.n_units()) * window.width())
                          : ge.gamma.gamma;
    const PhiGrid grid = default_phi_grid(d_tr, cfg.phi_grid_size);
    const PhiFit pf = estimate_phi_grid(panel_tr, d_tr, grid, cfg.kernel.b0);
    phi_hat = pf.phi_hat;
    k_hat.phi = phi_hat;
  }

  const Eigen::VectorXd incidence = incidence_ranking(data.panel);
  const Eigen::MatrixXd forces_full = kernel_force_matrix(data.panel, d, k_hat);

  std::vector<EvalReport> reports;
  for (size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const std::string& model = cfg.models[mi];
    McmcConfig chain_cfg = cfg.chain;
    chain_cfg.seed = rep.sub(4, static_cast<std::uint64_t>(mi)).key();

    FitPrediction fit = fit_and_predict(model, units, data.panel, d, k_hat, gamma_hat, split,
                                        chain_cfg, cfg.picar_rank, cfg.picar_buffer);

    EvalReport r;
    r.scenario = scenario.name;
    r.model = model;
    r.replicate = replicate;
    r.gamma_hat = gamma_hat.gamma;
    r.phi_hat = phi_hat;
    r.seconds = fit.seconds;
    r.mspe_test = mspe(fit.beta_hat, data.beta_true.beta, split.test_idx);
    r.spearman_model = spearman(fit.beta_hat, data.beta_true.beta);
    r.spearman_incidence = spearman(incidence, data.beta_true.beta);

    Eigen::MatrixXd probs_test(static_cast<Eigen::Index>(split.test_idx.size()),
                               forces_full.cols());
    for (size_t tr = 0; tr < split.test_idx.size(); ++tr) {
      const int i = split.test_idx[tr];
      for (Eigen::Index c = 0; c < forces_full.cols(); ++c)
        probs_test(static_cast<Eigen::Index>(tr), c) =
            -std::expm1(-(fit.beta_hat[i] * forces_full(i, c) + gamma_hat.gamma));
    }
    r.oos_ce = oos_cross_entropy(data.panel, probs_test, split.test_idx);
    reports.push_back(std::move(r));
  }
  return reports;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.scenarios.empty() || cfg.models.empty())
    fail(errc::config, "benchmark needs at least one scenario and one model");
  const int n_tasks = static_cast<int>(cfg.scenarios.size()) * cfg.replicates;
  std::vector<std::vector<EvalReport>> slots(static_cast<size_t>(n_tasks));

  parallel_for(n_tasks, cfg.threads, [&](int task) {
    const int si = task / cfg.replicates;
    const int rep = task % cfg.replicates;
    slots[static_cast<size_t>(task)] =
        run_benchmark_replicate(cfg, cfg.scenarios[static_cast<size_t>(si)], rep);
  });

  BenchmarkResult out;
  for (auto& cell : slots)
    for (auto& r : cell) out.cells.push_back(std::move(r));
  return out;
}

double BenchmarkResult::median_metric(const std::string& scenario, const std::string& model,
                                      const std::string& metric) const {
  std::vector<double> vals;
  for (const auto& c : cells) {
    if (c.scenario != scenario || c.model != model) continue;
    if (metric == "mspe") vals.push_back(c.mspe_test);
    else if (metric == "spearman_model") vals.push_back(c.spearman_model);
    else if (metric == "spearman_incidence") vals.push_back(c.spearman_incidence);
    else if (metric == "oos_ce") vals.push_back(c.oos_ce);
    else fail(errc::invalid_input, "unknown metric " + metric);
  }
  if (vals.empty()) fail(errc::invalid_input, "no cells for " + scenario + "/" + model);
  std::sort(vals.begin(), vals.end());
  const size_t n = vals.size();
  return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

}  // namespace susmap
