#include "susmap/mcmc.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "susmap/simulate.hpp"

namespace susmap {

Eigen::VectorXd initial_beta(const LikelihoodTable& table) {
  const int n = table.n_units();
  const int m = table.n_terms();
  double force_sum = 0.0;
  long long force_count = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < m; ++c)
      if (table.forces()(i, c) > 0.0) {
        force_sum += table.forces()(i, c);
        ++force_count;
      }
  const double mean_force = force_count > 0 ? force_sum / force_count : 1.0;

  Eigen::VectorXd beta(n);
  for (int i = 0; i < n; ++i) {
    double incidence = 0.0;
    for (int c = 0; c < m; ++c) incidence += table.outcomes()(i, c);
    incidence /= m;
    beta[i] = (incidence + 0.5 / (m + 1)) / mean_force;
  }
  return beta;
}

namespace {

double exp_prior_logpdf(double beta, double alpha) {
  return -std::log(alpha) - beta / alpha;
}

}  // namespace

Chain fit_ism(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
              const BackgroundRate& gamma, const McmcConfig& cfg) {
  cfg.validate();
  gamma.validate();
  const LikelihoodTable table(panel, d, k, cfg.exclude_infected_prev);
  const int n = table.n_units();
  const ChainRecorder rec{cfg.n_iter, cfg.burn_in, cfg.thin};

  RngStream rng = RngStream::from(cfg.seed, "ism");

  Eigen::VectorXd beta = initial_beta(table);
  double alpha = cfg.fix_alpha.value_or(2.5);
  if (!(alpha > 0.0 && alpha < 5.0)) fail(errc::invalid_input, "alpha must lie in (0,5)");

  Eigen::VectorXd unit_ll(n);
  auto unit_loglik = [&](int i, double b) {
    return cfg.use_likelihood ? table.unit_loglik(i, b, gamma.gamma) : 0.0;
  };
  for (int i = 0; i < n; ++i) {
    unit_ll[i] = unit_loglik(i, beta[i]);
    if (is_degenerate_loglik(unit_ll[i]))
      fail(errc::numerical,
           "initial state has -inf likelihood (gamma=0 with observed outbreaks and zero "
           "transmission force at unit " + std::to_string(i) + ")");
  }

  std::vector<AdaptiveScale> beta_scales(static_cast<size_t>(n),
                                         AdaptiveScale(cfg.init_step_scalar, cfg.target_scalar));
  AdaptiveScale alpha_scale(cfg.init_step_scalar, cfg.target_scalar);

  Chain chain;
  chain.config = cfg;
  chain.beta_draws.resize(rec.n_recorded(), n);
  chain.scalars["alpha"].resize(rec.n_recorded());
  chain.log_post.resize(rec.n_recorded());

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    if (iter == cfg.burn_in) {
      for (auto& s : beta_scales) s.freeze();
      alpha_scale.freeze();
    }

    // Single-site updates in ascending unit order (reproducibility).
    for (int i = 0; i < n; ++i) {
      const double theta = std::log(beta[i]);
      const double theta_new = theta + beta_scales[static_cast<size_t>(i)].scale() * rng.normal();
      const double beta_new = std::exp(theta_new);
      const double ll_new = unit_loglik(i, beta_new);
      // log-scale walk: prior + likelihood + log-Jacobian (theta).
      const double log_ratio = ll_new - unit_ll[i] +
                               exp_prior_logpdf(beta_new, alpha) -
                               exp_prior_logpdf(beta[i], alpha) + theta_new - theta;
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) {
        beta[i] = beta_new;
        unit_ll[i] = ll_new;
      }
      beta_scales[static_cast<size_t>(i)].observe(accept);
    }

    if (!cfg.fix_alpha) {
      const double s = transforms::to_unbounded(alpha, 0.0, 5.0);
      const double s_new = s + alpha_scale.scale() * rng.normal();
      const double alpha_new = transforms::to_bounded(s_new, 0.0, 5.0);
      double log_ratio = transforms::log_jacobian(alpha_new, 0.0, 5.0) -
                         transforms::log_jacobian(alpha, 0.0, 5.0);
      for (int i = 0; i < n; ++i)
        log_ratio += exp_prior_logpdf(beta[i], alpha_new) - exp_prior_logpdf(beta[i], alpha);
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) alpha = alpha_new;
      alpha_scale.observe(accept);
    }

    if (rec.record_at(iter)) {
      const int s = rec.slot(iter);
      chain.beta_draws.row(s) = beta.transpose();
      chain.scalars["alpha"][s] = alpha;
      double lp = unit_ll.sum();
      for (int i = 0; i < n; ++i) lp += exp_prior_logpdf(beta[i], alpha);
      chain.log_post[s] = lp;
    }
  }

  double beta_acc = 0.0;
  for (const auto& s : beta_scales) beta_acc += s.acceptance_rate();
  chain.accept_rates["beta"] = beta_acc / n;
  if (!cfg.fix_alpha) chain.accept_rates["alpha"] = alpha_scale.acceptance_rate();
  return chain;
}

namespace {

// Dense GP prior workspace for the full SDSM sampler. Everything needed
// for O(1)..O(N) single-site updates is cached and refreshed when rho
// changes (or periodically, to shed incremental round-off).
struct GpWorkspace {
  Eigen::MatrixXd corr;      // C(rho), unit diagonal + jitter
  Eigen::MatrixXd precision; // C^-1
  Eigen::VectorXd prec_one;  // C^-1 1
  double one_prec_one = 0.0;
  double logdet = 0.0;

  Eigen::VectorXd u;    // C^-1 (x - omega 1)
  double quad = 0.0;    // (x - omega 1)' C^-1 (x - omega 1)
  double sum_u = 0.0;   // 1' u

  void rebuild_corr(const Eigen::MatrixXd& dist, double invrho) {
    Eigen::MatrixXd c = (-dist * invrho).array().exp().matrix();
    const CholFactor chol = cholesky_with_jitter(c);
    if (chol.jitter > 0.0) c.diagonal().array() += chol.jitter;
    corr = std::move(c);
    logdet = 2.0 * chol.L.diagonal().array().log().sum();
    Eigen::MatrixXd inv_l = chol.L.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(corr.rows(), corr.cols()));
    precision = inv_l.transpose() * inv_l;
    prec_one = precision.rowwise().sum();
    one_prec_one = prec_one.sum();
  }

  void refresh_state(const Eigen::VectorXd& x, double omega) {
    Eigen::VectorXd r = x.array() - omega;
    u = precision * r;
    quad = r.dot(u);
    sum_u = u.sum();
  }
};

// N(omega 1, sigma2 C) log-density up to the -N/2 log(2 pi) constant.
double gp_log_prior(int n, double sigma2, double logdet_corr, double quad) {
  return -0.5 * (n * std::log(sigma2) + logdet_corr) - 0.5 * quad / sigma2;
}

}  // namespace

Chain fit_sdsm_full(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
                    const BackgroundRate& gamma, const McmcConfig& cfg) {
  cfg.validate();
  gamma.validate();
  const int n = panel.n_units();
  if (n > cfg.max_dense_units)
    fail(errc::capacity, "full SDSM is limited to N <= " + std::to_string(cfg.max_dense_units) +
                             " units; use the basis-reduced sampler for larger problems");

  const LikelihoodTable table(panel, d, k, cfg.exclude_infected_prev);
  const ChainRecorder rec{cfg.n_iter, cfg.burn_in, cfg.thin};
  RngStream rng = RngStream::from(cfg.seed, "sdsm");

  // State: x = log beta plus hyperparameters at prior midpoints.
  Eigen::VectorXd x = initial_beta(table).array().log();
  double sigma = cfg.fix_sigma.value_or(2.5);
  double invrho = cfg.fix_rho ? 1.0 / *cfg.fix_rho : 0.5;
  double omega = cfg.fix_omega.value_or(-5.0);
  if (!(sigma > 0.0 && sigma < 5.0)) fail(errc::invalid_input, "sigma must lie in (0,5)");
  if (!(invrho > 0.0 && invrho < 1.0)) fail(errc::invalid_input, "1/rho must lie in (0,1)");
  if (!(omega > -10.0 && omega < 0.0)) fail(errc::invalid_input, "omega must lie in (-10,0)");

  GpWorkspace gp;
  gp.rebuild_corr(d.d, invrho);
  gp.refresh_state(x, omega);

  Eigen::VectorXd unit_ll(n);
  auto unit_loglik = [&](int i, double log_beta_i) {
    return cfg.use_likelihood ? table.unit_loglik(i, std::exp(log_beta_i), gamma.gamma) : 0.0;
  };
  for (int i = 0; i < n; ++i) {
    unit_ll[i] = unit_loglik(i, x[i]);
    if (is_degenerate_loglik(unit_ll[i]))
      fail(errc::numerical, "initial state has -inf likelihood (degenerate gamma/force)");
  }

  std::vector<AdaptiveScale> x_scales(static_cast<size_t>(n),
                                      AdaptiveScale(cfg.init_step_scalar, cfg.target_scalar));
  AdaptiveScale sigma_scale(cfg.init_step_scalar, cfg.target_scalar);
  AdaptiveScale rho_scale(cfg.init_step_scalar, cfg.target_scalar);
  AdaptiveScale omega_scale(cfg.init_step_scalar, cfg.target_scalar);

  Chain chain;
  chain.config = cfg;
  chain.beta_draws.resize(rec.n_recorded(), n);
  chain.scalars["sigma"].resize(rec.n_recorded());
  chain.scalars["rho"].resize(rec.n_recorded());
  chain.scalars["omega"].resize(rec.n_recorded());
  chain.log_post.resize(rec.n_recorded());

  for (int iter = 0; iter < cfg.n_iter; ++iter) {
    if (iter == cfg.burn_in) {
      for (auto& s : x_scales) s.freeze();
      sigma_scale.freeze();
      rho_scale.freeze();
      omega_scale.freeze();
    }
    // Shed incremental round-off in the cached quadratic form.
    if (iter > 0 && iter % 1000 == 0) gp.refresh_state(x, omega);

    const double sigma2 = sigma * sigma;

    for (int i = 0; i < n; ++i) {
      const double step = x_scales[static_cast<size_t>(i)].scale() * rng.normal();
      const double x_new = x[i] + step;
      const double ll_new = unit_loglik(i, x_new);
      // GP prior delta for a single coordinate of x.
      const double d_quad = 2.0 * step * gp.u[i] + step * step * gp.precision(i, i);
      const double log_ratio = ll_new - unit_ll[i] - 0.5 * d_quad / sigma2;
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) {
        x[i] = x_new;
        unit_ll[i] = ll_new;
        gp.quad += d_quad;
        gp.u += step * gp.precision.col(i);
        gp.sum_u += step * gp.prec_one[i];
      }
      x_scales[static_cast<size_t>(i)].observe(accept);
    }

    if (!cfg.fix_sigma) {
      const double s = transforms::to_unbounded(sigma, 0.0, 5.0);
      const double s_new = s + sigma_scale.scale() * rng.normal();
      const double sigma_new = transforms::to_bounded(s_new, 0.0, 5.0);
      const double log_ratio =
          gp_log_prior(n, sigma_new * sigma_new, gp.logdet, gp.quad) -
          gp_log_prior(n, sigma2, gp.logdet, gp.quad) +
          transforms::log_jacobian(sigma_new, 0.0, 5.0) -
          transforms::log_jacobian(sigma, 0.0, 5.0);
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) sigma = sigma_new;
      sigma_scale.observe(accept);
    }

    if (!cfg.fix_rho) {
      const double s = transforms::to_unbounded(invrho, 0.0, 1.0);
      const double s_new = s + rho_scale.scale() * rng.normal();
      const double invrho_new = transforms::to_bounded(s_new, 0.0, 1.0);
      // Candidate correlation: one Cholesky for logdet + quad.
      Eigen::MatrixXd c_new = (-d.d * invrho_new).array().exp().matrix();
      const CholFactor chol = cholesky_with_jitter(c_new);
      const double logdet_new = 2.0 * chol.L.diagonal().array().log().sum();
      Eigen::VectorXd r = x.array() - omega;
      const double quad_new =
          chol.L.triangularView<Eigen::Lower>().solve(r).squaredNorm();
      const double sig2 = sigma * sigma;
      const double log_ratio = gp_log_prior(n, sig2, logdet_new, quad_new) -
                               gp_log_prior(n, sig2, gp.logdet, gp.quad) +
                               transforms::log_jacobian(invrho_new, 0.0, 1.0) -
                               transforms::log_jacobian(invrho, 0.0, 1.0);
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) {
        invrho = invrho_new;
        gp.rebuild_corr(d.d, invrho);
        gp.refresh_state(x, omega);
      }
      rho_scale.observe(accept);
    }

    if (!cfg.fix_omega) {
      const double s = transforms::to_unbounded(omega, -10.0, 0.0);
      const double s_new = s + omega_scale.scale() * rng.normal();
      const double omega_new = transforms::to_bounded(s_new, -10.0, 0.0);
      const double delta = omega_new - omega;
      const double quad_new =
          gp.quad - 2.0 * delta * gp.sum_u + delta * delta * gp.one_prec_one;
      const double sig2 = sigma * sigma;
      const double log_ratio = -0.5 * (quad_new - gp.quad) / sig2 +
                               transforms::log_jacobian(omega_new, -10.0, 0.0) -
                               transforms::log_jacobian(omega, -10.0, 0.0);
      const bool accept = std::log(rng.uniform()) < log_ratio;
      if (accept) {
        omega = omega_new;
        gp.quad = quad_new;
        gp.u -= delta * gp.prec_one;
        gp.sum_u -= delta * gp.one_prec_one;
      }
      omega_scale.observe(accept);
    }

    if (rec.record_at(iter)) {
      const int s = rec.slot(iter);
      chain.beta_draws.row(s) = x.array().exp().transpose();
      chain.scalars["sigma"][s] = sigma;
      chain.scalars["rho"][s] = 1.0 / invrho;
      chain.scalars["omega"][s] = omega;
      chain.log_post[s] =
          unit_ll.sum() + gp_log_prior(n, sigma * sigma, gp.logdet, gp.quad);
    }
  }

  double x_acc = 0.0;
  for (const auto& s : x_scales) x_acc += s.acceptance_rate();
  chain.accept_rates["beta"] = x_acc / n;
  if (!cfg.fix_sigma) chain.accept_rates["sigma"] = sigma_scale.acceptance_rate();
  if (!cfg.fix_rho) chain.accept_rates["rho"] = rho_scale.acceptance_rate();
  if (!cfg.fix_omega) chain.accept_rates["omega"] = omega_scale.acceptance_rate();
  return chain;
}

double sample_quantile(Eigen::VectorXd values, double q) {
  const Eigen::Index n = values.size();
  if (n == 0) fail(errc::invalid_input, "quantile of empty sample");
  std::sort(values.data(), values.data() + n);
  if (n == 1) return values[0];
  const double h = (n - 1) * q;
  const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(h));
  const Eigen::Index hi = std::min(lo + 1, n - 1);
  const double w = h - lo;
  return (1.0 - w) * values[lo] + w * values[hi];
}

double ess_initial_positive_sequence(const Eigen::VectorXd& draws) {
  const Eigen::Index n = draws.size();
  if (n < 2) return static_cast<double>(n);
  const double mean = draws.mean();
  Eigen::VectorXd centered = draws.array() - mean;
  const double c0 = centered.squaredNorm() / n;
  if (c0 <= 0.0) return static_cast<double>(n);

  auto autocov = [&](Eigen::Index lag) {
    double s = 0.0;
    for (Eigen::Index t = 0; t + lag < n; ++t) s += centered[t] * centered[t + lag];
    return s / n;
  };

  // Sum paired autocovariances while the pair sums stay positive.
  double sum_pairs = 0.0;
  for (Eigen::Index m = 0;; ++m) {
    const Eigen::Index l1 = 2 * m + 1;
    const Eigen::Index l2 = 2 * m + 2;
    if (l1 >= n) break;
    const double pair = autocov(l1) + (l2 < n ? autocov(l2) : 0.0);
    if (pair <= 0.0) break;
    sum_pairs += pair;
  }
  const double iact = std::max(1.0, 1.0 + 2.0 * sum_pairs / c0);
  return static_cast<double>(n) / iact;
}

ParamSummary summarize_series(const Eigen::VectorXd& draws) {
  ParamSummary s;
  const Eigen::Index n = draws.size();
  if (n == 0) fail(errc::invalid_input, "empty chain");
  s.mean = draws.mean();
  s.sd = n > 1 ? std::sqrt((draws.array() - s.mean).square().sum() / (n - 1)) : 0.0;
  s.q025 = sample_quantile(draws, 0.025);
  s.q975 = sample_quantile(draws, 0.975);
  s.ess = ess_initial_positive_sequence(draws);
  return s;
}

PosteriorSummary posterior_summary(const Chain& chain) {
  if (chain.n_samples() == 0) fail(errc::invalid_input, "chain has no recorded samples");
  PosteriorSummary out;
  out.beta.resize(static_cast<size_t>(chain.n_units()));
  for (int j = 0; j < chain.n_units(); ++j)
    out.beta[static_cast<size_t>(j)] = summarize_series(chain.beta_draws.col(j));
  for (const auto& [name, series] : chain.scalars) out.hyper[name] = summarize_series(series);
  return out;
}

}  // namespace susmap
