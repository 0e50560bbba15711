#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "susmap/mcmc.hpp"
#include "susmap/picar.hpp"
#include "susmap/simulate.hpp"
#include "susmap/twostep.hpp"

namespace susmap {

struct Split {
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  double train_fraction = 0.9;
};

// Uniform partition without replacement; train side holds
// round(fraction * N) units.
Split train_test_split(int n_units, double train_fraction, RngStream& rng);

double mspe(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
            const std::vector<int>& test_idx);

// Pearson correlation of mid-ranks (ties get average ranks).
double spearman(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

// Per-unit mean outbreak indicator over t=1..T.
Eigen::VectorXd incidence_ranking(const OutbreakPanel& panel);

// Total cross-entropy over the test units and t=2..T; probs_test rows
// follow test_idx order.
double oos_cross_entropy(const OutbreakPanel& panel, const Eigen::MatrixXd& probs_test,
                         const std::vector<int>& test_idx);

// One model fit on the training units with out-of-sample susceptibility
// prediction for the held-out units:
//   ism        -> posterior mean of alpha (the prior mean),
//   sdsm       -> GP conditional mean of log beta, exponentiated,
//   sdsm-picar -> held-out rows of the basis projection.
struct FitPrediction {
  Eigen::VectorXd beta_hat;  // full length; train entries are posterior means
  PosteriorSummary summary;
  double seconds = 0.0;
};
FitPrediction fit_and_predict(const std::string& model, const SpatialUnits& units,
                              const OutbreakPanel& panel, const DistanceMatrix& d,
                              const KernelParams& k, const BackgroundRate& gamma,
                              const Split& split, const McmcConfig& cfg, int picar_rank,
                              double picar_buffer);

struct EvalReport {
  std::string scenario;
  std::string model;
  int replicate = 0;
  double mspe_test = 0.0;
  double spearman_model = 0.0;
  double spearman_incidence = 0.0;
  double oos_ce = 0.0;
  double seconds = 0.0;
  double gamma_hat = 0.0;
  double phi_hat = 0.0;
};

struct BenchScenario {
  std::string name;
  FieldKind field_kind = FieldKind::gp;
  double rho = 400.0;  // used when field_kind == gp
};

struct BenchmarkConfig {
  int n_units = 250;
  int t_steps = 100;
  int replicates = 20;
  double domain_width = 1500.0;   // km; Turkey-like aspect
  double domain_height = 700.0;
  double train_fraction = 0.9;
  KernelParams kernel{60.0, 3.0};
  double gamma = 0.002;
  double p0 = 0.05;
  double gp_omega = -0.5;
  double gp_sigma2 = 1.0;
  IsmPrior ism{1.0};
  std::vector<BenchScenario> scenarios;
  std::vector<std::string> models{"ism", "sdsm", "sdsm-picar"};
  McmcConfig chain;       // benchmark-scale chain settings
  int picar_rank = 50;
  double picar_buffer = -1.0;  // < 0: default buffer
  bool estimate_step1 = true;  // run the two-step per replicate
  int phi_grid_size = 20;
  std::uint64_t seed = 0;
  int threads = 1;

  static BenchmarkConfig desk_defaults();
};

struct BenchmarkResult {
  std::vector<EvalReport> cells;  // deterministic (scenario, model, replicate) order

  double median_metric(const std::string& scenario, const std::string& model,
                       const std::string& metric) const;
};

// Simulate -> split -> two-step -> fit each model -> metrics, over the
// scenario grid. Replicates run in parallel; results land in fixed slots
// so the output is identical at any thread count.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

// One replicate cell; exposed for the pipeline and tests.
std::vector<EvalReport> run_benchmark_replicate(const BenchmarkConfig& cfg,
                                                const BenchScenario& scenario, int replicate);

}  // namespace susmap
