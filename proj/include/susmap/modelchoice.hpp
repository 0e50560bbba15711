#pragma once

#include <Eigen/Dense>
#include <vector>

#include "susmap/mcmc.hpp"
#include "susmap/spatial.hpp"

namespace susmap {

// Binned spatial autocorrelation of a per-unit statistic with a
// permutation null envelope. Bins are equal-width over (0, max_dist/2];
// estimates are only valid for bins holding at least 30 pairs.
struct Correlogram {
  Eigen::VectorXd bin_edges;    // n_bins + 1, starting at 0
  Eigen::VectorXd bin_centers;  // km
  Eigen::VectorXd estimate;
  Eigen::VectorXd env_lo;       // 2.5% permutation envelope
  Eigen::VectorXd env_hi;       // 97.5%
  Eigen::VectorXi n_pairs;
  std::vector<bool> valid;
  int n_permutations = 0;

  int n_bins() const { return static_cast<int>(bin_centers.size()); }
};

// Moran-type binned autocorrelation of centered values; shared by the
// observed statistic and every permutation replicate. No size guard here
// so the arithmetic stays testable on toy pairs.
Eigen::VectorXd binned_autocorrelation(const Eigen::VectorXd& values,
                                       const Eigen::MatrixXd& dist,
                                       const Eigen::VectorXd& bin_edges,
                                       Eigen::VectorXi* pair_counts = nullptr);

Correlogram spatial_correlogram(const Eigen::VectorXd& values, const DistanceMatrix& d,
                                int n_bins, int n_perms, RngStream& rng);

struct HeuristicRule {
  int n_bins = 12;
  int n_perms = 999;
  int check_bins = 5;   // leading valid bins examined
  int min_exceed = 2;   // verdict dependent iff >= this many exceed env_hi
};

struct DependenceDecision {
  bool dependent = false;
  std::vector<int> flagged_bins;  // indices of checked bins above the envelope
  HeuristicRule rule;
};

// Pure function of a correlogram plus the rule constants.
DependenceDecision apply_dependence_rule(const Correlogram& c, const HeuristicRule& rule);

struct HeuristicResult {
  Correlogram correlogram;
  DependenceDecision decision;
  Eigen::VectorXd losses;     // per-unit cross-entropy from the ISM fit
  Eigen::VectorXd beta_mean;  // ISM posterior mean used for the fit
};

// The four-step procedure: fit the independent model, compute fitted
// outbreak probabilities from the posterior-mean field, take per-unit
// cross-entropy losses, and test their correlogram against a permutation
// envelope.
HeuristicResult dependence_heuristic(const OutbreakPanel& panel, const SpatialUnits& units,
                                     const DistanceMatrix& d, const KernelParams& k,
                                     const BackgroundRate& gamma, const McmcConfig& cfg,
                                     const HeuristicRule& rule);

}  // namespace susmap
