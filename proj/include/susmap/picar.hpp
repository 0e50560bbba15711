#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "susmap/mcmc.hpp"
#include "susmap/spatial.hpp"

namespace susmap {

// Delaunay triangulation of the observation sites plus one buffer ring of
// hull-offset vertices. The first n_obs vertices are the observation
// locations in input order.
struct Mesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::pair<int, int>> edges;  // unique, first < second
  int n_obs = 0;

  int n_vertices() const { return static_cast<int>(vertices.rows()); }
  Eigen::MatrixXd adjacency() const;  // dense 0/1 from mesh edges
};

Mesh build_mesh(const SpatialUnits& units, double buffer_km);

// Rows are barycentric weights of each unit in its containing triangle:
// nonnegative, at most 3 nonzeros, summing to one.
Eigen::SparseMatrix<double> projector(const Mesh& mesh, const SpatialUnits& units);

struct MoranBasis {
  Eigen::MatrixXd m;        // n_v x p, orthonormal, each column orthogonal to 1
  Eigen::VectorXd eigvals;  // sorted descending
};

// Leading eigenvectors of P WP with P = I - 11'/n (Moran operator).
MoranBasis moran_basis(const Eigen::MatrixXd& adjacency, int p);
MoranBasis moran_basis(const Mesh& mesh, int p);

struct PicarBasis {
  Mesh mesh;
  Eigen::SparseMatrix<double> a;  // N x n_v projector
  Eigen::MatrixXd m;              // n_v x p Moran basis
  Eigen::VectorXd eigvals;
  Eigen::MatrixXd projected;      // A M, N x p; the likelihood-side basis
  int rank = 0;

  // Prior precision Q over mesh vertices is the identity, so the weight
  // prior reduces to delta ~ N(0, (1/tau) I).
};

PicarBasis build_picar_basis(const SpatialUnits& units, double buffer_km, int rank);

// Default buffer: 5% of the domain diameter.
double default_mesh_buffer(const SpatialUnits& units);

// log beta = A M delta + omega, exponentiated.
SusceptibilityField recover_beta(const Eigen::VectorXd& delta, double omega,
                                 const PicarBasis& basis);

// Basis-weight posterior: block random walk on delta, scalar walks on
// omega and log tau; per-iteration cost O(N p) plus one likelihood sweep.
Chain fit_sdsm_picar(const OutbreakPanel& panel, const DistanceMatrix& d, const KernelParams& k,
                     const BackgroundRate& gamma, const PicarBasis& basis,
                     const McmcConfig& cfg);

// tau prior: gamma with shape 0.5 and scale 2000 (mean 1000).
double tau_log_prior(double tau);

}  // namespace susmap
