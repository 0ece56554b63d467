#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlab/geometry.hpp"
#include "vlab/spectral.hpp"

namespace vlab {

struct GridSpec {
  int dim_config = 1;
  double L = 10.0;              // box [-L, L] per axis
  int points_per_axis = 101;    // node count including both wall nodes
  std::size_t memory_budget = 8u << 20;  // max interior unknowns

  double h() const { return 2.0 * L / (points_per_axis - 1); }
  int interior_per_axis() const { return points_per_axis - 2; }
  std::size_t unknowns() const;
  double node(int j) const { return -L + (j + 1) * h(); }  // interior index
  void validate() const;
  std::string descriptor() const;
};

// "zero" at this discretization: 5x the free Dirichlet box ground energy
double tau_zero(const GridSpec& grid);

struct PotentialPiece {
  enum class Kind { step, gaussian, bump };
  Kind kind = Kind::step;
  double value = -1.0;  // amplitude
  double r0 = 0.0;      // step: inner radius; gaussian: width; bump: support radius
  double r1 = 1.0;      // step: outer radius
};

struct PairPotential {
  std::vector<PotentialPiece> pieces;

  double operator()(double r) const;  // r = |x_i - x_j| >= 0
  double support_radius() const;      // beyond this the tail is the gaussian tails only
};

// |V(r)| <= C (1+r)^{-2-nu} for r >= A
struct DecayCertificate {
  double C = 1.0;
  double nu = 1.0;
  double A = 1.0;
};

struct PotentialSpec {
  int n_particles = 0;
  std::vector<PairPotential> pair_table;  // row-major upper triangle, i<j
  DecayCertificate cert;
  bool radial = true;  // all built-in pieces are radial in |x_i - x_j|

  static PotentialSpec uniform(int n_particles, const PairPotential& v,
                               const DecayCertificate& cert);
  static PotentialSpec zero(int n_particles);
  PotentialSpec scaled(double lambda) const;  // lambda * V with the cert scaled
  const PairPotential& pair(int i, int j) const;
  PairPotential& pair(int i, int j);
  void validate() const;  // certificate tail check on log-spaced samples
  double eval_config(const ParticleSystem& sys, const ConfigPoint& x) const;
};

struct DiscreteOperator {
  SpMat matrix;
  GridSpec grid;
  Frame frame;
  double kinetic_factor = 1.0;  // (1 - eps) in front of -Delta_0
  std::string descriptor;
};

DiscreteOperator build_laplacian(const GridSpec& grid);

// (1-eps) * FD Laplacian + diag(V) in mass-orthonormal frame coordinates.
// With dim_config == 1 the potential is averaged exactly over each grid cell
// (closed form for steps, GL5 for smooth pieces); higher dimensions sample at
// nodes.
DiscreteOperator assemble_hamiltonian(const ParticleSystem& sys, const PotentialSpec& pot,
                                      const GridSpec& grid, double epsilon,
                                      const std::optional<Frame>& frame = std::nullopt);

enum class WeightKind { inv_sq_1d, log_2d, multiparticle_log, inv_beta_exterior };

struct WeightSpec {
  WeightKind kind = WeightKind::inv_sq_1d;
  double beta = 2.0;  // inv_beta_exterior exponent
  double b = 1.0;     // inv_beta_exterior cutoff radius

  double operator()(double r) const;  // value at |x|_m = r, <= 0
  std::string name() const;
  void validate() const;  // parameters positive, strictly negative where defined
};

DiscreteOperator assemble_perturbed(const DiscreteOperator& base, const WeightSpec& w,
                                    double epsilon);

struct ClusterOperators {
  DiscreteOperator HZ;          // sum of cluster-internal Hamiltonians
  DiscreteOperator kinetic_xi;  // -Delta_xi
  DiscreteOperator IZ;          // inter-cluster potential, diagonal
  DiscreteOperator H_full;      // full H assembled in the same adapted frame
};

ClusterOperators cluster_hamiltonian(const ParticleSystem& sys, const Partition& Z,
                                     const PotentialSpec& pot, const GridSpec& grid);

// min over two-cluster partitions of the summed cluster ground energies,
// computed on per-cluster grids with the same spacing; estimates inf S_ess
// of the (1-epsilon)-kinetic operator
double hvz_floor(const ParticleSystem& sys, const PotentialSpec& pot, const GridSpec& grid,
                 double epsilon = 0.0);

// ground energy helper used throughout: smallest eigenvalue of the assembled
// Hamiltonian
double ground_energy(const ParticleSystem& sys, const PotentialSpec& pot, const GridSpec& grid,
                     double epsilon);

}  // namespace vlab
