#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vlab/errors.hpp"

namespace vlab {

inline constexpr double kTauGeom = 1e-10;

struct ParticleSystem {
  int n_particles = 0;
  int dim = 1;  // 1 or 2; 3 permitted for oracle comparisons
  std::vector<double> masses;

  void validate() const;
  double total_mass() const;
  int config_dim() const { return dim * (n_particles - 1); }
  std::string descriptor() const;
};

struct ConfigPoint {
  Eigen::MatrixXd coords;  // n_particles x dim
  bool in_X0 = false;
};

struct Cluster {
  std::vector<int> members;  // zero-based particle indices
};

struct Partition {
  std::vector<Cluster> clusters;

  int order() const { return static_cast<int>(clusters.size()); }
  void validate(const ParticleSystem& sys) const;
  int cluster_of(int particle) const;
  std::string descriptor() const;
};

struct ClusterFrame {
  Partition partition;
  ConfigPoint q;   // q_i = x_i - x_{C_l}
  ConfigPoint xi;  // xi_i = x_{C_l}
};

struct ConeSpec {
  Partition partition;
  double kappa = 0.5;
  double kappa_prime = 0.25;
  double radius = 1.0;  // R of K_R

  void validate() const;
};

struct ConeMembership {
  bool in_K = false;
  bool in_K_R = false;
  bool in_shell = false;  // K_R(Z,kappa) minus K_R(Z,kappa')
};

double mass_inner(const ParticleSystem& sys, const ConfigPoint& x, const ConfigPoint& y);
double mass_norm(const ParticleSystem& sys, const ConfigPoint& x);
ConfigPoint project_X0(const ParticleSystem& sys, const ConfigPoint& x);
ConfigPoint project_Xc(const ParticleSystem& sys, const ConfigPoint& x);
ClusterFrame cluster_coords(const ParticleSystem& sys, const Partition& Z, const ConfigPoint& x);

// Mass-orthonormal basis of X0. Every basis vector is a tensor product
// c^(k) (x) e_a of a particle-space vector (sum_i m_i c_i = 0) with a spatial
// axis, ordered k-major, so frame coordinates factor per spatial axis and a
// grid Laplacian in frame coordinates is the plain FD Laplacian.
// Cluster-adapted frames put the internal (q) axes first: the leading
// n_q_axes vectors span X0(Z), the rest span X_c(Z) intersect X0.
struct Frame {
  ParticleSystem sys;
  std::vector<Eigen::VectorXd> particle_vecs;
  int n_q_axes = -1;  // -1 when not cluster-adapted

  int config_dim() const { return static_cast<int>(particle_vecs.size()) * sys.dim; }
  Eigen::VectorXd to_frame(const ConfigPoint& x) const;
  ConfigPoint from_frame(const Eigen::VectorXd& y) const;
};

Frame orthonormal_frame(const ParticleSystem& sys);
Frame cluster_adapted_frame(const ParticleSystem& sys, const Partition& Z);

ConeMembership cone_membership(const ParticleSystem& sys, const ConeSpec& spec,
                               const ConfigPoint& x);

std::vector<Partition> two_cluster_partitions(int n_particles);

struct ConeSeparationReport {
  double kappa = 0.0;
  int samples = 0;
  bool vacuous = false;  // N = 2: a point cannot lie in two distinct cones
  std::string note;
};

ConeSeparationReport cone_separation_kappa(const ParticleSystem& sys, double R,
                                           std::uint64_t seed = 20240711ULL,
                                           int n_samples = 100000);

}  // namespace vlab
