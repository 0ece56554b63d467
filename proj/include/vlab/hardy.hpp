#pragma once

#include <array>
#include <string>

#include <Eigen/Dense>

#include "vlab/geometry.hpp"

namespace vlab {

// one-dimensional three-body configuration plane cut by the collision lines
struct SectorDecomposition {
  std::array<double, 3> theta{};    // indexed by the distinguished particle
  double theta_max = 0.0;           // widest sector governs the Hardy constant
  std::array<Eigen::Vector2d, 3> boundary_dirs{};  // collision line directions,
                                                   // pairs (0,1),(0,2),(1,2)
};

SectorDecomposition sector_angles(const ParticleSystem& sys);

struct HardyReport {
  double value = 0.0;
  bool exact = true;
  bool lower_bound_only = false;
  bool resonance_possible = false;
  std::string method;
};

// best constant in ||grad_0 psi|| >= C ||psi/|x|_m|| over functions vanishing
// on the collision set and on the unit ball
HardyReport hardy_constant(const ParticleSystem& sys);

double sector_hardy_constant(double theta);      // pi / theta
double cone_hardy_constant_3d(double lambda1);   // sqrt(lambda1 + 1/4)

struct HardyNumericReport {
  double value = 0.0;
  int free_nodes = 0;
  int points = 0;
  double radius = 0.0;
};

// direct variational estimate of the three-body constant for d=1 on a grid
// over the configuration plane, with the collision lines and the unit ball
// carved out; upper-biased by the carving and the box truncation
HardyNumericReport rayleigh_estimate_CH(const ParticleSystem& sys, double R_out = 40.0,
                                        int points = 321);

enum class ScalarHardyKind {
  halfline_1d,   // int u'^2 vs (1/4) int u^2/x^2, u(0)=0
  exterior_d3,   // radial exterior Hardy in three dimensions, reduced exactly
                 // to the half-line form by w = r u
  log_2d         // exterior log weight in two dimensions via s = log r
};

std::string to_string(ScalarHardyKind kind);

struct ScalarHardyReport {
  ScalarHardyKind kind = ScalarHardyKind::halfline_1d;
  double quotient = 0.0;
  double reference = 0.25;  // sharp constant being verified
  int nodes = 0;
  std::string note;
};

// conforming P1 verification on log-spaced meshes; conformity makes the
// discrete quotient an upper bound for the sharp constant, so landing in a
// tight window above 1/4 certifies the inequality numerically
ScalarHardyReport verify_scalar_hardy(ScalarHardyKind kind, int nodes = 10000);

// shared P1 machinery: geometric mesh and the minimal Rayleigh quotient
// int f'^2 + shift*int f^2 over int f^2 w with the first node pinned
std::vector<double> log_mesh(double lo, double hi, int nodes);
double weighted_p1_quotient(const std::vector<double>& mesh, double (*weight)(double),
                            double mass_shift);

}  // namespace vlab
