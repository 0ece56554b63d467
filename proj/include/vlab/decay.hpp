#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vlab/discretize.hpp"

namespace vlab {

enum class ThresholdOrigin { resonance_sequence_limit, direct_threshold_eigenvector };

// threshold-normalized grid function: ||grad phi||^2 + ||phi||^2 on the unit
// ball equals 1
struct ThresholdFunction {
  Eigen::VectorXd phi;
  GridSpec grid;
  Frame frame;
  ThresholdOrigin origin = ThresholdOrigin::direct_threshold_eigenvector;
  double eigenvalue = 0.0;
  double grad_norm_sq = 0.0;
  double ball_mass = 0.0;
  bool flagged_eigenvalue = false;   // Hardy constant above 1 forces an eigenfunction
  bool resonance_possible = false;
  std::string note;
};

struct ResonanceMember {
  int n = 0;
  double energy = 0.0;
  Eigen::VectorXd psi;  // threshold-normalized, positive at the origin cell
  double grad_norm_sq = 0.0;
  double ball_mass = 0.0;
};

// ground pairs of the kinetic-weakened operators (1-1/n)(-Laplace)+V; energies
// must be negative when the system carries a virtual level
std::vector<ResonanceMember> resonance_sequence(const ParticleSystem& sys,
                                                const PotentialSpec& pot, const GridSpec& grid,
                                                const std::vector<int>& n_list = {4, 8, 16, 32});

ThresholdFunction threshold_function(const ParticleSystem& sys, const PotentialSpec& pot,
                                     const GridSpec& grid);

enum class DecayWeight { power, log_power };

// || w phi ||_{L^2} with w = (1+r)^{alpha-1} or its logarithmic refinement
double weighted_norm(const ThresholdFunction& phi, DecayWeight kind, double alpha);

// || grad(r^alpha phi) || via the grid Dirichlet form
double weighted_grad_norm(const ThresholdFunction& phi, double alpha);

struct TailFit {
  double slope = 0.0;
  double band = 0.0;  // two standard errors of the slope
  std::vector<double> radii;
  std::vector<double> rms;
};

// log-log least squares over mass-metric shells in the window [L/4, 3L/4]
TailFit tail_exponent_fit(const ThresholdFunction& phi);

struct DecayFitReport {
  std::vector<double> alphas;
  std::vector<double> norms;          // on the given box
  std::vector<double> norms_doubled;  // box doubled at fixed spacing
  std::vector<double> ratios;
  TailFit fit;
};

DecayFitReport decay_report(const ParticleSystem& sys, const PotentialSpec& pot,
                            const GridSpec& grid, const std::vector<double>& alphas,
                            DecayWeight kind);

}  // namespace vlab
