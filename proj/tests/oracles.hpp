#pragma once

#include <array>

#include <Eigen/Dense>

#include "vlab/geometry.hpp"
#include "vlab/spectral.hpp"

// Independent reference computations. Everything here avoids the library's
// discretization and eigensolver paths: ODE shooting, dense eigensolvers,
// and coordinate-free plane geometry.
namespace oracle {

// W = -1 on |y| <= 1, +4 on 1 < |y| <= 2; the documented well-barrier shape
double well_barrier_W(double y);

// continuum zero-energy threshold of -psi'' + lambda W from the even
// matching condition tan k = 2 tanh 2k, lambda = k^2
double well_barrier_lambda_star();

// lowest even eigenvalue of -psi'' + lambda W on [0, L] with psi'(0) = 0 and
// psi(L) = 0, by RK4 shooting and bisection on the energy
double well_barrier_E1(double lambda, double L);

// coupling at which that eigenvalue crosses -tau
double well_barrier_lambda_at(double tau, double L);

// bound states of -psi'' - V0 on |y| <= a: floor(2 a sqrt(V0)/pi) + 1
int square_well_count(double V0, double a);

// the three sector gaps cut by the collision lines in the mass-metric plane
// X0 (three particles, one dimension), ascending
std::array<double, 3> collision_sector_gaps(const vlab::ParticleSystem& sys);

Eigen::VectorXd dense_lowest(const vlab::SpMat& A, int k);
int dense_count_below(const vlab::SpMat& A, double z);

}  // namespace oracle
