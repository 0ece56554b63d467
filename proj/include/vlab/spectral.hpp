#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <utility>

#include "vlab/errors.hpp"

namespace vlab {

using SpMat = Eigen::SparseMatrix<double>;

struct SpectralResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, unit length
  Eigen::VectorXd residuals;     // ||A v - lambda v||, recomputed on A
  int iterations = 0;
  std::uint64_t seed = 0;
};

// k smallest eigenpairs of a sparse symmetric matrix via shift-invert Lanczos
// with full reorthogonalization. Deterministic for fixed seed. The residual
// contract is ||A v - lambda v|| <= tol * scale with scale = max(1, spread of
// the Gershgorin interval).
SpectralResult lowest_eigenpairs(const SpMat& A, int k, double tol = 1e-8,
                                 std::uint64_t seed = 0x243F6A8885A308D3ULL);

// Minimum Rayleigh quotient of A over the range of an orthogonal projector,
// estimated in the span of the lowest `subspace` Ritz vectors (an upper bound
// that is exact once the constrained minimizer lies in that span, e.g. for
// deflation projectors). The projector must be idempotent and symmetric; both
// are verified on seeded probe vectors to 1e-10.
std::pair<double, Eigen::VectorXd> constrained_ground(
    const SpMat& A,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& projector,
    double tol = 1e-8, int subspace = 12,
    std::uint64_t seed = 0x452821E638D01377ULL);

// Number of eigenvalues strictly below z (z <= 0), by LDL^T inertia of A - zI.
// Exact integer; breakdown triggers shift perturbations before giving up.
int counting_below(const SpMat& A, double z);

}  // namespace vlab
