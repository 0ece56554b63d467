#include "vlab/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "vlab/rng.hpp"

namespace vlab {

namespace {

struct Gershgorin {
  double lo, hi;
};

Gershgorin gershgorin_bounds(const SpMat& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<double> diag(n, 0.0), off(n, 0.0);
  for (int kcol = 0; kcol < A.outerSize(); ++kcol)
    for (SpMat::InnerIterator it(A, kcol); it; ++it) {
      if (it.row() == it.col())
        diag[it.row()] = it.value();
      else
        off[it.row()] += std::abs(it.value());
    }
  Gershgorin g{diag[0] - off[0], diag[0] + off[0]};
  for (int i = 1; i < n; ++i) {
    g.lo = std::min(g.lo, diag[i] - off[i]);
    g.hi = std::max(g.hi, diag[i] + off[i]);
  }
  return g;
}

Eigen::VectorXd seeded_unit_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  const double nrm = v.norm();
  return nrm > 0 ? Eigen::VectorXd(v / nrm) : Eigen::VectorXd::Unit(n, 0);
}

}  // namespace

SpectralResult lowest_eigenpairs(const SpMat& A, int k, double tol, std::uint64_t seed) {
  const int n = static_cast<int>(A.rows());
  if (A.rows() != A.cols()) throw ValidationError("lowest_eigenpairs: matrix not square");
  if (k < 1 || k > n) throw ValidationError("lowest_eigenpairs: k out of range");

  const Gershgorin g = gershgorin_bounds(A);
  const double span = std::max(1.0, g.hi - g.lo);
  const double scale = std::max(1.0, std::max(std::abs(g.lo), std::abs(g.hi)));

  SpMat I(n, n);
  I.setIdentity();

  Eigen::SimplicialLDLT<SpMat> solver;
  // factor A - s I and report how many eigenvalues lie below s via the pivot
  // signs; -1 flags a breakdown (s essentially on top of an eigenvalue)
  auto factor_at = [&](double s) -> int {
    SpMat shifted = A - s * I;
    solver.compute(shifted);
    if (solver.info() != Eigen::Success) return -1;
    const Eigen::VectorXd D = solver.vectorD();
    int c = 0;
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(D[i]) || D[i] == 0.0) return -1;
      if (D[i] < 0.0) ++c;
    }
    return c;
  };

  // start the shift-invert point below the Gershgorin floor, where the
  // shifted matrix is positive definite
  double sigma = g.lo - 0.01 * span;
  for (int attempt = 0; factor_at(sigma) != 0; ++attempt) {
    if (attempt >= 3) throw ConvergenceError("lowest_eigenpairs: shifted factorization failed");
    sigma -= 0.25 * span;
  }

  SpectralResult res;
  res.seed = seed;

  // the Lanczos basis is a dense n x m block; cap m by memory as well
  const int m_max =
      std::min(n, std::min(600, std::max(60, static_cast<int>(4.8e8 / (8.0 * n)))));
  int m = std::min(m_max, std::max(3 * k + 30, 60));
  for (int round = 0;; ++round) {
    Rng rng(seed);
    Eigen::MatrixXd V(n, m);
    std::vector<double> alpha, beta;  // beta[j] couples v_j and v_{j+1}
    V.col(0) = seeded_unit_vector(n, rng);
    int j = 0;
    for (; j < m; ++j) {
      Eigen::VectorXd w = solver.solve(V.col(j));
      const double a = V.col(j).dot(w);
      alpha.push_back(a);
      // full reorthogonalization, two passes
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd coef = V.leftCols(j + 1).transpose() * w;
        w.noalias() -= V.leftCols(j + 1) * coef;
      }
      const double b = w.norm();
      if (j + 1 == m) break;
      if (b < 1e-13) {
        // invariant subspace; refill with a fresh orthogonalized direction
        Eigen::VectorXd f = seeded_unit_vector(n, rng);
        for (int pass = 0; pass < 2; ++pass) {
          Eigen::VectorXd coef = V.leftCols(j + 1).transpose() * f;
          f.noalias() -= V.leftCols(j + 1) * coef;
        }
        const double fn = f.norm();
        if (fn < 1e-13) {
          ++j;
          break;
        }
        V.col(j + 1) = f / fn;
        beta.push_back(0.0);
      } else {
        V.col(j + 1) = w / b;
        beta.push_back(b);
      }
    }
    const int mm = std::min<int>(j + 1, m);

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mm, mm);
    for (int i = 0; i < mm; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < mm) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success)
      throw ConvergenceError("lowest_eigenpairs: tridiagonal solve failed");

    // largest Ritz values of (A - sigma)^-1 map to the smallest of A
    const int got = std::min(k, mm);
    Eigen::VectorXd lam(got);
    Eigen::MatrixXd vecs(n, got);
    for (int i = 0; i < got; ++i) {
      const int src = mm - 1 - i;
      const double theta = es.eigenvalues()[src];
      lam[i] = sigma + (theta != 0.0 ? 1.0 / theta : 0.0);
      Eigen::VectorXd v = V.leftCols(mm) * es.eigenvectors().col(src);
      v.normalize();
      vecs.col(i) = v;
    }
    // ascending in lambda
    std::vector<int> order(got);
    for (int i = 0; i < got; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return lam[a] < lam[b]; });

    Eigen::VectorXd lam_sorted(got), resid(got);
    Eigen::MatrixXd vec_sorted(n, got);
    for (int i = 0; i < got; ++i) {
      lam_sorted[i] = lam[order[i]];
      vec_sorted.col(i) = vecs.col(order[i]);
      resid[i] = (A * vec_sorted.col(i) - lam_sorted[i] * vec_sorted.col(i)).norm();
    }

    bool converged = got == k;
    for (int i = 0; i < got && converged; ++i)
      if (!(resid[i] <= tol * scale)) converged = false;

    if (converged || mm >= n) {
      // a full Krylov space is exact up to rounding
      res.eigenvalues = lam_sorted;
      res.eigenvectors = vec_sorted;
      res.residuals = resid;
      res.iterations = mm;
      return res;
    }
    if (round >= 40)
      throw ConvergenceError("lowest_eigenpairs: not converged, worst residual " +
                             std::to_string(resid.maxCoeff()) + " vs bound " +
                             std::to_string(tol * scale));

    // pull the shift to just below the lowest Ritz value so the inverted gap
    // ratio improves; every candidate is certified by its pivot count before
    // use, backing off toward the last safe shift on overshoot
    const double lam0 = lam_sorted[0];
    double lam_next = g.hi;
    if (mm > got) {
      const double theta = es.eigenvalues()[mm - 1 - got];
      if (theta > 0.0) lam_next = sigma + 1.0 / theta;
    } else if (got > 0) {
      lam_next = lam_sorted[got - 1];
    }
    const double margin = std::max(0.25 * (lam_next - lam0),
                                   std::max(1e-12 * scale, 1e-9 * std::abs(lam0)));
    bool moved = false;
    if (std::isfinite(lam0) && std::isfinite(margin) && lam0 > sigma &&
        margin < 0.5 * (lam0 - sigma)) {
      const double safe = sigma;
      double cand = lam0 - margin;
      for (int t = 0; t < 6 && !moved; ++t) {
        if (factor_at(cand) == 0) {
          sigma = cand;
          moved = true;
        } else {
          cand = 0.5 * (cand + safe);
        }
      }
      if (!moved && factor_at(safe) != 0)
        throw ConvergenceError("lowest_eigenpairs: shifted factorization failed");
    }
    if (!moved) {
      if (m >= m_max)
        throw ConvergenceError("lowest_eigenpairs: not converged, worst residual " +
                               std::to_string(resid.maxCoeff()) + " vs bound " +
                               std::to_string(tol * scale));
      m = std::min(m_max, 2 * m + 20);
    }
  }
}

std::pair<double, Eigen::VectorXd> constrained_ground(
    const SpMat& A,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& projector,
    double tol, int subspace, std::uint64_t seed) {
  const int n = static_cast<int>(A.rows());
  Rng rng(seed);

  // idempotency and symmetry on probe vectors
  std::vector<Eigen::VectorXd> probes;
  for (int t = 0; t < 8; ++t) probes.push_back(seeded_unit_vector(n, rng));
  for (const auto& v : probes) {
    const Eigen::VectorXd pv = projector(v);
    if ((projector(pv) - pv).norm() > 1e-10 * std::max(1.0, v.norm()))
      throw ValidationError("constrained_ground: projector not idempotent");
  }
  for (int t = 0; t + 1 < 8; t += 2) {
    const double lhs = projector(probes[t]).dot(probes[t + 1]);
    const double rhs = probes[t].dot(projector(probes[t + 1]));
    if (std::abs(lhs - rhs) > 1e-10) throw ValidationError("constrained_ground: projector not symmetric");
  }

  const int kk = std::min(subspace, n);
  SpectralResult base = lowest_eigenpairs(A, kk, tol, seed);

  Eigen::MatrixXd W(n, kk);
  for (int i = 0; i < kk; ++i) W.col(i) = projector(base.eigenvectors.col(i));
  // orthonormalize the projected span, dropping near-null directions
  Eigen::MatrixXd Q(n, kk);
  int r = 0;
  for (int i = 0; i < kk; ++i) {
    Eigen::VectorXd w = W.col(i);
    for (int pass = 0; pass < 2; ++pass)
      if (r > 0) w.noalias() -= Q.leftCols(r) * (Q.leftCols(r).transpose() * w);
    const double nrm = w.norm();
    if (nrm > 1e-8) Q.col(r++) = w / nrm;
  }
  if (r == 0)
    throw ValidationError("constrained_ground: projector annihilates the computed subspace");

  const Eigen::MatrixXd Qr = Q.leftCols(r);
  const Eigen::MatrixXd G = Qr.transpose() * (A * Qr);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  if (es.info() != Eigen::Success) throw ConvergenceError("constrained_ground: projected solve failed");
  Eigen::VectorXd v = Qr * es.eigenvectors().col(0);
  v.normalize();
  return {es.eigenvalues()[0], v};
}

int counting_below(const SpMat& A, double z) {
  if (A.rows() != A.cols()) throw ValidationError("counting_below: matrix not square");
  if (z > 0.0) throw ValidationError("counting_below: z must be <= 0");
  const int n = static_cast<int>(A.rows());
  SpMat I(n, n);
  I.setIdentity();

  for (int attempt = 0; attempt < 6; ++attempt) {
    // perturb the shift on retry: z, z-d0, z+d0, z-d1, z+d1, z-d2
    const int level = (attempt + 1) / 2;
    const double delta = (attempt == 0)
                             ? 0.0
                             : (1.0 + std::abs(z)) * 1e-11 * std::pow(3.0, level - 1) *
                                   ((attempt % 2) ? -1.0 : 1.0);
    SpMat B = A - (z + delta) * I;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(B);
    if (ldlt.info() != Eigen::Success) continue;
    const Eigen::VectorXd D = ldlt.vectorD();
    bool healthy = true;
    int count = 0;
    const double tiny = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = D[i];
      if (!std::isfinite(d) || d == tiny) {
        healthy = false;
        break;
      }
      if (d < 0.0) ++count;
    }
    if (healthy) return count;
  }
  throw ConvergenceError("counting_below: factorization breakdown at shift despite perturbation");
}

}  // namespace vlab
