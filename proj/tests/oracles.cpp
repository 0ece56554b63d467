#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracle {

double well_barrier_W(double y) {
  const double a = std::abs(y);
  if (a <= 1.0) return -1.0;
  if (a <= 2.0) return 4.0;
  return 0.0;
}

double well_barrier_lambda_star() {
  auto f = [](double k) { return std::tan(k) - 2.0 * std::tanh(2.0 * k); };
  double lo = 1.0, hi = 1.3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  const double k = 0.5 * (lo + hi);
  return k * k;
}

namespace {

// u'' = (lambda W - E) u integrated from the symmetric initial data; returns
// u(L). RK4 on the first-order system, fixed fine step.
double shoot_u_at_L(double lambda, double E, double L) {
  const double h = 5e-4;
  const auto n = static_cast<long>(std::ceil(L / h));
  const double step = L / static_cast<double>(n);
  double u = 1.0, v = 0.0, y = 0.0;
  auto acc = [&](double yy, double uu) { return (lambda * well_barrier_W(yy) - E) * uu; };
  for (long i = 0; i < n; ++i) {
    const double k1u = v, k1v = acc(y, u);
    const double k2u = v + 0.5 * step * k1v, k2v = acc(y + 0.5 * step, u + 0.5 * step * k1u);
    const double k3u = v + 0.5 * step * k2v, k3v = acc(y + 0.5 * step, u + 0.5 * step * k2u);
    const double k4u = v + step * k3v, k4v = acc(y + step, u + step * k3u);
    u += step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    y += step;
    // keep the magnitude tame; only the sign of u(L) matters
    const double m = std::max(std::abs(u), std::abs(v));
    if (m > 1e100) {
      u /= m;
      v /= m;
    }
  }
  return u;
}

}  // namespace

double well_barrier_E1(double lambda, double L) {
  // march upward from below the potential floor until u(L) changes sign
  double E_lo = -1.1 * lambda - 0.1;
  double f_lo = shoot_u_at_L(lambda, E_lo, L);
  double E = E_lo;
  const double step = 0.02;
  double E_hi = 0.0, f_hi = 0.0;
  bool bracketed = false;
  for (int i = 0; i < 4000; ++i) {
    E += step;
    const double f = shoot_u_at_L(lambda, E, L);
    if (f * f_lo < 0.0) {
      E_hi = E;
      f_hi = f;
      E_lo = E - step;
      bracketed = true;
      break;
    }
    f_lo = f;
    E_lo = E;
  }
  if (!bracketed) throw std::runtime_error("shooting oracle: no eigenvalue bracket");
  (void)f_hi;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (E_lo + E_hi);
    const double f = shoot_u_at_L(lambda, mid, L);
    if (f * f_lo > 0.0) {
      E_lo = mid;
      f_lo = f;
    } else {
      E_hi = mid;
    }
  }
  return 0.5 * (E_lo + E_hi);
}

double well_barrier_lambda_at(double tau, double L) {
  auto g = [&](double lambda) { return well_barrier_E1(lambda, L) + tau; };
  double lo = 0.5, hi = 2.0;
  double g_lo = g(lo);
  if (!(g_lo > 0.0 && g(hi) < 0.0))
    throw std::runtime_error("shooting oracle: lambda bracket does not straddle");
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

int square_well_count(double V0, double a) {
  const double z0 = a * std::sqrt(V0);
  return static_cast<int>(std::floor(2.0 * z0 / 3.14159265358979323846)) + 1;
}

std::array<double, 3> collision_sector_gaps(const vlab::ParticleSystem& sys) {
  if (sys.n_particles != 3 || sys.dim != 1)
    throw std::runtime_error("sector gap oracle needs three particles in one dimension");
  const auto& m = sys.masses;
  // particle-space directions of the collision lines, already mass-balanced
  auto line_dir = [&](int i, int j, int k) {
    Eigen::Vector3d u;
    u[i] = m[static_cast<std::size_t>(k)];
    u[j] = m[static_cast<std::size_t>(k)];
    u[k] = -(m[static_cast<std::size_t>(i)] + m[static_cast<std::size_t>(j)]);
    return u;
  };
  auto dot_m = [&](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += m[static_cast<std::size_t>(i)] * x[i] * y[i];
    return s;
  };
  // mass-orthonormal plane basis by Gram-Schmidt in X0
  Eigen::Vector3d e1 = line_dir(0, 1, 2);
  e1 /= std::sqrt(dot_m(e1, e1));
  Eigen::Vector3d e2 = line_dir(0, 2, 1);
  e2 -= dot_m(e2, e1) * e1;
  e2 /= std::sqrt(dot_m(e2, e2));
  std::array<double, 3> phi{};
  const std::array<std::array<int, 3>, 3> lines = {{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  for (std::size_t l = 0; l < 3; ++l) {
    const auto u = line_dir(lines[l][0], lines[l][1], lines[l][2]);
    double ang = std::atan2(dot_m(u, e2), dot_m(u, e1));
    const double pi = 3.14159265358979323846;
    while (ang < 0.0) ang += pi;  // lines, not rays: angles mod pi
    while (ang >= pi) ang -= pi;
    phi[l] = ang;
  }
  std::sort(phi.begin(), phi.end());
  std::array<double, 3> gaps = {phi[1] - phi[0], phi[2] - phi[1],
                                3.14159265358979323846 - (phi[2] - phi[0])};
  std::sort(gaps.begin(), gaps.end());
  return gaps;
}

Eigen::VectorXd dense_lowest(const vlab::SpMat& A, int k) {
  Eigen::MatrixXd D(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  return es.eigenvalues().head(k);
}

int dense_count_below(const vlab::SpMat& A, double z) {
  Eigen::MatrixXd D(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  int c = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < z) ++c;
  return c;
}

}  // namespace oracle
