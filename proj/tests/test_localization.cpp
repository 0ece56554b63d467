#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vlab/localization.hpp"
#include "vlab/rng.hpp"

using namespace vlab;

TEST_CASE("scalar cutoff endpoints and monotonicity") {
  for (double eps : {0.01, 0.1}) {
    for (double beta : {0.3, 0.5}) {
      const ScalarCutoff c = build_scalar_cutoff(eps, beta);
      CHECK(c.u_ln(std::log(beta)) == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(c.u_ln(c.ln_alpha) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(c.u_ln(c.ln_alpha - 5.0) == 1.0);
      CHECK(c.u_ln(std::log(beta) + 1.0) == 0.0);
      double prev = 1.0;
      for (int k = 0; k <= 200; ++k) {
        const double ln_t = c.ln_alpha + (std::log(beta) - c.ln_alpha) * k / 200.0;
        const double val = c.u_ln(ln_t);
        CHECK(val <= prev + 1e-13);
        prev = val;
      }
    }
  }
}

TEST_CASE("smaller eps forces a much deeper inner endpoint") {
  const ScalarCutoff a = build_scalar_cutoff(0.1, 0.5);
  const ScalarCutoff b = build_scalar_cutoff(0.01, 0.5);
  CHECK(b.ln_alpha < a.ln_alpha);
  CHECK(a.ln_alpha < std::log(0.5 * 0.5));  // past the branch seam
}

TEST_CASE("pointwise derivative bound holds on log-spaced samples") {
  for (double eps : {0.01, 0.1}) {
    for (double beta : {0.3, 0.5}) {
      const ScalarCutoff c = build_scalar_cutoff(eps, beta);
      const auto samples = sample_scalar_bound(c, 2000);
      REQUIRE(samples.size() == 2000);
      for (const auto& s : samples) {
        CHECK(s.deriv_sq <= eps * (1.0 + 1e-9));
        CHECK(s.margin >= 1.0 - 1e-9);
      }
    }
  }
}

TEST_CASE("ln-domain derivative agrees with finite differences") {
  const ScalarCutoff c = build_scalar_cutoff(0.05, 0.4);
  const double lnb = std::log(0.4);
  for (int k = 1; k < 40; ++k) {
    const double ln_t = c.ln_alpha + (lnb - c.ln_alpha) * k / 40.0;
    const double d = 1e-6;
    const double fd = (c.u_ln(ln_t + d) - c.u_ln(ln_t - d)) / (2.0 * d);
    // d/d(ln t) u = t u'(t)
    if (std::abs(fd) > 1e-8)
      CHECK(c.t_du_ln(ln_t) == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("invalid cutoff parameters are rejected") {
  CHECK_THROWS_AS(build_scalar_cutoff(0.0, 0.5), ValidationError);
  CHECK_THROWS_AS(build_scalar_cutoff(-0.1, 0.5), ValidationError);
  CHECK_THROWS_AS(build_scalar_cutoff(0.1, 1.2), ValidationError);
  CHECK_THROWS_AS(build_scalar_cutoff(0.1, 0.0), ValidationError);
  // eps so large that the profile cannot stay below 1 before beta
  CHECK_THROWS_AS(build_scalar_cutoff(50.0, 0.5), ValidationError);
}

namespace {

ParticleSystem sys3_eq() {
  ParticleSystem s;
  s.n_particles = 3;
  s.dim = 1;
  s.masses = {1.0, 1.0, 1.0};
  return s;
}

Partition split_01() {
  Partition Z;
  Z.clusters = {Cluster{{0, 1}}, Cluster{{2}}};
  return Z;
}

}  // namespace

TEST_CASE("cone pair is a partition of unity with the right plateaus") {
  const ParticleSystem s = sys3_eq();
  const CutoffPair p = build_cone_partition(s, split_01(), 0.5, 0.1);
  Rng rng(202);
  for (int t = 0; t < 500; ++t) {
    ConfigPoint x;
    x.coords.resize(3, 1);
    for (int i = 0; i < 3; ++i) x.coords(i, 0) = rng.uniform(-3.0, 3.0);
    x = project_X0(s, x);
    if (mass_norm(s, x) < 1e-6) continue;
    const double u = p.u(x), v = p.v(x);
    CHECK(u * u + v * v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u >= 0.0);
    CHECK(u <= 1.0);
    const double ratio = p.t_of(x);
    if (ratio > 0.5) CHECK(u == 0.0);
  }
  // the u=1 plateau lives below kappa', reachable only on the cluster axis
  const Frame f = cluster_adapted_frame(s, split_01());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  y[1] = 2.0;  // pure inter-cluster displacement
  CHECK(p.u(f.from_frame(y)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cone pair gradient respects the Hardy-weighted budget") {
  const ParticleSystem s = sys3_eq();
  const CutoffPair p = build_cone_partition(s, split_01(), 0.5, 0.1);
  Rng rng(203);
  int active = 0;
  for (int t = 0; t < 2000; ++t) {
    ConfigPoint x;
    x.coords.resize(3, 1);
    for (int i = 0; i < 3; ++i) x.coords(i, 0) = rng.uniform(-3.0, 3.0);
    x = project_X0(s, x);
    const double ratio = p.t_of(x);
    if (!(ratio > 1e-4 && ratio < 0.7)) continue;
    const double g = p.grad_sq(x);
    CHECK(g <= p.error_bound_rhs(x) * (1.0 + 1e-9));
    if (g > 0.0) ++active;
  }
  CHECK(active > 50);  // the transition region was actually exercised
}

TEST_CASE("cone pair gradient matches finite differences through the frame") {
  const ParticleSystem s = sys3_eq();
  const CutoffPair p = build_cone_partition(s, split_01(), 0.5, 0.1);
  const Frame f = cluster_adapted_frame(s, split_01());
  Rng rng(204);
  int checked = 0;
  for (int trial = 0; trial < 20000 && checked < 40; ++trial) {
    Eigen::VectorXd y(2);
    y[0] = rng.uniform(-2.0, 2.0);
    y[1] = rng.uniform(1.0, 3.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const ConfigPoint x = f.from_frame(y);
    const double ratio = p.t_of(x);
    // keep clear of the seams where u is only piecewise smooth
    if (!(ratio > 1.2 * p.kappa_pp && ratio < 0.45)) continue;
    const double d = 1e-5;
    double num = 0.0;
    for (int a = 0; a < 2; ++a) {
      Eigen::VectorXd yp = y, ym = y;
      yp[a] += d;
      ym[a] -= d;
      const double dup = (p.u(f.from_frame(yp)) - p.u(f.from_frame(ym))) / (2.0 * d);
      const double dvp = (p.v(f.from_frame(yp)) - p.v(f.from_frame(ym))) / (2.0 * d);
      num += dup * dup + dvp * dvp;
    }
    CHECK(p.grad_sq(x) == doctest::Approx(num).epsilon(5e-4));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("discrete IMS identity is exact") {
  GridSpec g;
  g.dim_config = 2;
  g.L = 4.0;
  g.points_per_axis = 33;
  const DiscreteOperator lap = build_laplacian(g);
  SpMat H = lap.matrix;
  Rng rng(205);
  for (int i = 0; i < H.rows(); ++i) H.coeffRef(i, i) += rng.uniform(-1.0, 1.0);
  DiscreteOperator op = lap;
  op.matrix = H;
  const auto n = H.rows();
  Eigen::VectorXd u(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = rng.uniform(0.0, M_PI / 2.0);
    u[i] = std::cos(s);
    v[i] = std::sin(s);
  }
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd phi(n);
    for (Eigen::Index i = 0; i < n; ++i) phi[i] = rng.normal();
    const ImsTriple t = ims_decompose(op, u, v, phi);
    CHECK(t.residual <= 1e-12);
    CHECK(std::abs(t.localized_u + t.localized_v - t.error_term - t.total) <=
          1e-10 * (1.0 + std::abs(t.total)));
  }
}

TEST_CASE("ims rejects a pair that fails the unity constraint") {
  GridSpec g;
  g.dim_config = 1;
  g.L = 2.0;
  g.points_per_axis = 21;
  const DiscreteOperator lap = build_laplacian(g);
  const auto n = lap.matrix.rows();
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 0.9);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 0.9);
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(n);
  CHECK_THROWS_AS(ims_decompose(lap, u, v, phi), ValidationError);
}

TEST_CASE("sampled cone cutoffs square to one on the grid") {
  const ParticleSystem s = sys3_eq();
  const CutoffPair p = build_cone_partition(s, split_01(), 0.5, 0.1);
  const Frame f = cluster_adapted_frame(s, split_01());
  GridSpec g;
  g.dim_config = 2;
  g.L = 5.0;
  g.points_per_axis = 41;
  Eigen::VectorXd u, v;
  sample_cutoff_pair(p, g, f, u, v);
  REQUIRE(u.size() == static_cast<Eigen::Index>(g.unknowns()));
  for (Eigen::Index i = 0; i < u.size(); ++i)
    CHECK(u[i] * u[i] + v[i] * v[i] == doctest::Approx(1.0).epsilon(1e-12));
}
