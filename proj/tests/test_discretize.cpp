#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vlab/discretize.hpp"

using namespace vlab;

namespace {

ParticleSystem two_body(double m = 2.0, int dim = 1) {
  ParticleSystem s;
  s.n_particles = 2;
  s.dim = dim;
  s.masses = {m, m};
  return s;
}

PairPotential square_well(double depth, double radius) {
  PairPotential v;
  v.pieces.push_back({PotentialPiece::Kind::step, -depth, 0.0, radius});
  return v;
}

DecayCertificate compact_cert(double radius) {
  // compactly supported pair interactions satisfy any tail bound past the support
  return DecayCertificate{1e-12, 1.0, radius + 0.5};
}

}  // namespace

TEST_CASE("grid bookkeeping and tau_zero") {
  GridSpec g;
  g.dim_config = 2;
  g.L = 5.0;
  g.points_per_axis = 51;
  g.validate();
  CHECK(g.h() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(g.interior_per_axis() == 49);
  CHECK(g.unknowns() == 49u * 49u);
  CHECK(g.node(0) == doctest::Approx(-5.0 + 0.2).epsilon(1e-14));
  const double s = std::sin(0.5 * M_PI / (g.points_per_axis - 1));
  CHECK(tau_zero(g) ==
        doctest::Approx(5.0 * 2 * (4.0 / (g.h() * g.h())) * s * s).epsilon(1e-12));
  GridSpec bad = g;
  bad.points_per_axis = 2;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = g;
  bad.points_per_axis = 5001;  // blows the interior budget in 2 config dims
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("free assembly equals the bare Laplacian") {
  ParticleSystem s = two_body();
  GridSpec g;
  g.dim_config = 1;
  g.L = 6.0;
  g.points_per_axis = 121;
  const DiscreteOperator lap = build_laplacian(g);
  const DiscreteOperator H = assemble_hamiltonian(s, PotentialSpec::zero(2), g, 0.0);
  CHECK((SpMat(H.matrix - lap.matrix)).norm() < 1e-12);
  // eps scales only the kinetic part
  const DiscreteOperator He = assemble_hamiltonian(s, PotentialSpec::zero(2), g, 0.25);
  CHECK(He.kinetic_factor == doctest::Approx(0.75));
  CHECK((SpMat(He.matrix - 0.75 * lap.matrix)).norm() < 1e-10);
}

TEST_CASE("discrete free spectrum matches the Dirichlet sine basis") {
  GridSpec g;
  g.dim_config = 1;
  g.L = 4.0;
  g.points_per_axis = 161;
  const DiscreteOperator lap = build_laplacian(g);
  const SpectralResult r = lowest_eigenpairs(lap.matrix, 3, 1e-10);
  const int m = g.interior_per_axis();
  for (int j = 1; j <= 3; ++j) {
    const double sn = std::sin(0.5 * M_PI * j / (m + 1));
    CHECK(r.eigenvalues[j - 1] ==
          doctest::Approx(4.0 / (g.h() * g.h()) * sn * sn).epsilon(1e-9));
  }
}

TEST_CASE("step potentials are cell-averaged exactly in one config dimension") {
  // masses (2,2): separation equals the frame coordinate, so V lands unscaled
  ParticleSystem s = two_body();
  GridSpec g;
  g.dim_config = 1;
  g.L = 3.0;
  g.points_per_axis = 61;  // h = 0.1, well edge 1.05 splits a cell
  PotentialSpec pot = PotentialSpec::uniform(2, square_well(1.0, 1.05), compact_cert(1.05));
  const DiscreteOperator H = assemble_hamiltonian(s, pot, g, 0.0);
  const DiscreteOperator lap = build_laplacian(g);
  const SpMat diag = SpMat(H.matrix - lap.matrix);
  const double h = g.h();
  for (int j = 0; j < g.interior_per_axis(); ++j) {
    const double a = std::abs(g.node(j)) - 0.5 * h, b = std::abs(g.node(j)) + 0.5 * h;
    // overlap of the cell with the well in the signed coordinate
    const double frac = std::max(0.0, std::min(b, 1.05) - std::max(a, -1.05)) / h;
    CHECK(diag.coeff(j, j) == doctest::Approx(-frac).epsilon(1e-10));
  }
}

TEST_CASE("two-body well ground state agrees with ODE shooting") {
  // reduced problem: -psi'' + V(|y|) psi on the line, even ground state
  ParticleSystem s = two_body();
  GridSpec g;
  g.dim_config = 1;
  g.L = 14.0;
  g.points_per_axis = 1401;
  PairPotential well = square_well(1.0, 1.0);
  PotentialSpec pot = PotentialSpec::uniform(2, well, compact_cert(1.0));
  const double e_fd = ground_energy(s, pot, g, 0.0);
  // depth 1, radius 1 well: even bound state solves k tan k = kappa, k^2 + kappa^2 = 1
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double k = 0.5 * (lo + hi);
    const double f = k * std::tan(k) - std::sqrt(std::max(1e-300, 1.0 - k * k));
    (f < 0.0 ? lo : hi) = k;
  }
  const double k = 0.5 * (lo + hi);
  const double e_exact = k * k - 1.0;
  CHECK(e_fd == doctest::Approx(e_exact).epsilon(2e-4));
}

TEST_CASE("potential spec validation enforces the tail certificate") {
  PairPotential v;
  v.pieces.push_back({PotentialPiece::Kind::gaussian, -2.0, 1.5, 0.0});
  PotentialSpec ok = PotentialSpec::uniform(2, v, DecayCertificate{2.5, 1.0, 1.0});
  CHECK_NOTHROW(ok.validate());
  // a certificate far below the actual tail must be rejected
  PotentialSpec bad = PotentialSpec::uniform(2, v, DecayCertificate{1e-8, 3.0, 1.0});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  // scaling scales the certificate alongside
  PotentialSpec sc = ok.scaled(3.0);
  CHECK(sc.cert.C == doctest::Approx(7.5));
  CHECK_NOTHROW(sc.validate());
}

TEST_CASE("pair table indexing is symmetric in the particle pair") {
  PotentialSpec p = PotentialSpec::zero(4);
  p.pair(1, 3).pieces.push_back({PotentialPiece::Kind::step, -2.0, 0.0, 1.0});
  CHECK(p.pair(3, 1)(0.5) == doctest::Approx(-2.0));
  CHECK(p.pair(0, 1)(0.5) == doctest::Approx(0.0));
}

TEST_CASE("cluster decomposition sums back to the full operator") {
  ParticleSystem s;
  s.n_particles = 3;
  s.dim = 1;
  s.masses = {1.0, 1.0, 1.0};
  GridSpec g;
  g.dim_config = 2;
  g.L = 6.0;
  g.points_per_axis = 41;
  PotentialSpec pot = PotentialSpec::uniform(3, square_well(0.8, 1.2), compact_cert(1.2));
  Partition Z;
  Z.clusters = {Cluster{{0, 1}}, Cluster{{2}}};
  const ClusterOperators ops = cluster_hamiltonian(s, Z, pot, g);
  const SpMat sum = ops.HZ.matrix + ops.kinetic_xi.matrix + ops.IZ.matrix;
  const double scale = std::max(1.0, ops.H_full.matrix.coeffs().abs().maxCoeff());
  CHECK((SpMat(sum - ops.H_full.matrix)).coeffs().abs().maxCoeff() < 1e-10 * scale);
  // IZ is diagonal
  for (int c = 0; c < ops.IZ.matrix.outerSize(); ++c)
    for (SpMat::InnerIterator it(ops.IZ.matrix, c); it; ++it)
      CHECK(it.row() == it.col());
}

TEST_CASE("free HVZ floor sits at discrete zero") {
  ParticleSystem s;
  s.n_particles = 3;
  s.dim = 1;
  s.masses = {1.0, 1.0, 1.0};
  GridSpec g;
  g.dim_config = 2;
  g.L = 8.0;
  g.points_per_axis = 61;
  const double floor = hvz_floor(s, PotentialSpec::zero(3), g);
  CHECK(std::abs(floor) < 2.0 * tau_zero(g));
  CHECK(floor >= 0.0);
}

TEST_CASE("weight spec values and validation") {
  WeightSpec w;
  w.kind = WeightKind::inv_sq_1d;
  CHECK(w(2.0) == doctest::Approx(-1.0 / 9.0).epsilon(1e-14));  // regularized 1/(1+r)^2
  CHECK_NOTHROW(w.validate());
  w.kind = WeightKind::inv_beta_exterior;
  w.beta = 3.0;
  w.b = 2.0;
  CHECK(w(1.0) == 0.0);  // inside the cutoff
  CHECK(w(4.0) == doctest::Approx(-std::pow(4.0, -3.0)).epsilon(1e-13));
  w.beta = -1.0;
  CHECK_THROWS_AS(w.validate(), ValidationError);
}

TEST_CASE("perturbed assembly subtracts eps times the weight") {
  ParticleSystem s = two_body();
  GridSpec g;
  g.dim_config = 1;
  g.L = 5.0;
  g.points_per_axis = 101;
  const DiscreteOperator H = assemble_hamiltonian(s, PotentialSpec::zero(2), g, 0.0);
  WeightSpec w;
  w.kind = WeightKind::inv_sq_1d;
  const DiscreteOperator Hp = assemble_perturbed(H, w, 0.1);
  const SpMat diff = SpMat(Hp.matrix - H.matrix);
  for (int j = 0; j < g.interior_per_axis(); ++j) {
    const double r = std::abs(g.node(j));
    CHECK(diff.coeff(j, j) ==
          doctest::Approx(-0.1 / ((1.0 + r) * (1.0 + r))).epsilon(1e-12));
  }
}
