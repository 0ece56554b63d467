#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vlab/decay.hpp"

using namespace vlab;

namespace {

ParticleSystem pair_22() {
  ParticleSystem s;
  s.n_particles = 2;
  s.dim = 1;
  s.masses = {2.0, 2.0};
  return s;
}

PotentialSpec scaled_well(double lambda, double depth = 1.0, double radius = 1.0) {
  PairPotential v;
  v.pieces.push_back({PotentialPiece::Kind::step, -depth, 0.0, radius});
  return PotentialSpec::uniform(2, v, DecayCertificate{1e-12, 1.0, radius + 0.5})
      .scaled(lambda);
}

GridSpec line_grid(double L, int points) {
  GridSpec g;
  g.dim_config = 1;
  g.L = L;
  g.points_per_axis = points;
  return g;
}

}  // namespace

TEST_CASE("resonance sequence is threshold-normalized with negative energies") {
  const GridSpec g = line_grid(20.0, 801);
  // coupling slightly above the shallow-well threshold keeps every member bound
  const auto seq = resonance_sequence(pair_22(), scaled_well(1.2), g, {4, 8, 16});
  REQUIRE(seq.size() == 3);
  int prev = 0;
  for (const auto& m : seq) {
    CHECK(m.n > prev);
    prev = m.n;
    CHECK(m.energy < 0.0);
    CHECK(m.grad_norm_sq + m.ball_mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.psi.size() == static_cast<Eigen::Index>(g.unknowns()));
  }
  // energies increase toward zero as the weakening vanishes
  CHECK(seq[0].energy <= seq[2].energy + 1e-12);
}

TEST_CASE("threshold function carries the normalization and provenance") {
  const GridSpec g = line_grid(20.0, 801);
  const ThresholdFunction f = threshold_function(pair_22(), scaled_well(1.2), g);
  CHECK(f.grad_norm_sq + f.ball_mass == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.phi.size() == static_cast<Eigen::Index>(g.unknowns()));
  CHECK(!f.flagged_eigenvalue);  // two-body line systems sit below the C_H > 1 regime
  CHECK(f.resonance_possible);
}

TEST_CASE("weighted norm with unit power weight is the plain L2 norm") {
  const GridSpec g = line_grid(16.0, 641);
  const ThresholdFunction f = threshold_function(pair_22(), scaled_well(1.5), g);
  const double h = g.h();
  const double plain = std::sqrt(f.phi.squaredNorm() * h);
  CHECK(weighted_norm(f, DecayWeight::power, 1.0) == doctest::Approx(plain).epsilon(1e-12));
  // heavier weights can only grow the norm; at alpha=1 the log weight is
  // unity, equal up to summation order
  CHECK(weighted_norm(f, DecayWeight::power, 2.0) >= plain);
  CHECK(weighted_norm(f, DecayWeight::log_power, 1.0) >= plain * (1.0 - 1e-13));
}

TEST_CASE("weighted gradient norm reduces to the Dirichlet form at alpha=0") {
  const GridSpec g = line_grid(16.0, 641);
  const ThresholdFunction f = threshold_function(pair_22(), scaled_well(1.5), g);
  CHECK(weighted_grad_norm(f, 0.0) ==
        doctest::Approx(std::sqrt(f.grad_norm_sq)).epsilon(1e-10));
}

TEST_CASE("tail fit recovers a planted power law") {
  const GridSpec g = line_grid(30.0, 1201);
  ThresholdFunction f;
  f.grid = g;
  f.phi.resize(static_cast<Eigen::Index>(g.unknowns()));
  for (int j = 0; j < g.interior_per_axis(); ++j)
    f.phi[j] = std::pow(std::max(std::abs(g.node(j)), g.h()), -3.0);
  const TailFit fit = tail_exponent_fit(f);
  CHECK(std::abs(fit.slope + 3.0) < 0.1);
  CHECK(fit.band >= 0.0);
  REQUIRE(fit.radii.size() == fit.rms.size());
  CHECK(fit.radii.size() >= 5);
}

TEST_CASE("bound state well below threshold is box-stable in weighted norms") {
  const GridSpec g = line_grid(14.0, 561);
  const DecayFitReport rep =
      decay_report(pair_22(), scaled_well(4.0), g, {1.5, 2.5}, DecayWeight::power);
  REQUIRE(rep.ratios.size() == 2);
  for (double r : rep.ratios) CHECK(std::abs(r - 1.0) < 0.05);
  CHECK(rep.fit.slope < -0.5);  // exponential tail reads as steeply decaying
}
