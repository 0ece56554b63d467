#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "vlab/efimov.hpp"
#include "vlab/quadrature.hpp"

using namespace vlab;

namespace {

ParticleSystem pair_22() {
  ParticleSystem s;
  s.n_particles = 2;
  s.dim = 1;
  s.masses = {2.0, 2.0};
  return s;
}

PotentialSpec step_pair(double value, double radius) {
  PairPotential v;
  v.pieces.push_back({PotentialPiece::Kind::step, value, 0.0, radius});
  return PotentialSpec::uniform(2, v, DecayCertificate{1e-12, 1.0, radius + 0.5});
}

GridSpec proto_1d(double L = 10.0, int points = 401) {
  GridSpec g;
  g.dim_config = 1;
  g.L = L;
  g.points_per_axis = points;
  return g;
}

}  // namespace

TEST_CASE("repulsive pair potential counts nothing at any box") {
  const CountingCurve c =
      counting_curve(pair_22(), step_pair(2.0, 1.0), proto_1d(), {10.0, 15.0, 20.0});
  REQUIRE(c.counts.size() == 3);
  for (int k : c.counts) CHECK(k == 0);
  CHECK(c.stable);
  for (double z : c.zs) CHECK(z < 0.0);
  // spacing carried over from the prototype grid
  for (double h : c.hs) CHECK(h == doctest::Approx(proto_1d().h()).epsilon(1e-12));
}

TEST_CASE("square well counts match the textbook state count and stabilize") {
  const CountingCurve c =
      counting_curve(pair_22(), step_pair(-2.0, 1.5), proto_1d(), {10.0, 15.0, 20.0});
  const int expected = oracle::square_well_count(2.0, 1.5);
  CHECK(expected == 2);
  for (int k : c.counts) CHECK(k == expected);
  CHECK(c.stable);
}

TEST_CASE("counts grow monotonically with the coupling") {
  int prev = -1;
  for (double lam : {1.0, 2.0, 4.0}) {
    const CountingCurve c =
        counting_curve(pair_22(), step_pair(-2.0, 1.5).scaled(lam), proto_1d(), {20.0});
    CHECK(c.counts[0] == oracle::square_well_count(2.0 * lam, 1.5));
    CHECK(c.counts[0] >= prev);
    prev = c.counts[0];
  }
  CHECK(prev == 3);  // the deepest coupling gained a state
}

TEST_CASE("counting curve rejects malformed inputs") {
  CHECK_THROWS_AS(counting_curve(pair_22(), step_pair(-1.0, 1.0), proto_1d(), {}),
                  ValidationError);
  CHECK_THROWS_AS(counting_curve(pair_22(), step_pair(-1.0, 1.0), proto_1d(), {20.0, 10.0}),
                  ValidationError);
  CHECK_THROWS_AS(
      counting_curve(pair_22(), step_pair(-1.0, 1.0), proto_1d(), {10.0, 20.0}, 0.1),
      ValidationError);
}

TEST_CASE("exterior restriction stays positive below the sharp weight strength") {
  const GridSpec g = proto_1d(20.0, 801);
  const ExteriorReport r =
      exterior_positivity_check(pair_22(), PotentialSpec::zero(2), g, 2.0, 2.0, 0.2);
  CHECK(r.positive);
  CHECK(r.margin >= 0.0);
  CHECK(r.exterior_nodes > 0);
  // margins shrink as the subtracted weight strengthens
  double prev = 1e300;
  for (double eps : {0.05, 0.1, 0.2}) {
    const ExteriorReport q =
        exterior_positivity_check(pair_22(), PotentialSpec::zero(2), g, 2.0, 2.0, eps);
    CHECK(q.margin < prev);
    prev = q.margin;
  }
}

TEST_CASE("exterior check validates geometry and resolution") {
  const GridSpec g = proto_1d(20.0, 801);
  CHECK_THROWS_AS(
      exterior_positivity_check(pair_22(), PotentialSpec::zero(2), g, 10.0, 2.0, 0.1),
      ValidationError);
  CHECK_THROWS_AS(
      exterior_positivity_check(pair_22(), PotentialSpec::zero(2), g, 2.0, -1.0, 0.1),
      ValidationError);
  const GridSpec coarse = proto_1d(4.0, 9);  // h = 1: exterior thinner than 8 cells
  CHECK_THROWS_AS(
      exterior_positivity_check(pair_22(), PotentialSpec::zero(2), coarse, 1.9, 2.0, 0.1),
      ResourceError);
}

TEST_CASE("scalar flip strength brackets the sharp quarter from above") {
  const double e40 = exterior_flip_epsilon();
  CHECK(e40 > 0.25);
  CHECK(e40 < 0.27);
  const double e20 = exterior_flip_epsilon(1.0, 20.0, 10000);
  CHECK(e20 > e40);  // shorter log window biases the quotient upward
  // exact window value: 1/4 + k^2 with tan(20k) = -2k, about 0.2705
  CHECK(e20 < 0.28);
  CHECK_THROWS_AS(exterior_flip_epsilon(1.0, 2.0, 10000), ValidationError);
}

TEST_CASE("boundary lemma margins are nonnegative for every kind") {
  LemmaParams p;
  p.n_samples = 60;
  for (BoundaryLemma kind :
       {BoundaryLemma::J_1d, BoundaryLemma::J_2d_radial, BoundaryLemma::trace_1d,
        BoundaryLemma::xi_tail_1d, BoundaryLemma::xi_tail_2d}) {
    const LemmaReport r = boundary_lemma_check(kind, p);
    CHECK(r.kind == kind);
    CHECK(r.samples == 60);
    CHECK(r.all_nonnegative);
    CHECK(r.min_margin >= 0.0);
    CHECK(r.mean_margin >= r.min_margin);
    CHECK(r.premises_hold);
    CHECK(r.admissible_constant > 0.0);
    CHECK(!r.constant_formula.empty());
    CHECK(!to_string(kind).empty());
  }
}

TEST_CASE("tail lemma constant and inequality on a hand-built profile") {
  LemmaParams p;  // nu=1, C0=1/4, b0=8
  p.n_samples = 1;
  const LemmaReport r = boundary_lemma_check(BoundaryLemma::xi_tail_1d, p);
  CHECK(r.admissible_constant == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.premises_hold);  // b = 8 >= (8 C0)^{1/nu} = 2
  // tent: 1 on [8,11], down to 0 at 14; the inequality
  // int C0 t^-3 psi^2 <= int psi'^2 + (c/b^2) psi(8)^2 must hold with room
  auto tent = [](double t) {
    if (t <= 11.0) return 1.0;
    if (t >= 14.0) return 0.0;
    return (14.0 - t) / 3.0;
  };
  const double pot = gl5_composite(
      [&](double t) { return 0.25 * std::pow(t, -3.0) * tent(t) * tent(t); }, 8.0, 14.0, 96) +
                     0.0;  // tent vanishes past 14
  const double kin = 3.0 * (1.0 / 9.0);  // slope 1/3 over length 3
  const double boundary = r.admissible_constant * std::pow(8.0, -2.0) * 1.0;
  CHECK(boundary == doctest::Approx(0.00390625).epsilon(1e-15));
  CHECK(pot <= kin + boundary);
  CHECK(pot < 0.25 * 0.5 / 64.0 + 1e-12);  // crude integral bound C0/(2 b^2)
}

TEST_CASE("lemma parameter validation") {
  LemmaParams p;
  p.nu = -1.0;
  CHECK_THROWS_AS(boundary_lemma_check(BoundaryLemma::xi_tail_1d, p), ValidationError);
  p = LemmaParams{};
  p.A = 0.5;
  CHECK_THROWS_AS(boundary_lemma_check(BoundaryLemma::J_1d, p), ValidationError);
  p = LemmaParams{};
  p.b0 = 1.5;  // below the cert radius A = 2
  CHECK_THROWS_AS(boundary_lemma_check(BoundaryLemma::J_1d, p), ValidationError);
  p = LemmaParams{};
  p.n_samples = 0;
  CHECK_THROWS_AS(boundary_lemma_check(BoundaryLemma::trace_1d, p), ValidationError);
}

TEST_CASE("deterministic lemma reports for a fixed seed") {
  LemmaParams p;
  p.n_samples = 30;
  const LemmaReport a = boundary_lemma_check(BoundaryLemma::J_1d, p);
  const LemmaReport b = boundary_lemma_check(BoundaryLemma::J_1d, p);
  CHECK(a.min_margin == b.min_margin);
  CHECK(a.mean_margin == b.mean_margin);
}
