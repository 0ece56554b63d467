#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vlab/rng.hpp"
#include "vlab/spectral.hpp"

using namespace vlab;

namespace {

// random symmetric pentadiagonal with a shifted diagonal, keeps spectra spread
SpMat random_banded(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, rng.uniform(0.0, 4.0));
    for (int off = 1; off <= 2; ++off) {
      if (i + off >= n) continue;
      const double v = rng.uniform(-1.0, 1.0);
      trips.emplace_back(i, i + off, v);
      trips.emplace_back(i + off, i, v);
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SpMat fd_laplacian_1d(int m, double h) {
  std::vector<Eigen::Triplet<double>> trips;
  const double d = 2.0 / (h * h), o = -1.0 / (h * h);
  for (int i = 0; i < m; ++i) {
    trips.emplace_back(i, i, d);
    if (i + 1 < m) {
      trips.emplace_back(i, i + 1, o);
      trips.emplace_back(i + 1, i, o);
    }
  }
  SpMat A(m, m);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

}  // namespace

TEST_CASE("lowest eigenpairs against the dense solver") {
  const SpMat A = random_banded(400, 21);
  const SpectralResult r = lowest_eigenpairs(A, 5, 1e-9);
  const Eigen::VectorXd exact = oracle::dense_lowest(A, 5);
  REQUIRE(r.eigenvalues.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(r.eigenvalues[i] == doctest::Approx(exact[i]).epsilon(1e-8));
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd v = r.eigenvectors.col(i);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((A * v - r.eigenvalues[i] * v).norm() < 1e-6);
    CHECK(r.residuals[i] < 1e-6);
  }
}

TEST_CASE("eigenvalues of the discrete 1D Laplacian match the closed form") {
  const int m = 199;
  const double h = 0.05;
  const SpMat A = fd_laplacian_1d(m, h);
  const SpectralResult r = lowest_eigenpairs(A, 4, 1e-10);
  for (int j = 1; j <= 4; ++j) {
    const double s = std::sin(0.5 * M_PI * j / (m + 1));
    const double exact = 4.0 / (h * h) * s * s;
    CHECK(r.eigenvalues[j - 1] == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("inertia count agrees with dense counting at several shifts") {
  const SpMat A = random_banded(300, 33);
  const Eigen::VectorXd low = oracle::dense_lowest(A, 12);
  for (double z : {low[0] - 0.5, 0.5 * (low[0] + low[1]), 0.5 * (low[4] + low[5]),
                   0.5 * (low[9] + low[10])}) {
    if (z > 0.0) continue;  // counting contract is z <= 0
    CHECK(counting_below(A, z) == oracle::dense_count_below(A, z));
  }
  // shifted copy so that several eigenvalues sit below negative z
  SpMat B = A;
  for (int i = 0; i < B.rows(); ++i) B.coeffRef(i, i) -= 6.0;
  for (double z : {-4.0, -2.0, -1.0, -0.25})
    CHECK(counting_below(B, z) == oracle::dense_count_below(B, z));
}

TEST_CASE("constrained ground matches the deflated dense eigenvalue") {
  const SpMat A = random_banded(200, 44);
  const SpectralResult r = lowest_eigenpairs(A, 2, 1e-10);
  const Eigen::VectorXd v0 = r.eigenvectors.col(0);
  auto projector = [v0](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x - v0 * (v0.dot(x));
  };
  const auto [mu, vec] = constrained_ground(A, projector, 1e-10);
  CHECK(mu == doctest::Approx(r.eigenvalues[1]).epsilon(1e-7));
  CHECK(std::abs(v0.dot(vec)) < 1e-8);
}

TEST_CASE("repeated runs with one seed are bitwise identical") {
  const SpMat A = random_banded(250, 55);
  const SpectralResult a = lowest_eigenpairs(A, 3, 1e-9, 17);
  const SpectralResult b = lowest_eigenpairs(A, 3, 1e-9, 17);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.eigenvalues[i] == b.eigenvalues[i]);
    CHECK((a.eigenvectors.col(i) - b.eigenvectors.col(i)).norm() == 0.0);
  }
}
