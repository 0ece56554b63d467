#include "vlab/hardy.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "vlab/errors.hpp"
#include "vlab/spectral.hpp"

namespace vlab {

SectorDecomposition sector_angles(const ParticleSystem& sys) {
  sys.validate();
  if (sys.dim != 1 || sys.n_particles != 3)
    throw ValidationError("sector_angles: defined for three particles on the line");
  const auto& m = sys.masses;
  SectorDecomposition out;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    out.theta[i] = std::acos(std::sqrt(m[j] * m[k] / ((m[i] + m[j]) * (m[i] + m[k]))));
  }
  out.theta_max = std::max({out.theta[0], out.theta[1], out.theta[2]});
  // collision line {x_i = x_j}: both at m_k, the third at -(m_i+m_j); this is
  // already a zero-momentum configuration
  const Frame fr = orthonormal_frame(sys);
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int p = 0; p < 3; ++p) {
    const int i = pairs[p][0], j = pairs[p][1], k = 3 - i - j;
    ConfigPoint u;
    u.coords = Eigen::MatrixXd::Zero(3, 1);
    u.coords(i, 0) = m[k];
    u.coords(j, 0) = m[k];
    u.coords(k, 0) = -(m[i] + m[j]);
    Eigen::VectorXd y = fr.to_frame(u);
    out.boundary_dirs[p] = Eigen::Vector2d(y[0], y[1]).normalized();
  }
  return out;
}

double sector_hardy_constant(double theta) {
  if (!(theta > 0.0) || !(theta < 2.0 * M_PI))
    throw ValidationError("sector_hardy_constant: opening angle must lie in (0, 2*pi)");
  return M_PI / theta;
}

double cone_hardy_constant_3d(double lambda1) {
  if (!(lambda1 >= 0.0))
    throw ValidationError("cone_hardy_constant_3d: cross-section eigenvalue must be >= 0");
  return std::sqrt(lambda1 + 0.25);
}

HardyReport hardy_constant(const ParticleSystem& sys) {
  sys.validate();
  HardyReport rep;
  const int N = sys.n_particles;
  if (sys.dim == 1 && N == 3) {
    const SectorDecomposition sd = sector_angles(sys);
    rep.value = M_PI / sd.theta_max;
    // rational sector openings (equal masses: pi/3) make the ratio an exact
    // integer; recover the exactness rounding took away
    const double snapped = std::round(rep.value);
    if (std::abs(rep.value - snapped) < 1e-9) rep.value = snapped;
    rep.method = "widest collision sector, pi/theta";
    return rep;
  }
  if (sys.dim == 2 && N == 3) {
    rep.value = 1.0;
    rep.resonance_possible = true;
    rep.method = "planar three-body value; threshold state may be a resonance";
    return rep;
  }
  if (sys.dim == 2 && N >= 4) {
    rep.value = static_cast<double>(N - 2);
    rep.method = "planar N-body closed form N-2";
    return rep;
  }
  if (sys.dim == 1 && N >= 4) {
    bool equal = true;
    for (int i = 1; i < N; ++i)
      if (std::abs(sys.masses[i] - sys.masses[0]) >
          1e-12 * std::max(sys.masses[i], sys.masses[0]))
        equal = false;
    if (N == 4 && equal) {
      rep.value = std::sqrt(0.25 + 42.0);  // = 13/2
      rep.method = "four identical particles on the line, sphere eigenvalue 42";
      return rep;
    }
    rep.value = 0.5 * (N - 1);
    rep.exact = false;
    rep.lower_bound_only = true;
    rep.method = "line N-body lower bound (N-1)/2";
    return rep;
  }
  throw ValidationError("hardy_constant: no closed form for this system (need N>=3, dim 1 or 2)");
}

HardyNumericReport rayleigh_estimate_CH(const ParticleSystem& sys, double R_out, int points) {
  sys.validate();
  if (sys.dim != 1 || sys.n_particles != 3)
    throw ValidationError("rayleigh_estimate_CH: defined for three particles on the line");
  if (!(R_out > 2.0) || points < 41)
    throw ValidationError("rayleigh_estimate_CH: need R_out > 2 and at least 41 points");
  const SectorDecomposition sd = sector_angles(sys);
  const double h = 2.0 * R_out / (points - 1);

  // free nodes: inside the annulus 1 < |y| <= R_out and at least h/2 away
  // from every collision line
  std::vector<Eigen::Index> id(static_cast<std::size_t>(points) * points, -1);
  std::vector<double> rad;
  std::vector<int> px, py;
  for (int p = 0; p < points; ++p)
    for (int q = 0; q < points; ++q) {
      const double y0 = -R_out + p * h, y1 = -R_out + q * h;
      const double r = std::hypot(y0, y1);
      if (r <= 1.0 || r > R_out) continue;
      bool clear = true;
      for (const auto& d : sd.boundary_dirs) {
        const double along = y0 * d[0] + y1 * d[1];
        const double off = std::hypot(y0 - along * d[0], y1 - along * d[1]);
        if (off <= 0.5 * h) { clear = false; break; }
      }
      if (!clear) continue;
      id[static_cast<std::size_t>(p) * points + q] = static_cast<Eigen::Index>(rad.size());
      rad.push_back(r);
      px.push_back(p);
      py.push_back(q);
    }
  const Eigen::Index n = static_cast<Eigen::Index>(rad.size());
  if (n < 100) throw ResourceError("rayleigh_estimate_CH: too few free nodes");

  // quotient |grad psi|^2 / |psi/r|^2 becomes, after phi = psi/r, the lowest
  // eigenvalue of D A D with A the Dirichlet five-point Laplacian
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  const double k = 1.0 / (h * h);
  for (Eigen::Index row = 0; row < n; ++row) {
    trips.emplace_back(row, row, 4.0 * k * rad[row] * rad[row]);
    const int p = px[row], q = py[row];
    const int nb[4][2] = {{p + 1, q}, {p - 1, q}, {p, q + 1}, {p, q - 1}};
    for (const auto& pq : nb) {
      if (pq[0] < 0 || pq[0] >= points || pq[1] < 0 || pq[1] >= points) continue;
      const Eigen::Index col = id[static_cast<std::size_t>(pq[0]) * points + pq[1]];
      if (col >= 0) trips.emplace_back(row, col, -k * rad[row] * rad[col]);
    }
  }
  SpMat C(n, n);
  C.setFromTriplets(trips.begin(), trips.end());
  C.makeCompressed();
  const SpectralResult res = lowest_eigenpairs(C, 1, 1e-9);
  HardyNumericReport rep;
  rep.value = std::sqrt(std::max(0.0, res.eigenvalues[0]));
  rep.free_nodes = static_cast<int>(n);
  rep.points = points;
  rep.radius = R_out;
  return rep;
}

// P1 stiffness with a lumped weighted mass on an arbitrary increasing mesh;
// first node is Dirichlet, the rest free. mass_shift adds an unweighted
// lumped identity term to the stiffness (angular mode contribution).
double weighted_p1_quotient(const std::vector<double>& x,
                            double (*weight)(double), double mass_shift) {
  const int M = static_cast<int>(x.size());
  const Eigen::Index n = M - 1;  // node 0 pinned
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd wlump = Eigen::VectorXd::Zero(n);
  for (int e = 0; e + 1 < M; ++e) {
    const double len = x[e + 1] - x[e];
    const double s = 1.0 / len;
    const Eigen::Index a = e - 1, b = e;  // free indices of nodes e, e+1
    if (a >= 0) trips.emplace_back(a, a, s);
    trips.emplace_back(b, b, s);
    if (a >= 0) {
      trips.emplace_back(a, b, -s);
      trips.emplace_back(b, a, -s);
    }
  }
  for (int i = 1; i < M; ++i) {
    const double left = x[i] - x[i - 1];
    const double right = (i + 1 < M) ? x[i + 1] - x[i] : 0.0;
    const double cell = 0.5 * (left + right);
    wlump[i - 1] = weight(x[i]) * cell;
    if (mass_shift != 0.0) trips.emplace_back(i - 1, i - 1, mass_shift * cell);
  }
  SpMat K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  // symmetric congruence by the lumped weight turns the pencil into an
  // ordinary eigenproblem
  Eigen::VectorXd dinv = wlump.array().sqrt().inverse();
  SpMat Kc = dinv.asDiagonal() * K * dinv.asDiagonal();
  Kc.makeCompressed();
  return lowest_eigenpairs(Kc, 1, 1e-9).eigenvalues[0];
}

std::string to_string(ScalarHardyKind kind) {
  switch (kind) {
    case ScalarHardyKind::halfline_1d: return "halfline_1d";
    case ScalarHardyKind::exterior_d3: return "exterior_d3";
    case ScalarHardyKind::log_2d: return "log_2d";
  }
  return "?";
}

std::vector<double> log_mesh(double lo, double hi, int nodes) {
  std::vector<double> x(nodes);
  for (int i = 0; i < nodes; ++i) x[i] = lo * std::pow(hi / lo, double(i) / (nodes - 1));
  return x;
}

namespace {
double w_invsq(double x) { return 1.0 / (x * x); }
double w_logwin(double s) { return 1.0 / (1.0 + s * s); }
}  // namespace

ScalarHardyReport verify_scalar_hardy(ScalarHardyKind kind, int nodes) {
  if (nodes < 100) throw ValidationError("verify_scalar_hardy: need at least 100 nodes");
  ScalarHardyReport rep;
  rep.kind = kind;
  rep.nodes = nodes;
  switch (kind) {
    case ScalarHardyKind::halfline_1d: {
      // huge log range stands in for the pinned origin
      const std::vector<double> x = log_mesh(1e-16, 100.0, nodes);
      rep.quotient = weighted_p1_quotient(x, w_invsq, 0.0);
      rep.note = "u(0)=0 realized by a mesh reaching 1e-16";
      break;
    }
    case ScalarHardyKind::exterior_d3: {
      // w = r u maps the exterior radial quotient onto the half-line form
      // exactly, starting at the inner radius
      const std::vector<double> x = log_mesh(1.0, std::exp(35.0), nodes);
      rep.quotient = weighted_p1_quotient(x, w_invsq, 0.0);
      rep.note = "exact substitution w = r*u, inner radius 1";
      break;
    }
    case ScalarHardyKind::log_2d: {
      // s = log r; radial channel has the (1+s^2)^{-1} weight, the first
      // angular mode adds a unit mass term and sits far above 1/4. The weight
      // is smooth at s=0, so the mesh is uniform through 1 and geometric
      // beyond; refining toward 0 would only wreck the conditioning.
      std::vector<double> x;
      const int n_lin = nodes / 4;
      const int n_geo = nodes - n_lin;
      x.reserve(static_cast<std::size_t>(nodes) + 1);
      for (int i = 0; i <= n_lin; ++i) x.push_back(double(i) / n_lin);
      const std::vector<double> tail = log_mesh(1.0, std::exp(20.0), n_geo + 1);
      for (int i = 1; i <= n_geo; ++i) x.push_back(tail[static_cast<std::size_t>(i)]);
      const double radial = weighted_p1_quotient(x, w_logwin, 0.0);
      const double mode1 = weighted_p1_quotient(x, w_logwin, 1.0);
      rep.quotient = std::min(radial, mode1);
      std::ostringstream os;
      os << "radial " << radial << ", first angular mode " << mode1;
      rep.note = os.str();
      break;
    }
  }
  return rep;
}

}  // namespace vlab
