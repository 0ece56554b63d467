#include "vlab/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "vlab/errors.hpp"
#include "vlab/quadrature.hpp"

namespace vlab {

std::size_t GridSpec::unknowns() const {
  std::size_t n = 1;
  const std::size_t ipa = static_cast<std::size_t>(interior_per_axis());
  for (int a = 0; a < dim_config; ++a) {
    if (n > (std::size_t(1) << 62) / std::max<std::size_t>(ipa, 1)) return std::size_t(-1);
    n *= ipa;
  }
  return n;
}

void GridSpec::validate() const {
  if (dim_config < 1) throw ValidationError("GridSpec: dim_config must be >= 1");
  if (!(L > 0.0) || !std::isfinite(L)) throw ValidationError("GridSpec: L must be positive");
  if (points_per_axis < 3) throw ValidationError("GridSpec: need at least 3 points per axis");
  const std::size_t n = unknowns();
  if (n == std::size_t(-1) || n > memory_budget) {
    std::ostringstream os;
    os << "GridSpec: " << interior_per_axis() << "^" << dim_config
       << " unknowns exceed the memory budget " << memory_budget;
    throw ValidationError(os.str());
  }
}

std::string GridSpec::descriptor() const {
  std::ostringstream os;
  os << "grid[dim=" << dim_config << ",L=" << L << ",pts=" << points_per_axis << "]";
  return os.str();
}

double tau_zero(const GridSpec& grid) {
  const double s = std::sin(M_PI / (2.0 * (grid.points_per_axis - 1)));
  return 5.0 * grid.dim_config * (4.0 / (grid.h() * grid.h())) * s * s;
}

namespace {

double piece_value(const PotentialPiece& p, double r) {
  switch (p.kind) {
    case PotentialPiece::Kind::step:
      return (r >= p.r0 && r < p.r1) ? p.value : 0.0;
    case PotentialPiece::Kind::gaussian: {
      const double t = r / p.r0;
      return p.value * std::exp(-t * t);
    }
    case PotentialPiece::Kind::bump: {
      const double t = r / p.r0;
      if (t >= 1.0) return 0.0;
      return p.value * std::exp(1.0 - 1.0 / (1.0 - t * t));
    }
  }
  return 0.0;
}

// length of [a,b] overlapped with [u0,u1]
double overlap(double a, double b, double u0, double u1) {
  return std::max(0.0, std::min(b, u1) - std::max(a, u0));
}

// exact cell average of p(s*|y|) over y in [a,b]; steps in closed form,
// smooth pieces by composite GL5 split at the |y| kink
double piece_cell_average(const PotentialPiece& p, double s, double a, double b) {
  const double len = b - a;
  if (!(len > 0.0)) return 0.0;
  if (s < 1e-300) return piece_value(p, 0.0);
  if (p.kind == PotentialPiece::Kind::step) {
    const double u0 = p.r0 / s, u1 = p.r1 / s;
    const double m = overlap(a, b, u0, u1) + overlap(a, b, -u1, -u0);
    return p.value * m / len;
  }
  auto f = [&](double y) { return piece_value(p, s * std::abs(y)); };
  double acc = 0.0;
  if (a < 0.0 && b > 0.0) {
    acc = gl5_composite(f, a, 0.0, 8) + gl5_composite(f, 0.0, b, 8);
  } else {
    acc = gl5_composite(f, a, b, 8);
  }
  return acc / len;
}

}  // namespace

double PairPotential::operator()(double r) const {
  double v = 0.0;
  for (const auto& p : pieces) v += piece_value(p, r);
  return v;
}

double PairPotential::support_radius() const {
  double r = 0.0;
  for (const auto& p : pieces) {
    switch (p.kind) {
      case PotentialPiece::Kind::step: r = std::max(r, p.r1); break;
      case PotentialPiece::Kind::bump: r = std::max(r, p.r0); break;
      case PotentialPiece::Kind::gaussian: r = std::max(r, 6.0 * p.r0); break;
    }
  }
  return r;
}

PotentialSpec PotentialSpec::uniform(int n_particles, const PairPotential& v,
                                     const DecayCertificate& cert) {
  PotentialSpec spec;
  spec.n_particles = n_particles;
  spec.pair_table.assign(static_cast<std::size_t>(n_particles) * (n_particles - 1) / 2, v);
  spec.cert = cert;
  return spec;
}

PotentialSpec PotentialSpec::zero(int n_particles) {
  return uniform(n_particles, PairPotential{}, DecayCertificate{1e-300, 1.0, 1.0});
}

PotentialSpec PotentialSpec::scaled(double lambda) const {
  PotentialSpec out = *this;
  for (auto& pp : out.pair_table)
    for (auto& p : pp.pieces) p.value *= lambda;
  out.cert.C *= std::abs(lambda);
  if (out.cert.C == 0.0) out.cert.C = 1e-300;
  return out;
}

namespace {
std::size_t pair_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i + 1) / 2 +
         (j - i - 1);
}
}  // namespace

const PairPotential& PotentialSpec::pair(int i, int j) const {
  return pair_table[pair_index(n_particles, i, j)];
}

PairPotential& PotentialSpec::pair(int i, int j) {
  return pair_table[pair_index(n_particles, i, j)];
}

void PotentialSpec::validate() const {
  if (n_particles < 2) throw ValidationError("PotentialSpec: need at least 2 particles");
  const std::size_t want = static_cast<std::size_t>(n_particles) * (n_particles - 1) / 2;
  if (pair_table.size() != want)
    throw ValidationError("PotentialSpec: pair table size does not match particle count");
  if (!(cert.C > 0.0) || !(cert.nu > 0.0) || !(cert.A >= 0.0))
    throw ValidationError("PotentialSpec: decay certificate needs C>0, nu>0, A>=0");
  for (const auto& pp : pair_table) {
    for (const auto& p : pp.pieces) {
      if (!(p.r0 >= 0.0) || !std::isfinite(p.value))
        throw ValidationError("PotentialSpec: bad potential piece parameters");
      if (p.kind == PotentialPiece::Kind::step && !(p.r1 > p.r0))
        throw ValidationError("PotentialSpec: step piece needs r1 > r0");
      if (p.kind != PotentialPiece::Kind::step && !(p.r0 > 0.0))
        throw ValidationError("PotentialSpec: smooth piece needs positive width");
    }
  }
  // certificate tail check on log-spaced samples; the bound is asymptotic, so
  // sampling starts comfortably past the declared onset radius
  for (std::size_t k = 0; k < pair_table.size(); ++k) {
    const auto& pp = pair_table[k];
    const double lo = cert.A + 2.0;
    const double hi = std::max({cert.A + 1.0, 4.0 * (pp.support_radius() + 1.0), 1000.0});
    const int samples = 240;
    for (int s = 0; s <= samples; ++s) {
      const double r = lo * std::pow(hi / lo, double(s) / samples);
      const double bound = cert.C * std::pow(1.0 + r, -2.0 - cert.nu);
      if (std::abs(pp(r)) > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "PotentialSpec: pair entry " << k << " violates the decay certificate at r=" << r
           << " (|V|=" << std::abs(pp(r)) << " > " << bound << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

double PotentialSpec::eval_config(const ParticleSystem& sys, const ConfigPoint& x) const {
  double v = 0.0;
  for (int i = 0; i < sys.n_particles; ++i)
    for (int j = i + 1; j < sys.n_particles; ++j) {
      const double r = (x.coords.row(i) - x.coords.row(j)).norm();
      v += pair(i, j)(r);
    }
  return v;
}

double WeightSpec::operator()(double r) const {
  switch (kind) {
    case WeightKind::inv_sq_1d:
      return -1.0 / ((1.0 + r) * (1.0 + r));
    case WeightKind::log_2d:
    case WeightKind::multiparticle_log: {
      const double lg = std::log(std::exp(1.0) + r);
      return -1.0 / (1.0 + r * r * lg * lg);
    }
    case WeightKind::inv_beta_exterior:
      return (r >= b) ? -std::pow(r, -beta) : 0.0;
  }
  return 0.0;
}

void WeightSpec::validate() const {
  if (!(beta > 0.0)) throw ValidationError("WeightSpec: beta must be positive");
  if (!(b > 0.0)) throw ValidationError("WeightSpec: cutoff radius b must be positive");
  for (double r = 0.0; r <= 64.0; r += 0.5) {
    const double v = (*this)(r);
    if (kind == WeightKind::inv_beta_exterior && r < b) {
      if (v != 0.0) throw ValidationError("WeightSpec: exterior weight must vanish inside b");
    } else if (!(v < 0.0)) {
      throw ValidationError("WeightSpec: weight must be strictly negative where defined");
    }
  }
}

std::string WeightSpec::name() const {
  switch (kind) {
    case WeightKind::inv_sq_1d: return "inv_sq_1d";
    case WeightKind::log_2d: return "log_2d";
    case WeightKind::multiparticle_log: return "multiparticle_log";
    case WeightKind::inv_beta_exterior: return "inv_beta_exterior";
  }
  return "?";
}

namespace {

struct GridWalk {
  int dim;
  int ipa;
  std::vector<std::size_t> stride;  // last axis fastest

  explicit GridWalk(const GridSpec& g) : dim(g.dim_config), ipa(g.interior_per_axis()) {
    stride.assign(dim, 1);
    for (int a = dim - 2; a >= 0; --a) stride[a] = stride[a + 1] * ipa;
  }
  void decode(std::size_t idx, std::vector<int>& c) const {
    for (int a = 0; a < dim; ++a) c[a] = static_cast<int>((idx / stride[a]) % ipa);
  }
};

void laplacian_triplets(const GridSpec& grid, double factor, int axis_begin, int axis_end,
                        std::vector<Eigen::Triplet<double>>& trips) {
  const GridWalk walk(grid);
  const std::size_t n = grid.unknowns();
  const double k = factor / (grid.h() * grid.h());
  std::vector<int> c(grid.dim_config);
  for (std::size_t idx = 0; idx < n; ++idx) {
    walk.decode(idx, c);
    for (int a = axis_begin; a < axis_end; ++a) {
      trips.emplace_back(idx, idx, 2.0 * k);
      if (c[a] + 1 < walk.ipa) {
        const std::size_t jdx = idx + walk.stride[a];
        trips.emplace_back(idx, jdx, -k);
        trips.emplace_back(jdx, idx, -k);
      }
    }
  }
}

// potential on the diagonal; 1D assemblies get the exact cell average unless
// node sampling is forced (cluster splits need all parts sampled identically)
void potential_diagonal(const ParticleSystem& sys, const PotentialSpec& pot,
                        const GridSpec& grid, const Frame& frame, bool force_node_sampling,
                        std::vector<Eigen::Triplet<double>>& trips) {
  const GridWalk walk(grid);
  const std::size_t n = grid.unknowns();
  std::vector<int> c(grid.dim_config);
  if (grid.dim_config == 1 && !force_node_sampling) {
    // separations scale linearly along the single axis
    std::vector<double> s(pot.pair_table.size(), 0.0);
    for (int i = 0; i < sys.n_particles; ++i)
      for (int j = i + 1; j < sys.n_particles; ++j)
        s[pair_index(sys.n_particles, i, j)] =
            std::abs(frame.particle_vecs[0][i] - frame.particle_vecs[0][j]);
    const double h = grid.h();
    for (std::size_t idx = 0; idx < n; ++idx) {
      const double y = grid.node(static_cast<int>(idx));
      double v = 0.0;
      for (int i = 0; i < sys.n_particles; ++i)
        for (int j = i + 1; j < sys.n_particles; ++j) {
          const double sij = s[pair_index(sys.n_particles, i, j)];
          for (const auto& p : pot.pair(i, j).pieces)
            v += piece_cell_average(p, sij, y - 0.5 * h, y + 0.5 * h);
        }
      if (v != 0.0) trips.emplace_back(idx, idx, v);
    }
    return;
  }
  Eigen::VectorXd y(grid.dim_config);
  for (std::size_t idx = 0; idx < n; ++idx) {
    walk.decode(idx, c);
    for (int a = 0; a < grid.dim_config; ++a) y[a] = grid.node(c[a]);
    const ConfigPoint x = frame.from_frame(y);
    const double v = pot.eval_config(sys, x);
    if (v != 0.0) trips.emplace_back(idx, idx, v);
  }
}

SpMat from_triplets(std::size_t n, std::vector<Eigen::Triplet<double>>& trips) {
  SpMat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

DiscreteOperator build_laplacian(const GridSpec& grid) {
  grid.validate();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(grid.unknowns() * (2 * grid.dim_config + 1));
  laplacian_triplets(grid, 1.0, 0, grid.dim_config, trips);
  DiscreteOperator op;
  op.matrix = from_triplets(grid.unknowns(), trips);
  op.grid = grid;
  op.kinetic_factor = 1.0;
  op.descriptor = "laplacian " + grid.descriptor();
  return op;
}

namespace {

DiscreteOperator assemble_impl(const ParticleSystem& sys, const PotentialSpec& pot,
                               const GridSpec& grid, double epsilon, const Frame& frame,
                               bool force_node_sampling) {
  sys.validate();
  pot.validate();
  grid.validate();
  if (pot.n_particles != sys.n_particles)
    throw ValidationError("assemble_hamiltonian: potential particle count mismatch");
  if (frame.config_dim() != grid.dim_config)
    throw ValidationError("assemble_hamiltonian: frame dimension does not match the grid");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw ValidationError("assemble_hamiltonian: epsilon must lie in [0,1)");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(grid.unknowns() * (2 * grid.dim_config + 2));
  laplacian_triplets(grid, 1.0 - epsilon, 0, grid.dim_config, trips);
  potential_diagonal(sys, pot, grid, frame, force_node_sampling, trips);
  DiscreteOperator op;
  op.matrix = from_triplets(grid.unknowns(), trips);
  op.grid = grid;
  op.frame = frame;
  op.kinetic_factor = 1.0 - epsilon;
  std::ostringstream os;
  os << "H[" << sys.descriptor() << "] eps=" << epsilon << " " << grid.descriptor();
  op.descriptor = os.str();
  return op;
}

}  // namespace

DiscreteOperator assemble_hamiltonian(const ParticleSystem& sys, const PotentialSpec& pot,
                                      const GridSpec& grid, double epsilon,
                                      const std::optional<Frame>& frame) {
  const Frame fr = frame ? *frame : orthonormal_frame(sys);
  return assemble_impl(sys, pot, grid, epsilon, fr, false);
}

DiscreteOperator assemble_perturbed(const DiscreteOperator& base, const WeightSpec& w,
                                    double epsilon) {
  const GridSpec& grid = base.grid;
  const GridWalk walk(grid);
  const std::size_t n = grid.unknowns();
  if (static_cast<std::size_t>(base.matrix.rows()) != n)
    throw ValidationError("assemble_perturbed: operator does not match its grid");
  DiscreteOperator op = base;
  std::vector<int> c(grid.dim_config);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(base.matrix.rows());
  for (std::size_t idx = 0; idx < n; ++idx) {
    walk.decode(idx, c);
    double r2 = 0.0;
    for (int a = 0; a < grid.dim_config; ++a) {
      const double y = grid.node(c[a]);
      r2 += y * y;
    }
    diag[static_cast<Eigen::Index>(idx)] = epsilon * w(std::sqrt(r2));
  }
  SpMat d(base.matrix.rows(), base.matrix.cols());
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag[i] != 0.0) trips.emplace_back(i, i, diag[i]);
  d.setFromTriplets(trips.begin(), trips.end());
  op.matrix = base.matrix + d;
  op.matrix.makeCompressed();
  op.descriptor = base.descriptor + " + " + std::to_string(epsilon) + "*" + w.name();
  return op;
}

ClusterOperators cluster_hamiltonian(const ParticleSystem& sys, const Partition& Z,
                                     const PotentialSpec& pot, const GridSpec& grid) {
  sys.validate();
  Z.validate(sys);
  const Frame frame = cluster_adapted_frame(sys, Z);
  if (frame.config_dim() != grid.dim_config)
    throw ValidationError("cluster_hamiltonian: grid dimension must equal the configuration dimension");
  const std::size_t n = grid.unknowns();
  const GridWalk walk(grid);

  // split the potential into intra- and inter-cluster diagonals sampled at the
  // same nodes so the three parts sum to the full operator exactly
  std::vector<Eigen::Triplet<double>> tz, ti;
  std::vector<int> c(grid.dim_config);
  Eigen::VectorXd y(grid.dim_config);
  for (std::size_t idx = 0; idx < n; ++idx) {
    walk.decode(idx, c);
    for (int a = 0; a < grid.dim_config; ++a) y[a] = grid.node(c[a]);
    const ConfigPoint x = frame.from_frame(y);
    double vz = 0.0, vi = 0.0;
    for (int i = 0; i < sys.n_particles; ++i)
      for (int j = i + 1; j < sys.n_particles; ++j) {
        const double r = (x.coords.row(i) - x.coords.row(j)).norm();
        const double v = pot.pair(i, j)(r);
        if (Z.cluster_of(i) == Z.cluster_of(j)) vz += v; else vi += v;
      }
    if (vz != 0.0) tz.emplace_back(idx, idx, vz);
    if (vi != 0.0) ti.emplace_back(idx, idx, vi);
  }

  const int nq = frame.n_q_axes;
  ClusterOperators out;

  std::vector<Eigen::Triplet<double>> tq;
  laplacian_triplets(grid, 1.0, 0, nq, tq);
  tq.insert(tq.end(), tz.begin(), tz.end());
  out.HZ.matrix = from_triplets(n, tq);
  out.HZ.grid = grid;
  out.HZ.frame = frame;
  out.HZ.descriptor = "HZ[" + Z.descriptor() + "] " + grid.descriptor();

  std::vector<Eigen::Triplet<double>> txi;
  laplacian_triplets(grid, 1.0, nq, grid.dim_config, txi);
  out.kinetic_xi.matrix = from_triplets(n, txi);
  out.kinetic_xi.grid = grid;
  out.kinetic_xi.frame = frame;
  out.kinetic_xi.descriptor = "-Delta_xi[" + Z.descriptor() + "] " + grid.descriptor();

  out.IZ.matrix = from_triplets(n, ti);
  out.IZ.grid = grid;
  out.IZ.frame = frame;
  out.IZ.descriptor = "IZ[" + Z.descriptor() + "] " + grid.descriptor();

  out.H_full = assemble_impl(sys, pot, grid, 0.0, frame, true);
  return out;
}

double ground_energy(const ParticleSystem& sys, const PotentialSpec& pot, const GridSpec& grid,
                     double epsilon) {
  const DiscreteOperator op = assemble_hamiltonian(sys, pot, grid, epsilon);
  // threshold bisections compare this value against tau scales far below the
  // default residual contract, so ask for more than the default accuracy
  return lowest_eigenpairs(op.matrix, 1, 1e-10).eigenvalues[0];
}

double hvz_floor(const ParticleSystem& sys, const PotentialSpec& pot, const GridSpec& grid,
                 double epsilon) {
  sys.validate();
  pot.validate();
  double best = 0.0;
  bool first = true;
  for (const Partition& Z : two_cluster_partitions(sys.n_particles)) {
    double total = 0.0;
    for (const Cluster& cl : Z.clusters) {
      const int m = static_cast<int>(cl.members.size());
      if (m < 2) continue;
      ParticleSystem sub;
      sub.n_particles = m;
      sub.dim = sys.dim;
      sub.masses.resize(m);
      for (int i = 0; i < m; ++i) sub.masses[i] = sys.masses[cl.members[i]];
      PotentialSpec subpot;
      subpot.n_particles = m;
      subpot.cert = pot.cert;
      subpot.pair_table.resize(static_cast<std::size_t>(m) * (m - 1) / 2);
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
          subpot.pair(i, j) = pot.pair(cl.members[i], cl.members[j]);
      GridSpec subgrid = grid;
      subgrid.dim_config = sub.config_dim();
      total += ground_energy(sub, subpot, subgrid, epsilon);
    }
    if (first || total < best) { best = total; first = false; }
  }
  return best;
}

}  // namespace vlab
