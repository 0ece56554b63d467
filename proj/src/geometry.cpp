#include "vlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vlab/rng.hpp"

namespace vlab {

void ParticleSystem::validate() const {
  if (n_particles < 2) throw ValidationError("ParticleSystem: need at least 2 particles");
  if (dim < 1 || dim > 3) throw ValidationError("ParticleSystem: dim must be 1, 2 or 3");
  if (static_cast<int>(masses.size()) != n_particles)
    throw ValidationError("ParticleSystem: masses.size() != n_particles");
  for (double m : masses)
    if (!(m > 0.0)) throw ValidationError("ParticleSystem: masses must be positive");
}

double ParticleSystem::total_mass() const {
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

std::string ParticleSystem::descriptor() const {
  std::ostringstream os;
  os << "N=" << n_particles << ",d=" << dim << ",m=(";
  for (int i = 0; i < n_particles; ++i) os << (i ? "," : "") << masses[i];
  os << ")";
  return os.str();
}

void Partition::validate(const ParticleSystem& sys) const {
  std::vector<int> seen(sys.n_particles, 0);
  if (clusters.empty()) throw ValidationError("Partition: empty");
  for (const auto& c : clusters) {
    if (c.members.empty()) throw ValidationError("Partition: empty cluster");
    for (int i : c.members) {
      if (i < 0 || i >= sys.n_particles) throw ValidationError("Partition: particle index out of range");
      if (seen[i]++) throw ValidationError("Partition: particle appears twice");
    }
  }
  for (int i = 0; i < sys.n_particles; ++i)
    if (!seen[i]) throw ValidationError("Partition: particle missing");
}

int Partition::cluster_of(int particle) const {
  for (int l = 0; l < order(); ++l)
    for (int i : clusters[l].members)
      if (i == particle) return l;
  throw ValidationError("Partition: particle not in any cluster");
}

std::string Partition::descriptor() const {
  std::ostringstream os;
  for (const auto& c : clusters) {
    os << "{";
    for (std::size_t j = 0; j < c.members.size(); ++j)
      os << (j ? " " : "") << c.members[j] + 1;
    os << "}";
  }
  return os.str();
}

void ConeSpec::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ValidationError("ConeSpec: kappa not in (0,1)");
  if (!(kappa_prime > 0.0 && kappa_prime < kappa))
    throw ValidationError("ConeSpec: kappa' not in (0,kappa)");
  if (!(radius > 0.0)) throw ValidationError("ConeSpec: R must be positive");
}

static void check_shape(const ParticleSystem& sys, const ConfigPoint& x, const char* who) {
  if (x.coords.rows() != sys.n_particles || x.coords.cols() != sys.dim)
    throw ValidationError(std::string(who) + ": coords shape mismatch");
}

double mass_inner(const ParticleSystem& sys, const ConfigPoint& x, const ConfigPoint& y) {
  check_shape(sys, x, "mass_inner");
  check_shape(sys, y, "mass_inner");
  double s = 0.0;
  for (int i = 0; i < sys.n_particles; ++i)
    s += sys.masses[i] * x.coords.row(i).dot(y.coords.row(i));
  return s;
}

double mass_norm(const ParticleSystem& sys, const ConfigPoint& x) {
  return std::sqrt(std::max(0.0, mass_inner(sys, x, x)));
}

ConfigPoint project_X0(const ParticleSystem& sys, const ConfigPoint& x) {
  check_shape(sys, x, "project_X0");
  Eigen::RowVectorXd cm = Eigen::RowVectorXd::Zero(sys.dim);
  for (int i = 0; i < sys.n_particles; ++i) cm += sys.masses[i] * x.coords.row(i);
  cm /= sys.total_mass();
  ConfigPoint out;
  out.coords = x.coords;
  for (int i = 0; i < sys.n_particles; ++i) out.coords.row(i) -= cm;
  out.in_X0 = true;
  return out;
}

ConfigPoint project_Xc(const ParticleSystem& sys, const ConfigPoint& x) {
  check_shape(sys, x, "project_Xc");
  Eigen::RowVectorXd cm = Eigen::RowVectorXd::Zero(sys.dim);
  for (int i = 0; i < sys.n_particles; ++i) cm += sys.masses[i] * x.coords.row(i);
  cm /= sys.total_mass();
  ConfigPoint out;
  out.coords.resize(sys.n_particles, sys.dim);
  for (int i = 0; i < sys.n_particles; ++i) out.coords.row(i) = cm;
  out.in_X0 = false;
  return out;
}

ClusterFrame cluster_coords(const ParticleSystem& sys, const Partition& Z, const ConfigPoint& x) {
  check_shape(sys, x, "cluster_coords");
  Z.validate(sys);
  // membership in X0 is part of the contract, not just the flag
  Eigen::RowVectorXd cm = Eigen::RowVectorXd::Zero(sys.dim);
  for (int i = 0; i < sys.n_particles; ++i) cm += sys.masses[i] * x.coords.row(i);
  if (cm.norm() > kTauGeom * (1.0 + x.coords.norm()) * sys.total_mass())
    throw ValidationError("cluster_coords: point not in X0");

  ClusterFrame f;
  f.partition = Z;
  f.q.coords.resize(sys.n_particles, sys.dim);
  f.xi.coords.resize(sys.n_particles, sys.dim);
  f.q.in_X0 = f.xi.in_X0 = true;
  for (const auto& c : Z.clusters) {
    Eigen::RowVectorXd xc = Eigen::RowVectorXd::Zero(sys.dim);
    double mc = 0.0;
    for (int i : c.members) {
      xc += sys.masses[i] * x.coords.row(i);
      mc += sys.masses[i];
    }
    xc /= mc;
    for (int i : c.members) {
      f.q.coords.row(i) = x.coords.row(i) - xc;
      f.xi.coords.row(i) = xc;
    }
  }
  return f;
}

namespace {

// particle-space inner product sum_i m_i a_i b_i
double pvec_inner(const ParticleSystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (int i = 0; i < sys.n_particles; ++i) s += sys.masses[i] * a[i] * b[i];
  return s;
}

// twice-run modified Gram-Schmidt in the mass inner product; drops vectors
// with norm below tol after projection
std::vector<Eigen::VectorXd> mgs(const ParticleSystem& sys,
                                 const std::vector<Eigen::VectorXd>& span) {
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::VectorXd w : span) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= pvec_inner(sys, b, w) * b;
    const double nrm = std::sqrt(std::max(0.0, pvec_inner(sys, w, w)));
    if (nrm > 1e-12) basis.push_back(w / nrm);
  }
  return basis;
}

}  // namespace

Eigen::VectorXd Frame::to_frame(const ConfigPoint& x) const {
  if (x.coords.rows() != sys.n_particles || x.coords.cols() != sys.dim)
    throw ValidationError("Frame::to_frame: coords shape mismatch");
  Eigen::VectorXd y(config_dim());
  int idx = 0;
  for (const auto& c : particle_vecs)
    for (int a = 0; a < sys.dim; ++a) {
      double s = 0.0;
      for (int i = 0; i < sys.n_particles; ++i) s += sys.masses[i] * c[i] * x.coords(i, a);
      y[idx++] = s;
    }
  return y;
}

ConfigPoint Frame::from_frame(const Eigen::VectorXd& y) const {
  if (y.size() != config_dim()) throw ValidationError("Frame::from_frame: wrong length");
  ConfigPoint x;
  x.coords = Eigen::MatrixXd::Zero(sys.n_particles, sys.dim);
  int idx = 0;
  for (const auto& c : particle_vecs)
    for (int a = 0; a < sys.dim; ++a) {
      const double v = y[idx++];
      for (int i = 0; i < sys.n_particles; ++i) x.coords(i, a) += c[i] * v;
    }
  x.in_X0 = true;
  return x;
}

Frame orthonormal_frame(const ParticleSystem& sys) {
  sys.validate();
  const double M = sys.total_mass();
  std::vector<Eigen::VectorXd> span;
  for (int i = 1; i < sys.n_particles; ++i) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(sys.n_particles);
    w[0] = 1.0;
    w[i] = -1.0;
    double mw = 0.0;
    for (int j = 0; j < sys.n_particles; ++j) mw += sys.masses[j] * w[j];
    w.array() -= mw / M;
    span.push_back(w);
  }
  Frame f;
  f.sys = sys;
  f.particle_vecs = mgs(sys, span);
  if (static_cast<int>(f.particle_vecs.size()) != sys.n_particles - 1)
    throw ValidationError("orthonormal_frame: degenerate spanning set");
  return f;
}

Frame cluster_adapted_frame(const ParticleSystem& sys, const Partition& Z) {
  sys.validate();
  Z.validate(sys);
  Frame f;
  f.sys = sys;
  // internal axes cluster by cluster: differences to the first member,
  // recentered within the cluster
  for (const auto& c : Z.clusters) {
    if (c.members.size() < 2) continue;
    std::vector<Eigen::VectorXd> span;
    double mc = 0.0;
    for (int i : c.members) mc += sys.masses[i];
    for (std::size_t j = 1; j < c.members.size(); ++j) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(sys.n_particles);
      w[c.members[0]] = 1.0;
      w[c.members[j]] = -1.0;
      double mw = 0.0;
      for (int i : c.members) mw += sys.masses[i] * w[i];
      for (int i : c.members) w[i] -= mw / mc;
      span.push_back(w);
    }
    auto block = mgs(sys, span);
    for (auto& b : block) f.particle_vecs.push_back(b);
  }
  f.n_q_axes = static_cast<int>(f.particle_vecs.size()) * sys.dim;
  // inter-cluster axes: indicator differences projected to X0
  {
    const double M = sys.total_mass();
    std::vector<Eigen::VectorXd> span;
    for (int l = 1; l < Z.order(); ++l) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(sys.n_particles);
      for (int i : Z.clusters[0].members) w[i] = 1.0;
      for (int i : Z.clusters[l].members) w[i] = -1.0;
      double mw = 0.0;
      for (int j = 0; j < sys.n_particles; ++j) mw += sys.masses[j] * w[j];
      w.array() -= mw / M;
      span.push_back(w);
    }
    auto block = mgs(sys, span);
    for (auto& b : block) f.particle_vecs.push_back(b);
  }
  if (static_cast<int>(f.particle_vecs.size()) != sys.n_particles - 1)
    throw ValidationError("cluster_adapted_frame: degenerate spanning set");
  return f;
}

ConeMembership cone_membership(const ParticleSystem& sys, const ConeSpec& spec,
                               const ConfigPoint& x) {
  spec.validate();
  const ClusterFrame cf = cluster_coords(sys, spec.partition, x);
  const double qn = mass_norm(sys, cf.q);
  const double rn = mass_norm(sys, x);
  ConeMembership m;
  m.in_K = qn <= spec.kappa * rn;
  m.in_K_R = m.in_K && rn >= spec.radius;
  m.in_shell = m.in_K_R && !(qn <= spec.kappa_prime * rn);
  return m;
}

std::vector<Partition> two_cluster_partitions(int n_particles) {
  // subsets containing particle 0 (proper, nonempty complement); each
  // partition appears once
  std::vector<Partition> out;
  const int n = n_particles;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    Cluster c1, c2;
    c1.members.push_back(0);
    for (int i = 1; i < n; ++i) {
      if (mask & (1u << (i - 1)))
        c1.members.push_back(i);
      else
        c2.members.push_back(i);
    }
    if (c2.members.empty()) continue;
    Partition Z;
    Z.clusters = {c1, c2};
    out.push_back(Z);
  }
  return out;
}

ConeSeparationReport cone_separation_kappa(const ParticleSystem& sys, double R,
                                           std::uint64_t seed, int n_samples) {
  sys.validate();
  if (!(R > 0.0)) throw ValidationError("cone_separation_kappa: R must be positive");
  const auto partitions = two_cluster_partitions(sys.n_particles);
  ConeSeparationReport rep;
  rep.samples = n_samples;
  if (partitions.size() < 2) {
    rep.kappa = 0.5;
    rep.vacuous = true;
    rep.note = "single two-cluster partition; disjointness is vacuous, grid maximum returned";
    return rep;
  }

  const Frame fr = orthonormal_frame(sys);
  const int dc = fr.config_dim();
  // membership in K(Z,kappa) is scale invariant, so only directions matter;
  // radii are still drawn in [R, 3R] to exercise the K_R definition honestly
  for (double kappa = 0.5; kappa > 1e-7; kappa *= 0.5) {
    Rng rng(seed);
    bool ok = true;
    for (int s = 0; s < n_samples && ok; ++s) {
      Eigen::VectorXd y(dc);
      for (int j = 0; j < dc; ++j) y[j] = rng.normal();
      const double nrm = y.norm();
      if (nrm < 1e-12) continue;
      y *= rng.uniform(R, 3.0 * R) / nrm;
      const ConfigPoint x = fr.from_frame(y);
      const double rn = mass_norm(sys, x);
      int hits = 0;
      for (const auto& Z : partitions) {
        const ClusterFrame cf = cluster_coords(sys, Z, x);
        if (mass_norm(sys, cf.q) <= kappa * rn) ++hits;
        if (hits >= 2) break;
      }
      if (hits >= 2) ok = false;
    }
    if (ok) {
      rep.kappa = kappa;
      return rep;
    }
  }
  throw ValidationError("cone_separation_kappa: no kappa above grid minimum separates the cones");
}

}  // namespace vlab
