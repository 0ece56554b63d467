#include "vlab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vlab/errors.hpp"
#include "vlab/hardy.hpp"
#include "vlab/spectral.hpp"

namespace vlab {

namespace {

// node radius |x|_m = Euclidean length of frame coordinates
void node_radii(const GridSpec& grid, Eigen::VectorXd& r) {
  const int ipa = grid.interior_per_axis();
  const std::size_t n = grid.unknowns();
  std::vector<std::size_t> stride(grid.dim_config, 1);
  for (int a = grid.dim_config - 2; a >= 0; --a) stride[a] = stride[a + 1] * ipa;
  r.resize(static_cast<Eigen::Index>(n));
  for (std::size_t idx = 0; idx < n; ++idx) {
    double s = 0.0;
    for (int a = 0; a < grid.dim_config; ++a) {
      const double y = grid.node(static_cast<int>((idx / stride[a]) % ipa));
      s += y * y;
    }
    r[static_cast<Eigen::Index>(idx)] = std::sqrt(s);
  }
}

struct Normalized {
  Eigen::VectorXd v;
  double grad_sq = 0.0;
  double ball = 0.0;
};

// scale to ||grad||^2 + ||.||^2_{B(1)} = 1 and make the origin cell positive
Normalized normalize_threshold(const GridSpec& grid, const Eigen::VectorXd& raw) {
  const double vol = std::pow(grid.h(), grid.dim_config);
  const DiscreteOperator lap = build_laplacian(grid);
  Eigen::VectorXd r;
  node_radii(grid, r);
  double grad = vol * raw.dot(lap.matrix * raw);
  double ball = 0.0;
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    if (r[i] <= 1.0) ball += vol * raw[i] * raw[i];
  const double norm = std::sqrt(grad + ball);
  if (!(norm > 0.0)) throw ValidationError("threshold normalization: zero function");
  Eigen::VectorXd v = raw / norm;
  // origin cell sign; fall back to the largest entry if the center vanishes
  Eigen::Index center;
  r.minCoeff(&center);
  double s = v[center];
  if (s == 0.0) {
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    s = v[imax];
  }
  if (s < 0.0) v = -v;
  Normalized out;
  out.v = v;
  out.grad_sq = grad / (norm * norm);
  out.ball = ball / (norm * norm);
  return out;
}

}  // namespace

std::vector<ResonanceMember> resonance_sequence(const ParticleSystem& sys,
                                                const PotentialSpec& pot, const GridSpec& grid,
                                                const std::vector<int>& n_list) {
  if (n_list.empty()) throw ValidationError("resonance_sequence: empty n list");
  std::vector<ResonanceMember> out;
  for (int n : n_list) {
    if (n < 2) throw ValidationError("resonance_sequence: n must be >= 2");
    const DiscreteOperator op = assemble_hamiltonian(sys, pot, grid, 1.0 / n);
    // member energies sit at tau scales, well below the default residual bound
    const SpectralResult res = lowest_eigenpairs(op.matrix, 1, 1e-10);
    ResonanceMember m;
    m.n = n;
    m.energy = res.eigenvalues[0];
    if (!(m.energy < 0.0))
      throw ValidationError("resonance_sequence: nonnegative ground at n=" + std::to_string(n) +
                            "; the virtual-level premise fails at this resolution");
    const Normalized nm = normalize_threshold(grid, res.eigenvectors.col(0));
    m.psi = nm.v;
    m.grad_norm_sq = nm.grad_sq;
    m.ball_mass = nm.ball;
    out.push_back(std::move(m));
  }
  return out;
}

ThresholdFunction threshold_function(const ParticleSystem& sys, const PotentialSpec& pot,
                                     const GridSpec& grid) {
  const DiscreteOperator op = assemble_hamiltonian(sys, pot, grid, 0.0);
  const SpectralResult res = lowest_eigenpairs(op.matrix, 1, 1e-10);
  const double tau = tau_zero(grid);
  ThresholdFunction tf;
  tf.grid = grid;
  tf.frame = op.frame;
  tf.eigenvalue = res.eigenvalues[0];
  Eigen::VectorXd raw;
  if (std::abs(res.eigenvalues[0]) < tau) {
    tf.origin = ThresholdOrigin::direct_threshold_eigenvector;
    raw = res.eigenvectors.col(0);
  } else {
    tf.origin = ThresholdOrigin::resonance_sequence_limit;
    const auto seq = resonance_sequence(sys, pot, grid, {32});
    raw = seq.back().psi;
    tf.eigenvalue = seq.back().energy;
  }
  const Normalized nm = normalize_threshold(grid, raw);
  tf.phi = nm.v;
  tf.grad_norm_sq = nm.grad_sq;
  tf.ball_mass = nm.ball;

  // eigenfunction-vs-resonance flag comes from the Hardy constant alone
  if (sys.n_particles == 2) {
    tf.resonance_possible = true;
    tf.note = "two-body threshold: zero-energy state need not be square-integrable";
  } else {
    const HardyReport hr = hardy_constant(sys);
    if (hr.resonance_possible) {
      tf.resonance_possible = true;
      tf.note = "Hardy constant 1: threshold state may be a resonance";
    } else if (hr.value > 1.0) {
      tf.flagged_eigenvalue = true;
      std::ostringstream os;
      os << "Hardy constant " << hr.value << " > 1: threshold state is an eigenfunction";
      tf.note = os.str();
    }
  }
  return tf;
}

double weighted_norm(const ThresholdFunction& phi, DecayWeight kind, double alpha) {
  Eigen::VectorXd r;
  node_radii(phi.grid, r);
  const double vol = std::pow(phi.grid.h(), phi.grid.dim_config);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < phi.phi.size(); ++i) {
    double w;
    if (kind == DecayWeight::power) {
      w = std::pow(1.0 + r[i], alpha - 1.0);
    } else {
      // |ln r| smoothed to ln(e+r); base >= 2 keeps the family monotone in alpha
      w = std::pow(1.0 + std::log(std::exp(1.0) + r[i]), alpha - 1.0);
    }
    acc += vol * w * w * phi.phi[i] * phi.phi[i];
  }
  return std::sqrt(acc);
}

double weighted_grad_norm(const ThresholdFunction& phi, double alpha) {
  Eigen::VectorXd r;
  node_radii(phi.grid, r);
  Eigen::VectorXd g(phi.phi.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = std::pow(r[i], alpha) * phi.phi[i];
  const DiscreteOperator lap = build_laplacian(phi.grid);
  const double vol = std::pow(phi.grid.h(), phi.grid.dim_config);
  return std::sqrt(std::max(0.0, vol * g.dot(lap.matrix * g)));
}

TailFit tail_exponent_fit(const ThresholdFunction& phi) {
  Eigen::VectorXd r;
  node_radii(phi.grid, r);
  const double L = phi.grid.L;
  const double lo = 0.25 * L, hi = 0.75 * L;
  const double width = 2.0 * phi.grid.h() * std::sqrt(double(phi.grid.dim_config));
  const int nbins = static_cast<int>((hi - lo) / width);
  if (nbins < 6) throw ValidationError("tail_exponent_fit: need at least 6 shells in [L/4, 3L/4]");
  std::vector<double> sum(nbins, 0.0);
  std::vector<int> cnt(nbins, 0);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r[i] < lo || r[i] >= lo + nbins * width) continue;
    const int b = static_cast<int>((r[i] - lo) / width);
    sum[b] += phi.phi[i] * phi.phi[i];
    ++cnt[b];
  }
  TailFit fit;
  for (int b = 0; b < nbins; ++b) {
    if (cnt[b] == 0) continue;
    fit.radii.push_back(lo + (b + 0.5) * width);
    fit.rms.push_back(std::sqrt(sum[b] / cnt[b]));
  }
  if (static_cast<int>(fit.radii.size()) < 6)
    throw ValidationError("tail_exponent_fit: fewer than 6 populated shells");
  const double floor_rms = 10.0 * std::numeric_limits<double>::epsilon() *
                           phi.phi.cwiseAbs().maxCoeff();
  if (fit.rms.back() < floor_rms)
    throw ValidationError("tail_exponent_fit: tail is numerical noise, fit unusable");

  const int m = static_cast<int>(fit.radii.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> xs(m), ys(m);
  for (int k = 0; k < m; ++k) {
    xs[k] = std::log(fit.radii[k]);
    ys[k] = std::log(std::max(fit.rms[k], 1e-300));
    sx += xs[k]; sy += ys[k]; sxx += xs[k] * xs[k]; sxy += xs[k] * ys[k];
  }
  const double det = m * sxx - sx * sx;
  fit.slope = (m * sxy - sx * sy) / det;
  const double icpt = (sy * sxx - sx * sxy) / det;
  double ssr = 0.0, sxc = 0.0;
  const double xbar = sx / m;
  for (int k = 0; k < m; ++k) {
    const double e = ys[k] - (icpt + fit.slope * xs[k]);
    ssr += e * e;
    sxc += (xs[k] - xbar) * (xs[k] - xbar);
  }
  fit.band = 2.0 * std::sqrt(ssr / std::max(1, m - 2) / sxc);
  return fit;
}

DecayFitReport decay_report(const ParticleSystem& sys, const PotentialSpec& pot,
                            const GridSpec& grid, const std::vector<double>& alphas,
                            DecayWeight kind) {
  DecayFitReport rep;
  rep.alphas = alphas;
  const ThresholdFunction tf = threshold_function(sys, pot, grid);
  GridSpec big = grid;
  big.L = 2.0 * grid.L;
  big.points_per_axis = 2 * (grid.points_per_axis - 1) + 1;
  const ThresholdFunction tf2 = threshold_function(sys, pot, big);
  for (double a : alphas) {
    const double n1 = weighted_norm(tf, kind, a);
    const double n2 = weighted_norm(tf2, kind, a);
    rep.norms.push_back(n1);
    rep.norms_doubled.push_back(n2);
    rep.ratios.push_back(n2 / std::max(n1, 1e-300));
  }
  rep.fit = tail_exponent_fit(tf);
  return rep;
}

}  // namespace vlab
