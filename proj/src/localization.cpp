#include "vlab/localization.hpp"

#include <cmath>
#include <limits>

#include "vlab/errors.hpp"

namespace vlab {

namespace {
constexpr double kHuge = std::numeric_limits<double>::infinity();
}

double ScalarCutoff::u_ln(double ln_t) const {
  const double s = ln_t - std::log(beta);
  const double s_alpha = ln_alpha - std::log(beta);
  if (s <= s_alpha) return 1.0;
  if (s >= 0.0) return 0.0;
  const double as = -s;
  if (s <= std::log(beta))  // t <= beta^2
    return A * std::pow(as, gamma);
  return B * as;
}

double ScalarCutoff::t_du_ln(double ln_t) const {
  const double s = ln_t - std::log(beta);
  const double s_alpha = ln_alpha - std::log(beta);
  if (s <= s_alpha || s >= 0.0) return 0.0;
  const double as = -s;
  if (s <= std::log(beta)) return -A * gamma * std::pow(as, gamma - 1.0);
  return -B;
}

double ScalarCutoff::u(double t) const {
  if (!(t > 0.0)) return 1.0;
  return u_ln(std::log(t));
}

double ScalarCutoff::du(double t) const {
  if (!(t > 0.0)) return 0.0;
  return t_du_ln(std::log(t)) / t;
}

ScalarCutoff build_scalar_cutoff(double eps, double beta) {
  if (!(eps > 0.0)) throw ValidationError("build_scalar_cutoff: eps must be positive");
  if (!(beta > 0.0 && beta < 1.0))
    throw ValidationError("build_scalar_cutoff: beta must lie in (0,1)");
  ScalarCutoff c;
  c.eps = eps;
  c.beta = beta;
  c.gamma = 0.9 * (0.5 * std::sqrt(eps));
  const double lb = std::abs(std::log(beta));

  // linear-branch bound 4 |ln(alpha/beta)|^{-2 gamma} |ln beta|^{2 gamma},
  // driven slightly below eps; bisect on x = |ln(alpha/beta)| in the ln domain
  const double target = 0.98 * eps;
  auto excess = [&](double x) {
    return 4.0 * std::pow(lb / x, 2.0 * c.gamma) - target;
  };
  double lo = lb, hi = lb * std::pow(4.0 / target, 0.5 / c.gamma) * 2.0;
  if (excess(lo) < 0.0) throw ValidationError("build_scalar_cutoff: eps too large for this beta");
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-14; ++it) {
    const double mid = std::sqrt(lo * hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  const double s_alpha = -hi;  // the side where the bound holds
  c.ln_alpha = std::log(beta) + s_alpha;
  c.alpha = std::exp(c.ln_alpha);
  c.A = std::pow(-s_alpha, -c.gamma);
  c.B = c.A * std::pow(lb, c.gamma - 1.0);
  return c;
}

std::vector<ScalarSample> sample_scalar_bound(const ScalarCutoff& c, int n) {
  if (n < 2) throw ValidationError("sample_scalar_bound: need at least 2 samples");
  std::vector<ScalarSample> out;
  out.reserve(n);
  const double lnb = std::log(c.beta);
  const double s_alpha = c.ln_alpha - lnb;
  // half the samples in each branch, log-spaced in |s| so the power branch's
  // enormous range is covered evenly
  const int n1 = n / 2, n2 = n - n1;
  auto push = [&](double s) {
    ScalarSample smp;
    smp.ln_t = lnb + s;
    smp.t = std::exp(smp.ln_t);
    const double as = -s;
    if (s <= lnb) {
      smp.u = c.A * std::pow(as, c.gamma);
      smp.t_du = -c.A * c.gamma * std::pow(as, c.gamma - 1.0);
    } else {
      smp.u = c.B * as;
      smp.t_du = -c.B;
    }
    const double ln_t = smp.ln_t;
    smp.deriv_sq = smp.t_du * smp.t_du * ln_t * ln_t;
    smp.margin = c.eps / smp.deriv_sq;
    out.push_back(smp);
  };
  for (int i = 0; i < n1; ++i) {
    // |s| log-spaced between |ln beta| (seam) and |s_alpha|
    const double f = (i + 0.5) / n1;
    const double as = std::abs(lnb) * std::pow(-s_alpha / std::abs(lnb), f);
    push(-as);
  }
  for (int i = 0; i < n2; ++i) {
    const double f = (i + 0.5) / n2;
    const double as = std::abs(lnb) * std::pow(1e-6, 1.0 - f);  // down to nearly t = beta
    push(-as);
  }
  return out;
}

double CutoffPair::t_of(const ConfigPoint& x) const {
  const Partition& part = Z;
  const ClusterFrame cf = cluster_coords(sys, part, x);
  const double qn = mass_norm(sys, cf.q);
  const double xin = mass_norm(sys, cf.xi);
  if (xin == 0.0) return (qn == 0.0) ? 0.0 : kHuge;
  return qn / xin;
}

double CutoffPair::sigma(double t) const {
  if (t >= kappa) return 1.0;
  if (!(t > 0.0)) return 0.0;
  const double th = std::log(t);
  if (th <= ln_kappa_prime) return 0.0;
  if (t < kappa_pp) return sigma0 * (1.0 - inner.u_ln(th));
  const int cells = static_cast<int>(sigma_tab.size()) - 1;
  const double f = (th - theta_lo) / (theta_hi - theta_lo) * cells;
  const int i = std::min(cells - 1, std::max(0, static_cast<int>(f)));
  const double w = f - i;
  return std::min(1.0, std::max(0.0, sigma_tab[i] * (1.0 - w) + sigma_tab[i + 1] * w));
}

double CutoffPair::dsigma_dt(double t) const {
  if (t >= kappa || !(t > 0.0)) return 0.0;
  const double th = std::log(t);
  if (th <= ln_kappa_prime) return 0.0;
  if (t < kappa_pp) return -sigma0 * inner.t_du_ln(th) / t;
  const int cells = static_cast<int>(sigma_tab.size()) - 1;
  const double dtheta = (theta_hi - theta_lo) / cells;
  const double f = (th - theta_lo) / dtheta;
  const int i = std::min(cells - 1, std::max(0, static_cast<int>(f)));
  return (sigma_tab[i + 1] - sigma_tab[i]) / dtheta / t;
}

double CutoffPair::u(const ConfigPoint& x) const {
  const double sg = sigma(t_of(x));
  // exact plateau: cos(pi/2) would leave a 1e-17 residue
  return sg >= 1.0 ? 0.0 : std::cos(0.5 * M_PI * sg);
}

double CutoffPair::v(const ConfigPoint& x) const {
  const double sg = sigma(t_of(x));
  return sg >= 1.0 ? 1.0 : std::sin(0.5 * M_PI * sg);
}

double CutoffPair::grad_sq(const ConfigPoint& x) const {
  const ClusterFrame cf = cluster_coords(sys, Z, x);
  const double qn = mass_norm(sys, cf.q);
  const double xin = mass_norm(sys, cf.xi);
  if (xin == 0.0) return 0.0;
  const double t = qn / xin;
  const double ds = dsigma_dt(t);
  if (ds == 0.0) return 0.0;
  // |grad t|^2 = (1+t^2)/xi^2 for t = |q|/|xi| with orthogonal blocks
  const double gt2 = (1.0 + t * t) / (xin * xin);
  const double c = 0.5 * M_PI * ds;
  return c * c * gt2;
}

double CutoffPair::error_bound_rhs(const ConfigPoint& x) const {
  const ClusterFrame cf = cluster_coords(sys, Z, x);
  const double qn = mass_norm(sys, cf.q);
  const double xin = mass_norm(sys, cf.xi);
  const double t = (xin == 0.0) ? ((qn == 0.0) ? 0.0 : kHuge) : qn / xin;
  const double s = sigma(t);
  const double uu = std::cos(0.5 * M_PI * s), vv = std::sin(0.5 * M_PI * s);
  const double x2 = qn * qn + xin * xin;
  double rhs = 0.0;
  if (x2 > 0.0) rhs += eps * vv * vv / x2;
  if (qn > 0.0 && xin > 0.0 && t != 1.0) {
    const double lg = std::log(t);
    rhs += eps * uu * uu / (qn * qn * lg * lg);
  } else if (uu != 0.0) {
    rhs = kHuge;
  }
  return rhs;
}

CutoffPair build_cone_partition(const ParticleSystem& sys, const Partition& Z, double kappa,
                                double eps) {
  sys.validate();
  Z.validate(sys);
  if (!(kappa > 0.0 && kappa < 1.0))
    throw ValidationError("build_cone_partition: kappa must lie in (0,1)");
  if (!(eps > 0.0)) throw ValidationError("build_cone_partition: eps must be positive");
  CutoffPair p;
  p.sys = sys;
  p.Z = Z;
  p.kappa = kappa;
  p.eps = eps;
  p.kappa_pp = 0.5 * kappa;

  // budget profile on [kappa'', kappa]: integrate the largest slope the
  // pointwise bound allows (at 90%), tapered to zero at kappa so that
  // v'(1-v^2)^{-1/2} vanishes there
  const int cells = 4096;
  p.theta_lo = std::log(p.kappa_pp);
  p.theta_hi = std::log(kappa);
  const double dtheta = (p.theta_hi - p.theta_lo) / cells;
  const double width = 0.05 * (p.theta_hi - p.theta_lo);
  auto taper = [&](double th) {
    const double s = std::min(1.0, std::max(0.0, (p.theta_hi - th) / width));
    return s * s * (3.0 - 2.0 * s);
  };
  auto slope = [&](double th, double sg) {
    const double t = std::exp(th);
    const double sn = std::sin(0.5 * M_PI * sg), cs = std::cos(0.5 * M_PI * sg);
    const double lt = std::log(t);
    const double a = t * sn / (1.0 + t * t);
    const double b2 = cs * cs / ((1.0 + t * t) * lt * lt);
    return 0.9 * std::sqrt(eps) * (2.0 / M_PI) * taper(th) * std::sqrt(a * a + b2);
  };
  p.sigma_tab.assign(cells + 1, 0.0);
  p.sigma_tab[cells] = 1.0;
  for (int i = cells; i > 0; --i) {
    const double th = p.theta_lo + i * dtheta;
    const double sg = p.sigma_tab[i];
    const double k1 = slope(th, sg);
    const double k2 = slope(th - 0.5 * dtheta, sg - 0.5 * dtheta * k1);
    const double k3 = slope(th - 0.5 * dtheta, sg - 0.5 * dtheta * k2);
    const double k4 = slope(th - dtheta, sg - dtheta * k3);
    double nxt = sg - dtheta / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    p.sigma_tab[i - 1] = std::max(0.0, nxt);
  }
  p.sigma0 = p.sigma_tab[0];

  if (p.sigma0 <= 1e-8) {
    // budget already exhausted the phase; no inner branch needed
    p.inner = build_scalar_cutoff(eps, p.kappa_pp);
    p.ln_kappa_prime = std::log(p.kappa_pp);
    p.kappa_prime = p.kappa_pp;
    p.sigma0 = 0.0;
    return p;
  }

  // inner branch: the scalar cutoff shapes the phase from sigma0 down to 0;
  // its own bound budget comes from the u term of the cone bound
  const double cs0 = std::cos(0.5 * M_PI * p.sigma0);
  const double eps_eff = eps * cs0 * cs0 * (4.0 / (M_PI * M_PI)) /
                         (p.sigma0 * p.sigma0 * (1.0 + p.kappa_pp * p.kappa_pp));
  p.inner = build_scalar_cutoff(0.9 * eps_eff, p.kappa_pp);
  p.ln_kappa_prime = p.inner.ln_alpha;
  p.kappa_prime = std::exp(p.ln_kappa_prime);
  return p;
}

ImsTriple ims_decompose(const DiscreteOperator& H, const Eigen::VectorXd& u_nodes,
                        const Eigen::VectorXd& v_nodes, const Eigen::VectorXd& phi) {
  const Eigen::Index n = H.matrix.rows();
  if (u_nodes.size() != n || v_nodes.size() != n || phi.size() != n)
    throw ValidationError("ims_decompose: vector sizes must match the operator");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = u_nodes[i] * u_nodes[i] + v_nodes[i] * v_nodes[i];
    if (std::abs(s - 1.0) > 1e-12)
      throw ValidationError("ims_decompose: u^2+v^2 must equal 1 at every node");
  }
  ImsTriple out;
  const Eigen::VectorXd up = u_nodes.cwiseProduct(phi);
  const Eigen::VectorXd vp = v_nodes.cwiseProduct(phi);
  out.localized_u = up.dot(H.matrix * up);
  out.localized_v = vp.dot(H.matrix * vp);
  out.total = phi.dot(H.matrix * phi);
  // off-diagonal entries carry the whole localization error when u^2+v^2=1
  double err = 0.0;
  for (Eigen::Index col = 0; col < H.matrix.outerSize(); ++col)
    for (SpMat::InnerIterator it(H.matrix, col); it; ++it) {
      if (it.row() == col) continue;
      const double du = u_nodes[it.row()] - u_nodes[col];
      const double dv = v_nodes[it.row()] - v_nodes[col];
      err += -0.5 * it.value() * phi[it.row()] * phi[col] * (du * du + dv * dv);
    }
  out.error_term = err;
  out.residual = std::abs(out.localized_u + out.localized_v - out.total - out.error_term) /
                 (1.0 + std::abs(out.total));
  return out;
}

void sample_cutoff_pair(const CutoffPair& pair, const GridSpec& grid, const Frame& frame,
                        Eigen::VectorXd& u_nodes, Eigen::VectorXd& v_nodes) {
  if (frame.config_dim() != grid.dim_config)
    throw ValidationError("sample_cutoff_pair: frame does not match grid");
  const std::size_t n = grid.unknowns();
  u_nodes.resize(static_cast<Eigen::Index>(n));
  v_nodes.resize(static_cast<Eigen::Index>(n));
  const int ipa = grid.interior_per_axis();
  std::vector<std::size_t> stride(grid.dim_config, 1);
  for (int a = grid.dim_config - 2; a >= 0; --a) stride[a] = stride[a + 1] * ipa;
  Eigen::VectorXd y(grid.dim_config);
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < grid.dim_config; ++a)
      y[a] = grid.node(static_cast<int>((idx / stride[a]) % ipa));
    const ConfigPoint x = frame.from_frame(y);
    const double sg = pair.sigma(pair.t_of(x));
    u_nodes[static_cast<Eigen::Index>(idx)] = sg >= 1.0 ? 0.0 : std::cos(0.5 * M_PI * sg);
    v_nodes[static_cast<Eigen::Index>(idx)] = sg >= 1.0 ? 1.0 : std::sin(0.5 * M_PI * sg);
  }
}

}  // namespace vlab
