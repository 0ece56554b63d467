#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vlab/discretize.hpp"
#include "vlab/geometry.hpp"

namespace vlab {

// radial cutoff u with u(alpha)=1, u(beta)=0 and (u')^2 <= eps t^-2 ln^-2(t).
// Works in s = ln(t/beta): a power branch A|s|^gamma down to t = beta^2, then
// a linear branch B|s| to t = beta. alpha is usually far below the smallest
// positive double, so the ln-domain evaluators are the authoritative ones.
struct ScalarCutoff {
  double eps = 0.0;
  double beta = 0.5;
  double gamma = 0.0;
  double ln_alpha = 0.0;  // ln of the inner endpoint
  double alpha = 0.0;     // exp(ln_alpha); 0 when it underflows
  double A = 0.0, B = 0.0;

  double u_ln(double ln_t) const;      // value from ln t, clamps to 1 and 0
  double t_du_ln(double ln_t) const;   // t * u'(t), finite in the ln domain
  double u(double t) const;
  double du(double t) const;           // derivative in t
};

ScalarCutoff build_scalar_cutoff(double eps, double beta);

struct ScalarSample {
  double ln_t = 0.0;
  double t = 0.0;       // exp(ln_t); may underflow to 0
  double u = 0.0;
  double t_du = 0.0;    // t * u'(t)
  double deriv_sq = 0.0;  // (u')^2 t^2 ln^2 t, the bound's left side
  double margin = 0.0;    // eps / deriv_sq, must be >= 1
};

// log-spaced samples over both branches for the pointwise derivative bound
std::vector<ScalarSample> sample_scalar_bound(const ScalarCutoff& c, int n);

// partition of unity subordinate to the cone K(Z,kappa): u=1 on K(Z,kappa'),
// u=0 outside K(Z,kappa), u^2+v^2=1, and the gradient bounded by the
// Hardy-weighted right side with margin. The profile is driven by the slope
// budget the bound allows, integrated inward from kappa where the taper makes
// v'(1-v^2)^{-1/2} vanish.
struct CutoffPair {
  ParticleSystem sys;
  Partition Z;
  double kappa = 0.5;
  double kappa_pp = 0.25;     // seam between the budget profile and the inner cutoff
  double kappa_prime = 0.0;   // exp(ln_kappa_prime); 0 when it underflows
  double ln_kappa_prime = 0.0;
  double eps = 0.0;
  double sigma0 = 0.0;        // phase at the seam
  ScalarCutoff inner;         // shapes the phase on (kappa', kappa'')
  std::vector<double> sigma_tab;  // phase on theta = ln t grid over [kappa'', kappa]
  double theta_lo = 0.0, theta_hi = 0.0;

  double t_of(const ConfigPoint& x) const;  // |q|_m / |xi|_m
  double sigma(double t) const;             // phase in [0,1], u = cos(pi/2 s)
  double dsigma_dt(double t) const;
  double u(const ConfigPoint& x) const;
  double v(const ConfigPoint& x) const;
  double grad_sq(const ConfigPoint& x) const;         // |grad u|^2 + |grad v|^2
  double error_bound_rhs(const ConfigPoint& x) const; // eps [v^2/|x|^2 + u^2/(q^2 ln^2(q/xi))]
};

CutoffPair build_cone_partition(const ParticleSystem& sys, const Partition& Z, double kappa,
                                double eps);

struct ImsTriple {
  double localized_u = 0.0;  // <H u phi, u phi>
  double localized_v = 0.0;  // <H v phi, v phi>
  double error_term = 0.0;   // discrete analogue of int (|grad u|^2+|grad v|^2) phi^2
  double total = 0.0;        // <H phi, phi>
  double residual = 0.0;     // |u-term + v-term - total - error| / (1+|total|)
};

// exact discrete IMS split; requires u^2+v^2=1 at every node to 1e-12
ImsTriple ims_decompose(const DiscreteOperator& H, const Eigen::VectorXd& u_nodes,
                        const Eigen::VectorXd& v_nodes, const Eigen::VectorXd& phi);

// node samples of a cone partition over a grid in the given frame
void sample_cutoff_pair(const CutoffPair& pair, const GridSpec& grid, const Frame& frame,
                        Eigen::VectorXd& u_nodes, Eigen::VectorXd& v_nodes);

}  // namespace vlab
