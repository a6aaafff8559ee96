#pragma once

#include <optional>
#include <span>
#include <vector>

#include "supou/model.hpp"

namespace supou {

// z_t summarises the pre-time-0 Levy basis: the variance the past jumps will
// still deliver over [0, t]. One value per quoted maturity.
struct ZKnot {
  double maturity;  // years
  double z;
};

class ZCurve {
 public:
  ZCurve() = default;
  // Knots must have strictly increasing maturities and z >= 0. With
  // `require_nondecreasing`, z must also be nondecreasing in maturity.
  explicit ZCurve(std::vector<ZKnot> knots, bool require_nondecreasing = false);

  [[nodiscard]] std::span<const ZKnot> knots() const noexcept { return knots_; }
  [[nodiscard]] std::size_t size() const noexcept { return knots_.size(); }
  [[nodiscard]] bool empty() const noexcept { return knots_.empty(); }
  [[nodiscard]] bool is_nondecreasing() const noexcept;
  // z at a knot maturity (matched to `tol` years), if present.
  [[nodiscard]] std::optional<double> at(double maturity, double tol = 1e-9) const noexcept;

 private:
  std::vector<ZKnot> knots_;
};

struct ThetaValue {
  cplx gamma0_part;
  cplx jump_part;
  cplx total;
};

// Exponent multiplier u f_u(A, s) / u; see theta(). A < 0, 0 <= s <= t.
[[nodiscard]] cplx f_u(double decay, double s, cplx u, double beta, double rho, double t);

// Deterministic integrated variance over [0, t] delivered by the basis drift
// per unit gamma0: E[((e^{At} - 1)/A - t)/A] over the decay-rate law.
[[nodiscard]] double drift_integrated_variance(const GammaSupOUParams& p, double t);

// gamma0 (I1 - I2 + I3), the basis-drift summand of Theta(u), in closed form.
[[nodiscard]] cplx theta_gamma0_part(cplx u, const GammaSupOUParams& p, double t);

// Jump summand a * int pi(dA) int_0^t (w / (b - w)) ds, w = u f_u(A, s),
// evaluated per decay node in closed form. Throws DomainError outside the strip.
[[nodiscard]] cplx theta_jump_part(cplx u, const GammaSupOUParams& p, double t,
                                   std::span<const DecayNode> nodes);

// Inner s-integral for one decay rate A: closed form with automatic fallback
// to direct s-quadrature near the removable singularity A(b - rho u) + q = 0.
[[nodiscard]] cplx jump_integral_at(cplx u, const GammaSupOUParams& p, double t, double decay);
// Same quantity by direct adaptive s-quadrature only.
[[nodiscard]] cplx jump_integral_at_numeric(cplx u, const GammaSupOUParams& p, double t,
                                            double decay);

// Theta(u) = int pi(dA) int_0^t theta_L(u f_u(A, s)) ds. Starts from 64 decay
// nodes and doubles until successive jump parts agree to 1e-10 relative.
[[nodiscard]] ThetaValue theta(cplx u, const GammaSupOUParams& p, double t);

// Independent oracle: two-dimensional adaptive quadrature over s and the
// Gamma-distributed decay variable, with no closed forms for the s-integral.
[[nodiscard]] cplx theta_bruteforce(cplx u, const GammaSupOUParams& p, double t,
                                    double tol = 1e-11);

// E[e^{u X_T} | G_0] for |Re u| < delta(T). x0 = log spot.
[[nodiscard]] cplx mgf(cplx u, const GammaSupOUParams& p, double x0, double z, double maturity);

// Fixed-node evaluator of log E[e^{u X_T} | G_0] for repeated evaluation at
// one maturity (Fourier pricing, calibration). The node count is chosen once
// on construction by doubling until the jump part is stable at probe points.
class MgfEvaluator {
 public:
  MgfEvaluator(const GammaSupOUParams& p, double x0, double z, double maturity,
               std::span<const cplx> probes = {});

  [[nodiscard]] cplx log_mgf(cplx u) const;
  [[nodiscard]] cplx operator()(cplx u) const;
  [[nodiscard]] const Strip& strip() const noexcept { return strip_; }
  [[nodiscard]] int node_count() const noexcept { return static_cast<int>(decay_.size()); }

 private:
  [[nodiscard]] cplx jump_part(cplx u) const;

  GammaSupOUParams p_;
  double maturity_;
  Strip strip_;
  double linear_;     // x0 + (mu + gamma0) T
  double quadratic_;  // z + gamma0 D_T
  std::vector<double> decay_;
  std::vector<double> weight_;
  std::vector<double> expm1_ratio_;  // (e^{A T} - 1) / A
};

}  // namespace supou
