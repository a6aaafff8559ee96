#include "supou/charfn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "supou/errors.hpp"
#include "supou/quadrature.hpp"

namespace supou {

namespace {

constexpr double kTinyMaturity = 1e-12;
constexpr int kInitialNodes = 64;
constexpr int kMaxNodes = 1024;

// log(1 + z) without cancellation for small |z|.
cplx log1p_complex(cplx z) {
  const double re = z.real();
  const double im = z.imag();
  const double modulus = 0.5 * std::log1p(2.0 * re + re * re + im * im);
  return {modulus, std::atan2(im, 1.0 + re)};
}

void require_in_strip(cplx u, const GammaSupOUParams& p, double t, const char* who) {
  const Strip s = strip_delta(p, t);
  if (!(std::abs(u.real()) < s.delta)) {
    throw DomainError(std::string(who) + ": |Re(u)| = " + std::to_string(std::abs(u.real())) +
                      " outside the analyticity strip delta = " + std::to_string(s.delta));
  }
}

// Closed-form s-integral of a w / (b - w) for one decay rate, given the
// u-dependent constants. `ratio` is (e^{At} - 1) / A.
//
// With k = q / A the antiderivative contains ln(D - k e^{Av}) for v in [0, t];
// since e^{Av} is real the argument runs along a straight segment from b - rho u
// to b - rho u - q ratio that cannot pass through 0 inside the strip. The swept
// angle is therefore below pi and the principal log of the endpoint ratio is the
// continuous branch.
bool jump_closed_form(cplx u, cplx q, double a, double b, double rho, double t, double decay,
                      double ratio, cplx& out) {
  const cplx num = b - rho * u;
  const cplx denom = decay * num + q;  // A (b + C(A))
  const double scale = std::abs(decay * num) + std::abs(q);
  if (!(std::abs(denom) > 1e-6 * scale)) return false;
  const cplx log_term = -log1p_complex(-q * ratio / num);
  out = a * (b * log_term - (q - rho * u * decay) * t) / denom;
  return true;
}

}  // namespace

ZCurve::ZCurve(std::vector<ZKnot> knots, bool require_nondecreasing) : knots_(std::move(knots)) {
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto& k = knots_[i];
    if (!(k.maturity > 0.0) || !std::isfinite(k.maturity)) {
      throw InputError("ZCurve: knot maturities must be positive");
    }
    if (!(k.z >= 0.0) || !std::isfinite(k.z)) throw InputError("ZCurve: z values must be >= 0");
    if (i > 0 && !(k.maturity > knots_[i - 1].maturity)) {
      throw InputError("ZCurve: knot maturities must be strictly increasing");
    }
  }
  if (require_nondecreasing && !is_nondecreasing()) {
    throw InputError("ZCurve: z values must be nondecreasing in maturity");
  }
}

bool ZCurve::is_nondecreasing() const noexcept {
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i].z < knots_[i - 1].z) return false;
  }
  return true;
}

std::optional<double> ZCurve::at(double maturity, double tol) const noexcept {
  for (const auto& k : knots_) {
    if (std::abs(k.maturity - maturity) <= tol) return k.z;
  }
  return std::nullopt;
}

cplx f_u(double decay, double s, cplx u, double beta, double rho, double t) {
  return (beta + 0.5 * u) * (std::expm1(decay * (t - s)) / decay) + rho;
}

double drift_integrated_variance(const GammaSupOUParams& p, double t) {
  if (t < kTinyMaturity) return 0.0;
  const double B = p.decay_scale();
  const double alpha = p.decay_shape();
  const double x = -B * t;
  if (x < 0.25) {
    // t^2 * sum_{k>=2} binom(2 - alpha, k) x^{k-2} / ((alpha - 1)(alpha - 2)).
    double term = 0.5;
    double sum = term;
    for (int k = 2; k < 400; ++k) {
      term *= (2.0 - alpha - k) / (k + 1.0) * x;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return t * t * sum;
  }
  const double i2 = t / (B * (alpha - 1.0));
  double i1;
  if (std::abs(alpha - 2.0) > 1e-8) {
    i1 = std::expm1((2.0 - alpha) * std::log1p(x)) / (B * B * (alpha - 1.0) * (alpha - 2.0));
  } else {
    i1 = -std::log1p(x) / (B * B);
  }
  return i1 - i2;
}

cplx theta_gamma0_part(cplx u, const GammaSupOUParams& p, double t) {
  if (t < kTinyMaturity) return 0.0;
  const cplx q = u * p.variance_loading() + 0.5 * u * u;
  return p.basis_drift() * (q * drift_integrated_variance(p, t) + p.leverage() * u * t);
}

cplx jump_integral_at_numeric(cplx u, const GammaSupOUParams& p, double t, double decay) {
  const cplx q = u * p.variance_loading() + 0.5 * u * u;
  const double a = p.jump_intensity();
  const double b = p.jump_rate();
  const double rho = p.leverage();
  auto integrand = [&](double s, std::span<double> out) {
    const cplx w = q * (std::expm1(decay * (t - s)) / decay) + rho * u;
    const cplx v = a * w / (b - w);
    out[0] = v.real();
    out[1] = v.imag();
  };
  const auto r = integrate_kronrod(integrand, 2, 0.0, t, 1e-300, 1e-13, 4000);
  if (!r.converged && r.error > 1e-9 * std::max(std::abs(r.value[0]), std::abs(r.value[1]))) {
    throw NumericalError("jump_integral_at_numeric: s-quadrature did not converge");
  }
  return {r.value[0], r.value[1]};
}

cplx jump_integral_at(cplx u, const GammaSupOUParams& p, double t, double decay) {
  const cplx q = u * p.variance_loading() + 0.5 * u * u;
  cplx out;
  if (jump_closed_form(u, q, p.jump_intensity(), p.jump_rate(), p.leverage(), t, decay,
                       std::expm1(decay * t) / decay, out)) {
    return out;
  }
  return jump_integral_at_numeric(u, p, t, decay);
}

cplx theta_jump_part(cplx u, const GammaSupOUParams& p, double t,
                     std::span<const DecayNode> nodes) {
  if (t < kTinyMaturity) return 0.0;
  require_in_strip(u, p, t, "theta_jump_part");
  cplx sum = 0.0;
  for (const auto& node : nodes) sum += node.weight * jump_integral_at(u, p, t, node.decay);
  return sum;
}

ThetaValue theta(cplx u, const GammaSupOUParams& p, double t) {
  if (t < kTinyMaturity) return {0.0, 0.0, 0.0};
  require_in_strip(u, p, t, "theta");
  const cplx drift_part = theta_gamma0_part(u, p, t);
  int n = kInitialNodes;
  cplx previous = theta_jump_part(u, p, t, pi_quadrature(p.decay_shape(), p.decay_scale(), n));
  for (;;) {
    n *= 2;
    const cplx current =
        theta_jump_part(u, p, t, pi_quadrature(p.decay_shape(), p.decay_scale(), n));
    if (std::abs(current - previous) <= 1e-10 * std::abs(current) + 1e-15) {
      return {drift_part, current, drift_part + current};
    }
    if (n >= kMaxNodes) {
      throw NumericalError("theta: decay-rate quadrature did not converge");
    }
    previous = current;
  }
}

cplx mgf(cplx u, const GammaSupOUParams& p, double x0, double z, double maturity) {
  if (!(z >= 0.0)) throw DomainError("mgf: z must be >= 0");
  if (maturity < kTinyMaturity) return std::exp(u * x0);
  require_in_strip(u, p, maturity, "mgf");
  const cplx q = u * p.variance_loading() + 0.5 * u * u;
  const ThetaValue th = theta(u, p, maturity);
  // Theta carries gamma0 * rho * u * T from the basis drift inside theta_L;
  // the log price removes that drift from L, and adds gamma0 T through a_t.
  const double drift = p.drift() + p.basis_drift() * (1.0 - p.leverage());
  return std::exp(u * (x0 + drift * maturity) + q * z + th.total);
}

MgfEvaluator::MgfEvaluator(const GammaSupOUParams& p, double x0, double z, double maturity,
                           std::span<const cplx> probes)
    : p_(p), maturity_(maturity), strip_{} {
  if (!(z >= 0.0)) throw DomainError("MgfEvaluator: z must be >= 0");
  if (!(maturity > 0.0)) throw DomainError("MgfEvaluator: maturity must be > 0");
  strip_ = strip_delta(p, maturity);
  linear_ = x0 + (p.drift() + p.basis_drift()) * maturity;
  quadratic_ = z + p.basis_drift() * drift_integrated_variance(p, maturity);

  std::vector<cplx> default_probes;
  if (probes.empty()) {
    const double d = strip_.delta;
    default_probes = {cplx(0.9 * d, 0.0), cplx(0.9 * d, 3.0), cplx(0.9 * d, 15.0),
                      cplx(0.9 * d, 60.0), cplx(-0.5 * d, 10.0)};
    probes = default_probes;
  }

  auto load = [&](int n) {
    const auto nodes = pi_quadrature(p.decay_shape(), p.decay_scale(), n);
    decay_.resize(nodes.size());
    weight_.resize(nodes.size());
    expm1_ratio_.resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      decay_[k] = nodes[k].decay;
      weight_[k] = nodes[k].weight;
      expm1_ratio_[k] = std::expm1(nodes[k].decay * maturity) / nodes[k].decay;
    }
  };

  int n = kInitialNodes;
  load(n);
  std::vector<cplx> previous;
  for (cplx u : probes) previous.push_back(jump_part(u));
  for (;;) {
    load(2 * n);
    bool stable = true;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const cplx current = jump_part(probes[i]);
      if (std::abs(current - previous[i]) > 1e-11 * std::max(1.0, std::abs(current))) {
        stable = false;
      }
      previous[i] = current;
    }
    if (stable) {
      load(n);  // the coarser rule already meets the tolerance
      return;
    }
    n *= 2;
    if (2 * n > kMaxNodes) {
      load(n);
      return;
    }
  }
}

cplx MgfEvaluator::jump_part(cplx u) const {
  const cplx q = u * p_.variance_loading() + 0.5 * u * u;
  const double a = p_.jump_intensity();
  const double b = p_.jump_rate();
  const double rho = p_.leverage();
  cplx sum = 0.0;
  for (std::size_t k = 0; k < decay_.size(); ++k) {
    cplx v;
    if (!jump_closed_form(u, q, a, b, rho, maturity_, decay_[k], expm1_ratio_[k], v)) {
      v = jump_integral_at_numeric(u, p_, maturity_, decay_[k]);
    }
    sum += weight_[k] * v;
  }
  return sum;
}

cplx MgfEvaluator::log_mgf(cplx u) const {
  if (!(std::abs(u.real()) < strip_.delta)) {
    throw DomainError("MgfEvaluator: u outside the analyticity strip");
  }
  const cplx q = u * p_.variance_loading() + 0.5 * u * u;
  return u * linear_ + q * quadratic_ + jump_part(u);
}

cplx MgfEvaluator::operator()(cplx u) const { return std::exp(log_mgf(u)); }

}  // namespace supou
