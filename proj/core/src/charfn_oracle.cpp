// Brute-force evaluation of Theta(u) with general-purpose quadrature. Shares no
// code with the closed forms or the Gauss-Laguerre rule in charfn.cpp.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "supou/charfn.hpp"
#include "supou/errors.hpp"

namespace supou {

cplx theta_bruteforce(cplx u, const GammaSupOUParams& p, double t, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  if (t <= 0.0) return 0.0;
  const Strip strip = strip_delta(p, t);
  if (!(std::abs(u.real()) < strip.delta)) {
    throw DomainError("theta_bruteforce: u outside the analyticity strip");
  }
  const double beta = p.variance_loading();
  const double rho = p.leverage();
  const double a = p.jump_intensity();
  const double b = p.jump_rate();
  const double gamma0 = p.basis_drift();
  const double B = p.decay_scale();
  const double alpha = p.decay_shape();
  const double log_norm = std::lgamma(alpha);

  auto inner = [&](double r) -> cplx {
    const double decay = B * r;
    auto integrand = [&](double s) -> cplx {
      const cplx w = u * ((std::exp(decay * (t - s)) / decay) * (beta + 0.5 * u) -
                          ((1.0 / decay) * (beta + 0.5 * u) - rho));
      return gamma0 * w + a * w / (b - w);
    };
    double err = 0.0;
    return gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 12, 0.1 * tol, &err);
  };
  auto outer = [&](double r) -> cplx {
    if (r <= 0.0) return 0.0;
    const double density = std::exp((alpha - 1.0) * std::log(r) - r - log_norm);
    if (density == 0.0) return 0.0;
    return density * inner(r);
  };
  double err = 0.0;
  const cplx value = gauss_kronrod<double, 61>::integrate(
      outer, 0.0, std::numeric_limits<double>::infinity(), 15, tol, &err);
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    throw NumericalError("theta_bruteforce: non-finite quadrature result");
  }
  return value;
}

}  // namespace supou
