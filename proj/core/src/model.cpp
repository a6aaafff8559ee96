#include "supou/model.hpp"

#include <cmath>
#include <string>

#include "supou/errors.hpp"
#include "supou/quadrature.hpp"

namespace supou {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("GammaSupOUParams: ") + what);
}

}  // namespace

GammaSupOUParams::GammaSupOUParams(const Fields& f) : f_(f) {
  require(std::isfinite(f.leverage) && std::isfinite(f.drift) &&
              std::isfinite(f.variance_loading),
          "non-finite parameter");
  require(f.jump_intensity > 0.0 && std::isfinite(f.jump_intensity), "jump intensity a must be > 0");
  require(f.jump_rate > 0.0 && std::isfinite(f.jump_rate), "jump rate b must be > 0");
  require(f.decay_scale < 0.0 && std::isfinite(f.decay_scale), "decay scale B must be < 0");
  require(f.decay_shape > 1.0 && std::isfinite(f.decay_shape), "decay shape alpha must be > 1");
  require(f.basis_drift >= 0.0 && std::isfinite(f.basis_drift), "basis drift gamma0 must be >= 0");
}

double GammaSupOUParams::mean_inverse_decay() const noexcept {
  return 1.0 / (-f_.decay_scale * (f_.decay_shape - 1.0));
}

double GammaSupOUParams::jump_first_moment() const noexcept {
  return f_.jump_intensity / f_.jump_rate;
}

double GammaSupOUParams::jump_second_moment() const noexcept {
  return 2.0 * f_.jump_intensity / (f_.jump_rate * f_.jump_rate);
}

double GammaSupOUParams::stationary_variance_mean() const noexcept {
  return (f_.basis_drift + jump_first_moment()) * mean_inverse_decay();
}

GammaSupOUParams GammaSupOUParams::risk_neutral(double rate) const {
  Fields f = f_;
  f.variance_loading = -0.5;
  f.drift = martingale_drift(*this, rate) - f.basis_drift;
  return GammaSupOUParams(f);
}

MarketContext::MarketContext(double spot, double rate, double day_count)
    : spot_(spot), rate_(rate), day_count_(day_count) {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw DomainError("MarketContext: spot must be > 0");
  if (!std::isfinite(rate)) throw DomainError("MarketContext: rate must be finite");
  if (!(day_count > 0.0) || !std::isfinite(day_count)) {
    throw DomainError("MarketContext: day count must be > 0");
  }
}

double MarketContext::log_spot() const noexcept { return std::log(spot_); }

double MarketContext::discount(double maturity) const noexcept {
  return std::exp(-rate_ * maturity);
}

cplx cumulant_transform(cplx u, const GammaSupOUParams& p) {
  const double b = p.jump_rate();
  if (!(u.real() < b)) {
    throw DomainError("cumulant_transform: Re(u) must be below the jump rate b");
  }
  return p.basis_drift() * u + p.jump_intensity() * u / (b - u);
}

double martingale_drift(const GammaSupOUParams& p, double rate) {
  const double rho = p.leverage();
  const double b = p.jump_rate();
  if (!(rho < b)) {
    throw DomainError("martingale_drift: leverage must be below the jump rate b");
  }
  return rate - p.jump_intensity() * rho / (b - rho);
}

Strip strip_delta(const GammaSupOUParams& p, double maturity) {
  if (!(maturity > 0.0)) throw DomainError("strip_delta: maturity must be > 0");
  const double eps = p.jump_rate();
  const double lin = std::abs(p.variance_loading()) + std::abs(p.leverage()) / maturity;
  const double c = 2.0 * eps / maturity;
  // Rationalized root: avoids cancellation when the linear term dominates.
  const double delta = c / (lin + std::sqrt(lin * lin + c));
  return Strip{delta, eps, maturity};
}

std::vector<DecayNode> pi_quadrature(double alpha, double decay_scale, int n) {
  if (!(alpha > 1.0)) throw DomainError("pi_quadrature: alpha must be > 1");
  if (!(decay_scale < 0.0)) throw DomainError("pi_quadrature: B must be < 0");
  if (n < 2) throw DomainError("pi_quadrature: need at least 2 nodes");
  const GammaRule rule = gamma_rule(alpha, n);
  std::vector<DecayNode> out(rule.nodes.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = {decay_scale * rule.nodes[k], rule.weights[k]};
  }
  return out;
}

}  // namespace supou
