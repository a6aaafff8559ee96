#include "supou/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "supou/charfn.hpp"
#include "supou/errors.hpp"
#include "supou/quadrature.hpp"

namespace supou {

namespace {

constexpr double kMinZ = 1e-12;

void require_risk_neutral(const GammaSupOUParams& p, double rate) {
  const double target = martingale_drift(p, rate);
  const double have = p.drift() + p.basis_drift();
  if (std::abs(p.variance_loading() + 0.5) > 1e-12 ||
      std::abs(have - target) > 1e-10 * (1.0 + std::abs(target))) {
    throw DomainError(
        "Fourier pricing needs the martingale drift; build parameters with risk_neutral(r)");
  }
}

FourierPrices invert(const GammaSupOUParams& p, double z, double maturity,
                     std::span<const double> strikes, const MarketContext& ctx, double damping,
                     const PricingOptions& opts) {
  if (!(maturity > 0.0)) throw DomainError("price: maturity must be > 0");
  for (double k : strikes) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("price: strikes must be > 0");
  }
  FourierPrices out;
  out.damping = damping;
  out.prices.assign(strikes.size(), 0.0);
  if (strikes.empty()) return out;

  if (!(z >= 0.0)) throw DomainError("price: z must be >= 0");
  if (z < kMinZ) {
    out.warnings.push_back("z below 1e-12 raised to 1e-12; inversion integrand decays slowly");
    z = kMinZ;
  }

  const std::vector<cplx> probes = {cplx(damping, 0.0), cplx(damping, 3.0), cplx(damping, 15.0),
                                    cplx(damping, 60.0)};
  const MgfEvaluator phi(p, ctx.log_spot(), z, maturity, probes);
  out.decay_nodes = phi.node_count();

  std::vector<double> log_strike(strikes.size());
  for (std::size_t j = 0; j < strikes.size(); ++j) log_strike[j] = std::log(strikes[j]);

  // Re[Phi(R + iv) fhat(iR - v)]; the integrand at -v is its conjugate.
  auto integrand = [&](double v, std::span<double> values) {
    const cplx log_phi = phi.log_mgf(cplx(damping, v));
    const cplx exponent_k(1.0 - damping, -v);
    const cplx denom = cplx(-damping, -v) * exponent_k;
    for (std::size_t j = 0; j < log_strike.size(); ++j) {
      values[j] = (std::exp(log_phi + exponent_k * log_strike[j]) / denom).real();
    }
  };

  const double abs_floor = 1e-14 * ctx.spot();
  std::vector<double> total(strikes.size(), 0.0);
  double lo = 0.0;
  double hi = std::min(opts.first_panel, opts.u_max);
  for (;;) {
    const auto r = integrate_kronrod(integrand, strikes.size(), lo, hi, abs_floor,
                                     opts.tolerance, 4000);
    out.converged = out.converged && r.converged;
    out.intervals += r.intervals;
    ++out.panels;
    bool tail_small = true;
    for (std::size_t j = 0; j < total.size(); ++j) {
      total[j] += r.value[j];
      if (std::abs(r.value[j]) > std::max(abs_floor, opts.tolerance * std::abs(total[j]))) {
        tail_small = false;
      }
    }
    out.upper_limit = hi;
    if ((lo > 0.0 && tail_small) || hi >= opts.u_max) {
      if (!tail_small) {
        out.converged = false;
        out.warnings.push_back("inversion truncated at u_max with a non-negligible last panel");
      }
      break;
    }
    lo = hi;
    hi = std::min(2.0 * hi, opts.u_max);
  }
  if (!out.converged && out.warnings.empty()) {
    out.warnings.push_back("Gauss-Kronrod panels did not reach the requested tolerance");
  }

  const double scale = ctx.discount(maturity) / std::numbers::pi;
  for (std::size_t j = 0; j < total.size(); ++j) out.prices[j] = scale * total[j];
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

cplx call_payoff_transform(cplx u, double strike) {
  if (!(u.imag() > 1.0)) throw DomainError("call_payoff_transform: need Im(u) > 1");
  if (!(strike > 0.0)) throw DomainError("call_payoff_transform: strike must be > 0");
  const cplx iu(-u.imag(), u.real());
  return std::exp((1.0 + iu) * std::log(strike)) / (iu * (1.0 + iu));
}

cplx put_payoff_transform(cplx u, double strike) {
  if (!(u.imag() < 0.0)) throw DomainError("put_payoff_transform: need Im(u) < 0");
  if (!(strike > 0.0)) throw DomainError("put_payoff_transform: strike must be > 0");
  const cplx iu(-u.imag(), u.real());
  return std::exp((1.0 + iu) * std::log(strike)) / (iu * (1.0 + iu));
}

double choose_damping(const Strip& strip) {
  if (!(strip.delta > 1.0 + 1e-6)) {
    throw InfeasibleError(
        "delta <= 1: call damping impossible at this maturity; tighten parameters (larger b)");
  }
  return 1.0 + 0.5 * (strip.delta - 1.0);
}

FourierPrices price_calls(const GammaSupOUParams& p, double z, double maturity,
                          std::span<const double> strikes, const MarketContext& ctx,
                          const PricingOptions& opts) {
  require_risk_neutral(p, ctx.rate());
  const Strip strip = strip_delta(p, maturity);
  double damping;
  if (opts.damping) {
    damping = *opts.damping;
    if (!(damping > 1.0 && damping < strip.delta)) {
      throw DomainError("price_calls: damping must satisfy 1 < R < delta");
    }
  } else {
    damping = choose_damping(strip);
  }
  return invert(p, z, maturity, strikes, ctx, damping, opts);
}

double price_call(const GammaSupOUParams& p, double z, double maturity, double strike,
                  const MarketContext& ctx, const PricingOptions& opts) {
  const double k[1] = {strike};
  return price_calls(p, z, maturity, k, ctx, opts).prices[0];
}

FourierPrices price_puts(const GammaSupOUParams& p, double z, double maturity,
                         std::span<const double> strikes, const MarketContext& ctx,
                         const PricingOptions& opts) {
  require_risk_neutral(p, ctx.rate());
  const Strip strip = strip_delta(p, maturity);
  const double damping = opts.damping.value_or(-0.5 * strip.delta);
  if (!(damping < 0.0 && damping > -strip.delta)) {
    throw DomainError("price_puts: damping must satisfy -delta < R < 0");
  }
  return invert(p, z, maturity, strikes, ctx, damping, opts);
}

double bs_price(double spot, double strike, double maturity, double rate, double sigma) {
  const double df = std::exp(-rate * maturity);
  if (sigma <= 0.0 || maturity <= 0.0) return std::max(spot - strike * df, 0.0);
  const double sd = sigma * std::sqrt(maturity);
  const double d1 = (std::log(spot / strike) + rate * maturity) / sd + 0.5 * sd;
  const double d2 = d1 - sd;
  return spot * normal_cdf(d1) - strike * df * normal_cdf(d2);
}

double bs_vega(double spot, double strike, double maturity, double rate, double sigma) {
  const double sd = sigma * std::sqrt(maturity);
  const double d1 = (std::log(spot / strike) + rate * maturity) / sd + 0.5 * sd;
  return spot * std::sqrt(maturity) * std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * std::numbers::pi);
}

double bs_implied_vol(double price, double spot, double strike, double maturity, double rate) {
  const double intrinsic = std::max(spot - strike * std::exp(-rate * maturity), 0.0);
  if (!(price > intrinsic) || !(price < spot)) {
    throw ArbitrageError("bs_implied_vol: price outside the no-arbitrage band");
  }
  double lo = 1e-6;
  double hi = 5.0;
  if (price < bs_price(spot, strike, maturity, rate, lo) ||
      price > bs_price(spot, strike, maturity, rate, hi)) {
    throw DomainError("bs_implied_vol: implied volatility outside [1e-6, 5]");
  }
  // Safeguarded Newton: keep a bracket, fall back to bisection when the
  // derivative step leaves it.
  double sigma = std::clamp(std::sqrt(2.0 * std::abs(std::log(spot / strike) + rate * maturity) /
                                      maturity) +
                                0.1,
                            lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double diff = bs_price(spot, strike, maturity, rate, sigma) - price;
    if (diff > 0.0) {
      hi = sigma;
    } else {
      lo = sigma;
    }
    if (diff == 0.0 || hi - lo < 1e-15) break;
    const double vega = bs_vega(spot, strike, maturity, rate, sigma);
    double next = sigma - diff / vega;
    if (!(vega > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - sigma) < 1e-15 * std::max(1.0, sigma)) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  return sigma;
}

}  // namespace supou
