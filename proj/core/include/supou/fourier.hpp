#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supou/model.hpp"

namespace supou {

struct PricingOptions {
  std::optional<double> damping;  // contour Re = R; auto-chosen when empty
  double tolerance = 1e-8;        // relative quadrature tolerance per price
  double u_max = 2000.0;          // truncation cap of the inversion integral
  double first_panel = 200.0;     // [0, first_panel] then doubling panels
};

struct FourierPrices {
  std::vector<double> prices;
  double damping = 0.0;
  int panels = 0;            // doubling panels integrated
  int intervals = 0;         // Gauss-Kronrod subintervals over all panels
  double upper_limit = 0.0;  // truncation point actually reached
  int decay_nodes = 0;       // decay-rate quadrature nodes used by the MGF
  bool converged = true;
  std::vector<std::string> warnings;
};

// K^{1+iu} / (iu (1 + iu)): transform of (e^x - K)^+ for Im(u) > 1.
[[nodiscard]] cplx call_payoff_transform(cplx u, double strike);
// Same expression; transform of (K - e^x)^+ for Im(u) < 0.
[[nodiscard]] cplx put_payoff_transform(cplx u, double strike);

// Midpoint of (1, delta). Throws InfeasibleError when delta <= 1 + 1e-6.
[[nodiscard]] double choose_damping(const Strip& strip);

// European calls by damped Fourier inversion along Re = R, 1 < R < delta(T).
// `p` must carry the martingale drift (see GammaSupOUParams::risk_neutral).
// All strikes share the MGF evaluations, so batches cost about one price.
[[nodiscard]] FourierPrices price_calls(const GammaSupOUParams& p, double z, double maturity,
                                        std::span<const double> strikes,
                                        const MarketContext& ctx,
                                        const PricingOptions& opts = {});

[[nodiscard]] double price_call(const GammaSupOUParams& p, double z, double maturity,
                                double strike, const MarketContext& ctx,
                                const PricingOptions& opts = {});

// European puts on the contour Re = R with -delta < R < 0 (default -delta/2).
[[nodiscard]] FourierPrices price_puts(const GammaSupOUParams& p, double z, double maturity,
                                       std::span<const double> strikes, const MarketContext& ctx,
                                       const PricingOptions& opts = {});

[[nodiscard]] double bs_price(double spot, double strike, double maturity, double rate,
                              double sigma);
[[nodiscard]] double bs_vega(double spot, double strike, double maturity, double rate,
                             double sigma);

// Inverts bs_price on sigma in [1e-6, 5]. Throws ArbitrageError for prices
// outside ((S0 - K e^{-rT})^+, S0) and DomainError when the root lies outside
// the bracket.
[[nodiscard]] double bs_implied_vol(double price, double spot, double strike, double maturity,
                                    double rate);

}  // namespace supou
