#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supou/charfn.hpp"
#include "supou/fourier.hpp"
#include "supou/model.hpp"

namespace supou {

struct OptionQuote {
  int maturity_days = 0;
  double strike = 0.0;
  double mid_price = 0.0;    // filled from implied_vol when only the vol was quoted
  double implied_vol = 0.0;  // NaN when the price lies outside the no-arbitrage band
  double weight = 0.0;
  bool flagged = false;      // violated a static bound; weight forced to 0
  int row = 0;               // source line, 0 when built in code
};

struct MaturitySlice {
  int days = 0;
  double maturity = 0.0;  // years
  std::vector<OptionQuote> quotes;  // strictly increasing strikes
};

// Quote input before preprocessing: exactly one of price / vol, weight
// optional (default 1 / (M N_m)).
struct RawQuote {
  int maturity_days = 0;
  double strike = 0.0;
  std::optional<double> mid_price;
  std::optional<double> implied_vol;
  std::optional<double> weight;
  int row = 0;
};

class OptionChain {
 public:
  // Validates, groups by maturity, fills missing prices or vols, and zeroes
  // the weight of quotes outside ((S0 - K e^{-rT})^+, S0) with a warning.
  // Throws InputError for an empty chain, bad fields or duplicate strikes.
  OptionChain(const MarketContext& ctx, std::vector<RawQuote> quotes);

  [[nodiscard]] const MarketContext& market() const noexcept { return ctx_; }
  [[nodiscard]] std::span<const MaturitySlice> slices() const noexcept { return slices_; }
  [[nodiscard]] std::size_t quote_count() const noexcept;
  [[nodiscard]] double max_maturity() const noexcept { return slices_.back().maturity; }
  [[nodiscard]] std::vector<double> maturities() const;
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  // Same quotes with every weight multiplied by `factor`.
  [[nodiscard]] OptionChain scaled_weights(double factor) const;

 private:
  OptionChain() = default;
  MarketContext ctx_{1.0, 0.0};
  std::vector<MaturitySlice> slices_;
  std::vector<std::string> warnings_;
};

inline constexpr const char* kChainHeader = "maturity_days,strike,mid_price,implied_vol,weight";

// CSV with header kChainHeader. Parse errors carry the line number.
[[nodiscard]] OptionChain load_chain(const std::filesystem::path& path, const MarketContext& ctx);
[[nodiscard]] OptionChain parse_chain(std::istream& in, const MarketContext& ctx);

inline constexpr double kPenalty = 1e3;

// sqrt(sum w (IV_model - IV_market)^2) over quotes with w > 0. The curve must
// have a knot at every chain maturity. Infeasible parameters (delta(T_max) <=
// 1 + 1e-6, rho >= b, model prices outside the band) give kPenalty plus a
// distance to feasibility instead of throwing.
[[nodiscard]] double rmse_objective(const GammaSupOUParams& params, const ZCurve& z,
                                    const OptionChain& chain, const PricingOptions& pricing = {});

struct Interval {
  double lo;
  double hi;
};

struct CalibBounds {
  Interval leverage{-50.0, 5.0};
  Interval jump_intensity{1e-6, 10.0};
  Interval jump_rate{2.0, 500.0};
  Interval decay_scale{-1.0, -1e-6};
  Interval decay_shape{1.0, 20.0};
  Interval basis_drift{0.0, 1.0};
  Interval z{0.0, 1.0};
};

struct CalibConfig {
  CalibBounds bounds;
  int multistart = 8;
  int budget = 2000;  // objective evaluations per start
  bool monotone_z = false;
  bool fit_basis_drift = false;  // gamma0 = 0 unless fitted
  std::uint64_t seed = 0;
  unsigned threads = 0;
  // Replaces the first start when set.
  std::optional<GammaSupOUParams> initial;
  std::optional<std::vector<double>> initial_z;
  PricingOptions pricing;
};

struct Residual {
  int maturity_days = 0;
  double strike = 0.0;
  double weight = 0.0;
  double market_price = 0.0;
  double model_price = 0.0;
  double market_iv = 0.0;
  double model_iv = 0.0;  // NaN when the model price has no implied vol
};

struct CalibResult {
  GammaSupOUParams params;  // risk-neutral: beta = -1/2, martingale drift
  ZCurve z;
  double rmse = 0.0;
  int evaluations = 0;
  bool converged = false;
  int best_start = 0;
  std::vector<double> start_rmse{};
  std::vector<Residual> residuals{};
  std::vector<std::string> warnings{};
};

// Multistart derivative-free simplex search in a logistic reparameterisation
// of the box. Throws InfeasibleError when every start ends in the penalty
// region.
[[nodiscard]] CalibResult calibrate(const OptionChain& chain, const CalibConfig& config = {});

// Model-vs-market table for given parameters.
[[nodiscard]] std::vector<Residual> residual_table(const GammaSupOUParams& params, const ZCurve& z,
                                                   const OptionChain& chain,
                                                   const PricingOptions& pricing = {});

}  // namespace supou
