#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "supou/model.hpp"

namespace supou {

struct JumpEvent {
  double time;   // s, years; negative for the past
  double size;   // x > 0
  double decay;  // A < 0
};

// Realisation of the Levy basis on [window_start, window_end], events sorted
// by time.
struct JumpLedger {
  double window_start = 0.0;
  double window_end = 0.0;
  std::vector<JumpEvent> events;
};

// Independent stream for (seed, stream index); the same pair always yields
// the same sequence.
[[nodiscard]] std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t stream);

// 20 / (|B| (alpha - 1)): twenty mean lifetimes of the average decay rate.
[[nodiscard]] double default_past_window(const GammaSupOUParams& p);

[[nodiscard]] JumpLedger simulate_ledger(const GammaSupOUParams& p, double window_start,
                                         double window_end, std::mt19937_64& rng);
[[nodiscard]] JumpLedger simulate_ledger(const GammaSupOUParams& p, double window_start,
                                         double window_end, std::uint64_t seed);

// Sigma_t = gamma0 E[1/|A|] + sum_{s <= t} x e^{A (t - s)}. DomainError when
// t lies outside the window.
[[nodiscard]] double sigma_at(const JumpLedger& ledger, double t, const GammaSupOUParams& p);

// int_{t0}^{t1} Sigma_u du in closed form per event. t1 may be +infinity
// (no events after the window end are added).
[[nodiscard]] double integrated_variance(const JumpLedger& ledger, double t0, double t1,
                                         const GammaSupOUParams& p);

// Sum of jump sizes with t0 < s <= t1.
[[nodiscard]] double jump_sum(const JumpLedger& ledger, double t0, double t1);

// Variance delivered over [0, t] by the events with s <= 0.
[[nodiscard]] double z_from_ledger(const JumpLedger& ledger, double t);

// The basis-drift counterpart of z_from_ledger: gamma0 E[(1 - e^{At}) / A^2].
// The z argument of mgf() is z_from_ledger + z_drift_part.
[[nodiscard]] double z_drift_part(const GammaSupOUParams& p, double t);

enum class DriftKind {
  martingale,  // risk-neutral: beta = -1/2 and mu from the martingale condition
  physical,    // parameters used as given
};

struct PathConfig {
  std::size_t paths = 10000;
  double maturity = 1.0;
  double dt = 1.0 / 252.0;      // grid step for gridded diagnostics
  std::optional<double> past;   // T_past; default_past_window() when empty
  std::uint64_t seed = 0;
  DriftKind drift = DriftKind::martingale;
  bool antithetic = false;      // paths 2i, 2i+1 share jumps, opposite normals
  unsigned threads = 0;         // 0: SUPOU_THREADS or hardware concurrency
};

// What the paths are conditioned on:
//  - monostate: nothing; each path draws its own past on (-T_past, 0]
//  - double: a value of z_T (as passed to mgf)
//  - JumpLedger: a fixed past (events with s <= 0) shared by all paths
using Conditioning = std::variant<std::monostate, double, JumpLedger>;

// Samples of X_T, exact given the jumps: Gaussian with variance equal to the
// integrated variance. Sample i depends only on (seed, i).
[[nodiscard]] std::vector<double> simulate_XT(const GammaSupOUParams& p, const MarketContext& ctx,
                                              const Conditioning& cond, const PathConfig& cfg);

// Per path: integrated variance over [0, T] and Sigma_0, stationary start.
struct VarianceSample {
  double sigma0;
  double integrated;
};
[[nodiscard]] std::vector<VarianceSample> simulate_variance(const GammaSupOUParams& p,
                                                            const PathConfig& cfg);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Mean with standard error; pairwise summation. With `paired`, consecutive
// samples are averaged first (antithetic pairs).
[[nodiscard]] McEstimate mc_mean(std::span<const double> samples, bool paired = false);
[[nodiscard]] McEstimate mc_call_price(std::span<const double> log_prices, double strike,
                                       double maturity, const MarketContext& ctx,
                                       bool paired = false);
// Mean of e^{X_T - rT}; equals S0 under the martingale drift.
[[nodiscard]] McEstimate mc_discounted_spot(std::span<const double> log_prices, double maturity,
                                            const MarketContext& ctx, bool paired = false);

struct AcfConfig {
  std::size_t steps = 100000;  // returns on the grid k dt, k < steps
  double dt = 0.01;
  std::size_t max_lag = 100;
  std::optional<double> past;
  std::uint64_t seed = 0;
};

// Sample autocorrelation of squared grid returns at lags 1..max_lag from a
// single stationary path. Parameters are used as given (physical drift).
[[nodiscard]] std::vector<double> acf_squared_returns(const GammaSupOUParams& p,
                                                      const AcfConfig& cfg);

// Least-squares slope of log acf against log lag over [lag_lo, lag_hi],
// skipping non-positive entries. NaN when fewer than two points remain.
[[nodiscard]] double acf_loglog_slope(std::span<const double> acf, std::size_t lag_lo,
                                      std::size_t lag_hi);

// CSV dump: a window_start,window_end block followed by time,size,decay rows.
void write_ledger_csv(std::ostream& out, const JumpLedger& ledger);
[[nodiscard]] JumpLedger read_ledger_csv(std::istream& in);

}  // namespace supou
