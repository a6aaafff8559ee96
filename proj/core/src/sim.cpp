#include "supou/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "supou/charfn.hpp"
#include "supou/errors.hpp"
#include "supou/io.hpp"
#include "supou/parallel.hpp"
#include "supou/quadrature.hpp"
#include "supou/zpred.hpp"

namespace supou {

namespace {

// Draws one event uniformly on (lo, hi]: time, size, decay in that order.
struct EventSampler {
  std::uniform_real_distribution<double> time;
  std::exponential_distribution<double> size;
  std::gamma_distribution<double> gamma;
  double scale;

  EventSampler(const GammaSupOUParams& p, double lo, double hi)
      : time(lo, hi), size(p.jump_rate()), gamma(p.decay_shape(), 1.0), scale(p.decay_scale()) {}

  JumpEvent operator()(std::mt19937_64& rng) {
    const double s = time(rng);
    const double x = size(rng);
    const double a = scale * gamma(rng);
    return {s, x, a};
  }
};

// Walks a rate-a Poisson process backwards from `end`, so extending the window
// into the past keeps every event already drawn.
class BackwardEvents {
 public:
  BackwardEvents(const GammaSupOUParams& p, double end)
      : gap_(p.jump_intensity()), size_(p.jump_rate()), gamma_(p.decay_shape(), 1.0),
        scale_(p.decay_scale()), time_(end) {}

  // Next older event. Its time may fall before the caller's window start.
  JumpEvent operator()(std::mt19937_64& rng) {
    time_ -= gap_(rng);
    const double x = size_(rng);
    const double a = scale_ * gamma_(rng);
    return {time_, x, a};
  }

 private:
  std::exponential_distribution<double> gap_;
  std::exponential_distribution<double> size_;
  std::gamma_distribution<double> gamma_;
  double scale_;
  double time_;
};

std::size_t poisson_count(double mean, std::mt19937_64& rng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<long long> count(mean);
  return static_cast<std::size_t>(count(rng));
}

// x * int_{from}^{to} e^{A (u - s)} du for s <= from <= to.
double event_variance(const JumpEvent& e, double from, double to) {
  const double lead = std::exp(e.decay * (from - e.time));
  if (std::isinf(to)) return e.size * lead / -e.decay;
  return e.size * lead * (std::expm1(e.decay * (to - from)) / e.decay);
}

GammaSupOUParams path_params(const GammaSupOUParams& p, const MarketContext& ctx,
                             DriftKind kind) {
  return kind == DriftKind::martingale ? p.risk_neutral(ctx.rate()) : p;
}

double resolve_past(const GammaSupOUParams& p, const std::optional<double>& past) {
  const double v = past.value_or(default_past_window(p));
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("simulation: T_past must be >= 0");
  return v;
}

void check_config(const PathConfig& cfg) {
  if (cfg.paths == 0) throw DomainError("simulation: number of paths must be > 0");
  if (!(cfg.maturity > 0.0) || !std::isfinite(cfg.maturity)) {
    throw DomainError("simulation: maturity must be > 0");
  }
  if (!(cfg.dt > 0.0)) throw DomainError("simulation: grid step must be > 0");
  if (cfg.antithetic && cfg.paths % 2 != 0) {
    throw DomainError("simulation: antithetic sampling needs an even path count");
  }
}

McEstimate mean_and_error(std::span<const double> v) {
  const auto n = static_cast<double>(v.size());
  McEstimate out;
  if (v.empty()) return out;
  out.value = pairwise_sum(v) / n;
  if (v.size() < 2) return out;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - out.value) * (v[i] - out.value);
  out.std_error = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  return out;
}

}  // namespace

std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5u};
  return std::mt19937_64(seq);
}

double default_past_window(const GammaSupOUParams& p) {
  return 20.0 / (std::abs(p.decay_scale()) * (p.decay_shape() - 1.0));
}

JumpLedger simulate_ledger(const GammaSupOUParams& p, double window_start, double window_end,
                           std::mt19937_64& rng) {
  if (!(window_end >= window_start) || !std::isfinite(window_start) ||
      !std::isfinite(window_end)) {
    throw DomainError("simulate_ledger: window must be a finite interval");
  }
  JumpLedger ledger;
  ledger.window_start = window_start;
  ledger.window_end = window_end;
  const std::size_t n = poisson_count(p.jump_intensity() * (window_end - window_start), rng);
  if (n == 0) return ledger;
  EventSampler draw(p, window_start, window_end);
  ledger.events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ledger.events.push_back(draw(rng));
  std::stable_sort(ledger.events.begin(), ledger.events.end(),
                   [](const JumpEvent& l, const JumpEvent& r) { return l.time < r.time; });
  return ledger;
}

JumpLedger simulate_ledger(const GammaSupOUParams& p, double window_start, double window_end,
                           std::uint64_t seed) {
  auto rng = path_engine(seed, 0);
  return simulate_ledger(p, window_start, window_end, rng);
}

double sigma_at(const JumpLedger& ledger, double t, const GammaSupOUParams& p) {
  if (!(t >= ledger.window_start && t <= ledger.window_end)) {
    throw DomainError("sigma_at: t outside the ledger window");
  }
  double sigma = p.basis_drift() > 0.0 ? p.basis_drift() * p.mean_inverse_decay() : 0.0;
  for (const auto& e : ledger.events) {
    if (e.time > t) break;
    sigma += e.size * std::exp(e.decay * (t - e.time));
  }
  return sigma;
}

double integrated_variance(const JumpLedger& ledger, double t0, double t1,
                           const GammaSupOUParams& p) {
  if (!(t0 >= ledger.window_start) || !(t1 >= t0) ||
      (std::isfinite(t1) && t1 > ledger.window_end)) {
    throw DomainError("integrated_variance: [t0, t1] outside the ledger window");
  }
  double iv = p.basis_drift() > 0.0 ? p.basis_drift() * p.mean_inverse_decay() * (t1 - t0) : 0.0;
  for (const auto& e : ledger.events) {
    if (e.time >= t1) break;
    iv += event_variance(e, std::max(e.time, t0), t1);
  }
  return iv;
}

double jump_sum(const JumpLedger& ledger, double t0, double t1) {
  double total = 0.0;
  for (const auto& e : ledger.events) {
    if (e.time > t0 && e.time <= t1) total += e.size;
  }
  return total;
}

double z_from_ledger(const JumpLedger& ledger, double t) {
  if (!(t >= 0.0)) throw DomainError("z_from_ledger: t must be >= 0");
  double z = 0.0;
  for (const auto& e : ledger.events) {
    if (e.time > 0.0) break;
    z += e.size * std::exp(-e.decay * e.time) * (std::expm1(e.decay * t) / e.decay);
  }
  return z;
}

double z_drift_part(const GammaSupOUParams& p, double t) {
  if (p.basis_drift() == 0.0) return 0.0;
  return p.basis_drift() * ZCovKernel(p).past_moment(t);
}

std::vector<double> simulate_XT(const GammaSupOUParams& params, const MarketContext& ctx,
                                const Conditioning& cond, const PathConfig& cfg) {
  check_config(cfg);
  const GammaSupOUParams p = path_params(params, ctx, cfg.drift);
  const double T = cfg.maturity;
  const double gamma0 = p.basis_drift();
  const double linear = ctx.log_spot() + (p.drift() + gamma0) * T;
  const double beta = p.variance_loading();
  const double rho = p.leverage();

  // Variance common to every path, and the window of per-path events.
  double base_iv = 0.0;
  double lo = 0.0;
  if (std::holds_alternative<std::monostate>(cond)) {
    lo = -resolve_past(p, cfg.past);
    base_iv = gamma0 * p.mean_inverse_decay() * T;
  } else if (const double* z = std::get_if<double>(&cond)) {
    if (!(*z >= 0.0)) throw DomainError("simulate_XT: z must be >= 0");
    base_iv = *z + (gamma0 > 0.0 ? gamma0 * drift_integrated_variance(p, T) : 0.0);
  } else {
    const auto& past = std::get<JumpLedger>(cond);
    base_iv = gamma0 * p.mean_inverse_decay() * T;
    for (const auto& e : past.events) {
      if (e.time > 0.0) break;
      base_iv += event_variance(e, 0.0, T);
    }
  }

  std::vector<double> out(cfg.paths);
  parallel_for(cfg.paths, resolve_threads(cfg.threads), [&](std::size_t i) {
    const std::size_t stream = cfg.antithetic ? i / 2 : i;
    auto rng = path_engine(cfg.seed, stream);
    // The normal comes first so the jump draws stay aligned when T_past changes.
    std::normal_distribution<double> normal;
    double zn = normal(rng);
    if (cfg.antithetic && i % 2 == 1) zn = -zn;
    BackwardEvents draw(p, T);
    double iv = base_iv;
    double jumps = 0.0;
    for (JumpEvent e = draw(rng); e.time > lo; e = draw(rng)) {
      if (e.time <= 0.0) {
        iv += event_variance(e, 0.0, T);
      } else {
        iv += event_variance(e, e.time, T);
        jumps += e.size;
      }
    }
    out[i] = linear + beta * iv + rho * jumps + std::sqrt(iv) * zn;
  });
  return out;
}

std::vector<VarianceSample> simulate_variance(const GammaSupOUParams& p, const PathConfig& cfg) {
  check_config(cfg);
  const double T = cfg.maturity;
  const double lo = -resolve_past(p, cfg.past);
  const double drift_level = p.basis_drift() * p.mean_inverse_decay();
  std::vector<VarianceSample> out(cfg.paths);
  parallel_for(cfg.paths, resolve_threads(cfg.threads), [&](std::size_t i) {
    auto rng = path_engine(cfg.seed, i);
    BackwardEvents draw(p, T);
    VarianceSample v{drift_level, drift_level * T};
    for (JumpEvent e = draw(rng); e.time > lo; e = draw(rng)) {
      if (e.time <= 0.0) {
        v.sigma0 += e.size * std::exp(-e.decay * e.time);
        v.integrated += event_variance(e, 0.0, T);
      } else {
        v.integrated += event_variance(e, e.time, T);
      }
    }
    out[i] = v;
  });
  return out;
}

McEstimate mc_mean(std::span<const double> samples, bool paired) {
  if (!paired) return mean_and_error(samples);
  if (samples.size() % 2 != 0) throw DomainError("mc_mean: paired samples need an even count");
  std::vector<double> pairs(samples.size() / 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i] = 0.5 * (samples[2 * i] + samples[2 * i + 1]);
  }
  return mean_and_error(pairs);
}

McEstimate mc_call_price(std::span<const double> log_prices, double strike, double maturity,
                         const MarketContext& ctx, bool paired) {
  const double df = ctx.discount(maturity);
  std::vector<double> payoff(log_prices.size());
  for (std::size_t i = 0; i < payoff.size(); ++i) {
    payoff[i] = df * std::max(std::exp(log_prices[i]) - strike, 0.0);
  }
  return mc_mean(payoff, paired);
}

McEstimate mc_discounted_spot(std::span<const double> log_prices, double maturity,
                              const MarketContext& ctx, bool paired) {
  const double shift = ctx.rate() * maturity;
  std::vector<double> v(log_prices.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_prices[i] - shift);
  return mc_mean(v, paired);
}

std::vector<double> acf_squared_returns(const GammaSupOUParams& p, const AcfConfig& cfg) {
  if (cfg.max_lag == 0) return {};
  if (!(cfg.dt > 0.0)) throw DomainError("acf_squared_returns: grid step must be > 0");
  if (cfg.steps <= 2 * cfg.max_lag) {
    throw DomainError("acf_squared_returns: need more than 2 * max_lag grid steps");
  }
  const std::size_t n = cfg.steps;
  const double dt = cfg.dt;
  const double horizon = static_cast<double>(n) * dt;
  auto rng = path_engine(cfg.seed, 0);
  const JumpLedger ledger = simulate_ledger(p, -resolve_past(p, cfg.past), horizon, rng);

  std::vector<double> iv(n, p.basis_drift() * p.mean_inverse_decay() * dt);
  std::vector<double> jumps(n, 0.0);
  const double negligible = 1e-16 * p.stationary_variance_mean() * dt;
  for (const auto& e : ledger.events) {
    std::size_t k = 0;
    double from = 0.0;
    if (e.time > 0.0) {
      k = std::min(static_cast<std::size_t>(e.time / dt), n - 1);
      const double end = static_cast<double>(k + 1) * dt;
      iv[k] += event_variance(e, e.time, end);
      jumps[k] += e.size;
      from = end;
      ++k;
    }
    // Full steps decay geometrically by e^{A dt}.
    const double ratio = std::exp(e.decay * dt);
    double term = e.size * std::exp(e.decay * (from - e.time)) * (std::expm1(e.decay * dt) / e.decay);
    for (; k < n && term > negligible; ++k) {
      iv[k] += term;
      term *= ratio;
    }
  }

  const double drift = (p.drift() + p.basis_drift()) * dt;
  std::normal_distribution<double> normal;
  std::vector<double> sq(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = drift + p.variance_loading() * iv[k] + p.leverage() * jumps[k] +
                     std::sqrt(iv[k]) * normal(rng);
    sq[k] = r * r;
  }
  const double mean = pairwise_sum(sq) / static_cast<double>(n);
  for (double& v : sq) v -= mean;
  auto autocov = [&](std::size_t h) {
    double s = 0.0;
    for (std::size_t k = 0; k + h < n; ++k) s += sq[k] * sq[k + h];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  std::vector<double> acf(cfg.max_lag);
  for (std::size_t h = 1; h <= cfg.max_lag; ++h) acf[h - 1] = c0 > 0.0 ? autocov(h) / c0 : 0.0;
  return acf;
}

double acf_loglog_slope(std::span<const double> acf, std::size_t lag_lo, std::size_t lag_hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t h = std::max<std::size_t>(lag_lo, 1); h <= lag_hi && h <= acf.size(); ++h) {
    const double v = acf[h - 1];
    if (!(v > 0.0)) continue;
    const double x = std::log(static_cast<double>(h));
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void write_ledger_csv(std::ostream& out, const JumpLedger& ledger) {
  out << "window_start,window_end\n"
      << format_double(ledger.window_start) << ',' << format_double(ledger.window_end) << '\n'
      << "time,size,decay\n";
  for (const auto& e : ledger.events) {
    out << format_double(e.time) << ',' << format_double(e.size) << ','
        << format_double(e.decay) << '\n';
  }
}

JumpLedger read_ledger_csv(std::istream& in) {
  std::string line;
  int row = 0;
  auto next = [&](bool required) {
    if (std::getline(in, line)) {
      ++row;
      return true;
    }
    if (required) throw InputError("ledger CSV: unexpected end of file");
    return false;
  };
  auto fail = [&](const std::string& what) {
    throw InputError("ledger CSV line " + std::to_string(row) + ": " + what);
  };
  next(true);
  if (line != "window_start,window_end") fail("expected header window_start,window_end");
  next(true);
  auto w = split_csv(line);
  if (w.size() != 2) fail("expected two fields");
  JumpLedger ledger;
  try {
    ledger.window_start = parse_double(w[0]);
    ledger.window_end = parse_double(w[1]);
  } catch (const InputError& e) {
    fail(e.what());
  }
  next(true);
  if (line != "time,size,decay") fail("expected header time,size,decay");
  while (next(false)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 3) fail("expected three fields");
    JumpEvent e{};
    try {
      e = {parse_double(f[0]), parse_double(f[1]), parse_double(f[2])};
    } catch (const InputError& err) {
      fail(err.what());
    }
    if (!(e.size > 0.0) || !(e.decay < 0.0)) fail("need size > 0 and decay < 0");
    if (e.time < ledger.window_start || e.time > ledger.window_end) fail("time outside window");
    if (!ledger.events.empty() && e.time < ledger.events.back().time) fail("times not sorted");
    ledger.events.push_back(e);
  }
  return ledger;
}

}  // namespace supou
