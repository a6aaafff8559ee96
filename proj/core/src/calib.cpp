#include "supou/calib.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "gsl_support.hpp"
#include "supou/errors.hpp"
#include "supou/io.hpp"
#include "supou/parallel.hpp"

namespace supou {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kStripTarget = 1.0 + 1e-3;   // delta(T_max) at the lower b bound
constexpr double kStripMinimum = 1.0 + 1e-6;  // pricing feasibility

std::string describe(const OptionQuote& q) {
  std::ostringstream os;
  if (q.row > 0) os << "line " << q.row << ": ";
  os << "quote (" << q.maturity_days << "d, K=" << format_double(q.strike) << ")";
  return os.str();
}

double logistic(double y) { return 1.0 / (1.0 + std::exp(-std::clamp(y, -30.0, 30.0))); }

double logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

// Smallest b with delta(T) = kStripTarget under beta = -1/2.
double jump_rate_floor(double rho, double T) {
  const double d = kStripTarget;
  return 0.5 * T * d * d + (0.5 * T + std::abs(rho)) * d;
}

// Box <-> unconstrained coordinates. Layout: rho, log a, log b, log|B|,
// alpha, [gamma0], z_1..z_M.
class Encoding {
 public:
  Encoding(const CalibConfig& cfg, std::size_t maturities, double max_maturity)
      : cfg_(cfg), m_(maturities), t_max_(max_maturity) {}

  [[nodiscard]] std::size_t structural() const { return cfg_.fit_basis_drift ? 6 : 5; }
  [[nodiscard]] std::size_t dim() const { return structural() + m_; }

  struct Point {
    GammaSupOUParams::Fields fields;
    std::vector<double> z;
  };

  [[nodiscard]] Point decode(std::span<const double> y) const {
    const auto& b = cfg_.bounds;
    Point pt;
    auto& f = pt.fields;
    f.leverage = linear(b.leverage, y[0]);
    f.jump_intensity = logarithmic(b.jump_intensity, y[1]);
    f.jump_rate = logarithmic(rate_bounds(f.leverage), y[2]);
    f.decay_scale = -logarithmic({-b.decay_scale.hi, -b.decay_scale.lo}, y[3]);
    f.decay_shape = linear(b.decay_shape, y[4]);
    f.basis_drift = cfg_.fit_basis_drift ? linear(b.basis_drift, y[5]) : 0.0;
    f.drift = 0.0;
    f.variance_loading = -0.5;
    pt.z.resize(m_);
    const std::size_t s = structural();
    for (std::size_t i = 0; i < m_; ++i) {
      if (cfg_.monotone_z && i > 0) {
        pt.z[i] = pt.z[i - 1] + (b.z.hi - pt.z[i - 1]) * logistic(y[s + i]);
      } else {
        pt.z[i] = linear(b.z, y[s + i]);
      }
    }
    return pt;
  }

  [[nodiscard]] std::vector<double> encode(const GammaSupOUParams::Fields& f,
                                           const std::vector<double>& z) const {
    const auto& b = cfg_.bounds;
    std::vector<double> y(dim());
    y[0] = inv_linear(b.leverage, f.leverage);
    y[1] = inv_logarithmic(b.jump_intensity, f.jump_intensity);
    y[2] = inv_logarithmic(rate_bounds(f.leverage), f.jump_rate);
    y[3] = inv_logarithmic({-b.decay_scale.hi, -b.decay_scale.lo}, -f.decay_scale);
    y[4] = inv_linear(b.decay_shape, f.decay_shape);
    if (cfg_.fit_basis_drift) y[5] = inv_linear(b.basis_drift, f.basis_drift);
    const std::size_t s = structural();
    for (std::size_t i = 0; i < m_; ++i) {
      if (cfg_.monotone_z && i > 0) {
        const double prev = std::min(z[i - 1], z[i]);
        y[s + i] = logit((z[i] - prev) / std::max(b.z.hi - prev, 1e-300));
      } else {
        y[s + i] = inv_linear(b.z, z[i]);
      }
    }
    return y;
  }

 private:
  [[nodiscard]] Interval rate_bounds(double rho) const {
    const auto& r = cfg_.bounds.jump_rate;
    const double lo = std::max(r.lo, jump_rate_floor(rho, t_max_));
    return {lo, std::max(r.hi, lo * (1.0 + 1e-9))};
  }
  static double linear(Interval iv, double y) { return iv.lo + (iv.hi - iv.lo) * logistic(y); }
  static double inv_linear(Interval iv, double x) { return logit((x - iv.lo) / (iv.hi - iv.lo)); }
  static double logarithmic(Interval iv, double y) {
    return std::exp(std::log(iv.lo) + (std::log(iv.hi) - std::log(iv.lo)) * logistic(y));
  }
  static double inv_logarithmic(Interval iv, double x) {
    return logit((std::log(x) - std::log(iv.lo)) / (std::log(iv.hi) - std::log(iv.lo)));
  }

  const CalibConfig& cfg_;
  std::size_t m_;
  double t_max_;
};

ZCurve make_curve(const OptionChain& chain, const std::vector<double>& z) {
  std::vector<ZKnot> knots;
  const auto slices = chain.slices();
  for (std::size_t i = 0; i < slices.size(); ++i) knots.push_back({slices[i].maturity, z[i]});
  return ZCurve(std::move(knots));
}

struct LocalResult {
  std::vector<double> y;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

struct Budgeted {
  const std::function<double(std::span<const double>)>* f = nullptr;
  int budget = 0;
  int used = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_y;
};

double gsl_objective(const gsl_vector* v, void* ctx) {
  auto* c = static_cast<Budgeted*>(ctx);
  if (c->used >= c->budget) return std::numeric_limits<double>::max();
  ++c->used;
  std::span<const double> y(v->data, v->size);
  const double value = (*c->f)(y);
  if (value < c->best) {
    c->best = value;
    c->best_y.assign(y.begin(), y.end());
  }
  return value;
}

// Nelder-Mead (GSL nmsimplex2) with restarts from the incumbent until the
// budget is spent or a restart no longer improves.
LocalResult simplex_search(const std::function<double(std::span<const double>)>& f,
                           std::vector<double> y0, int budget) {
  detail::silence_gsl();
  const std::size_t n = y0.size();
  Budgeted state;
  state.f = &f;
  state.budget = budget;
  state.best_y = y0;
  LocalResult out;

  using Minimizer = std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)>;
  using Vector = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  Minimizer s(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n),
              &gsl_multimin_fminimizer_free);
  Vector x(gsl_vector_alloc(n), &gsl_vector_free);
  Vector step(gsl_vector_alloc(n), &gsl_vector_free);
  if (!s || !x || !step) throw NumericalError("calibrate: simplex allocation failed");

  gsl_multimin_function fn{&gsl_objective, n, &state};
  double step_size = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  while (state.used + static_cast<int>(n) + 1 <= budget) {
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, state.best_y[i]);
    gsl_vector_set_all(step.get(), step_size);
    if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) break;
    bool settled = false;
    while (state.used < budget) {
      if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) {
        settled = true;
        break;
      }
      if (gsl_multimin_fminimizer_size(s.get()) < 1e-7) {
        settled = true;
        break;
      }
    }
    if (!settled) break;
    if (previous - state.best <= 1e-12 * (1.0 + std::abs(state.best))) {
      out.converged = true;
      break;
    }
    previous = state.best;
    step_size = 0.3;
  }
  out.y = state.best_y;
  out.value = state.best;
  out.evaluations = state.used;
  return out;
}

double atm_vol(const MaturitySlice& slice, const MarketContext& ctx) {
  const double forward = ctx.spot() * std::exp(ctx.rate() * slice.maturity);
  double best = 0.2;
  double distance = std::numeric_limits<double>::infinity();
  for (const auto& q : slice.quotes) {
    if (!std::isfinite(q.implied_vol)) continue;
    const double d = std::abs(std::log(q.strike / forward));
    if (d < distance) {
      distance = d;
      best = q.implied_vol;
    }
  }
  return best;
}

}  // namespace

OptionChain::OptionChain(const MarketContext& ctx, std::vector<RawQuote> quotes) : ctx_(ctx) {
  if (quotes.empty()) throw InputError("option chain is empty");
  std::map<int, std::vector<RawQuote>> by_days;
  for (const auto& q : quotes) {
    const std::string where =
        q.row > 0 ? "line " + std::to_string(q.row) + ": " : std::string("quote: ");
    if (q.maturity_days <= 0) throw InputError(where + "maturity_days must be > 0");
    if (!(q.strike > 0.0) || !std::isfinite(q.strike)) throw InputError(where + "strike must be > 0");
    if (q.mid_price.has_value() == q.implied_vol.has_value()) {
      throw InputError(where + "exactly one of mid_price and implied_vol must be given");
    }
    if (q.mid_price && (!(*q.mid_price > 0.0) || !std::isfinite(*q.mid_price))) {
      throw InputError(where + "mid_price must be > 0");
    }
    if (q.implied_vol && (!(*q.implied_vol > 0.0) || !std::isfinite(*q.implied_vol))) {
      throw InputError(where + "implied_vol must be > 0");
    }
    if (q.weight && (!(*q.weight >= 0.0) || !std::isfinite(*q.weight))) {
      throw InputError(where + "weight must be >= 0");
    }
    by_days[q.maturity_days].push_back(q);
  }
  const double m = static_cast<double>(by_days.size());
  for (auto& [days, raw] : by_days) {
    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawQuote& a, const RawQuote& b) { return a.strike < b.strike; });
    MaturitySlice slice;
    slice.days = days;
    slice.maturity = ctx.years(days);
    const double df = ctx.discount(slice.maturity);
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const auto& r = raw[k];
      if (k > 0 && r.strike == raw[k - 1].strike) {
        throw InputError((r.row > 0 ? "line " + std::to_string(r.row) + ": " : std::string()) +
                         "duplicate strike within maturity " + std::to_string(days));
      }
      OptionQuote q;
      q.maturity_days = days;
      q.strike = r.strike;
      q.row = r.row;
      q.weight = r.weight.value_or(1.0 / (m * static_cast<double>(raw.size())));
      const double lower = std::max(ctx.spot() - r.strike * df, 0.0);
      if (r.implied_vol) {
        q.implied_vol = *r.implied_vol;
        q.mid_price = bs_price(ctx.spot(), r.strike, slice.maturity, ctx.rate(), q.implied_vol);
      } else {
        q.mid_price = *r.mid_price;
      }
      if (!(q.mid_price > lower && q.mid_price < ctx.spot())) {
        q.flagged = true;
        q.implied_vol = kNaN;
        warnings_.push_back(describe(q) + ": price " + format_double(q.mid_price) +
                            " outside the no-arbitrage band (" + format_double(lower) + ", " +
                            format_double(ctx.spot()) + "); weight set to 0");
      } else if (r.mid_price) {
        try {
          q.implied_vol =
              bs_implied_vol(q.mid_price, ctx.spot(), r.strike, slice.maturity, ctx.rate());
        } catch (const std::domain_error& e) {
          q.flagged = true;
          q.implied_vol = kNaN;
          warnings_.push_back(describe(q) + ": " + e.what() + "; weight set to 0");
        }
      }
      if (q.flagged) q.weight = 0.0;
      slice.quotes.push_back(q);
    }
    slices_.push_back(std::move(slice));
  }
}

std::size_t OptionChain::quote_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : slices_) n += s.quotes.size();
  return n;
}

std::vector<double> OptionChain::maturities() const {
  std::vector<double> t;
  for (const auto& s : slices_) t.push_back(s.maturity);
  return t;
}

OptionChain OptionChain::scaled_weights(double factor) const {
  OptionChain c = *this;
  for (auto& s : c.slices_) {
    for (auto& q : s.quotes) q.weight *= factor;
  }
  return c;
}

OptionChain parse_chain(std::istream& in, const MarketContext& ctx) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("chain CSV: file is empty");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kChainHeader) {
    throw InputError(std::string("chain CSV line 1: header must be '") + kChainHeader + "'");
  }
  std::vector<RawQuote> raw;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    auto fail = [&](const std::string& what) -> void {
      throw InputError("chain CSV line " + std::to_string(row) + ": " + what);
    };
    if (f.size() != 5) fail("expected 5 fields, got " + std::to_string(f.size()));
    RawQuote q;
    q.row = row;
    try {
      const long long days = parse_integer(f[0]);
      if (days <= 0 || days > 100000) fail("maturity_days must be a positive integer");
      q.maturity_days = static_cast<int>(days);
      q.strike = parse_double(f[1]);
      if (!f[2].empty()) q.mid_price = parse_double(f[2]);
      if (!f[3].empty()) q.implied_vol = parse_double(f[3]);
      if (!f[4].empty()) q.weight = parse_double(f[4]);
    } catch (const InputError& e) {
      const std::string what = e.what();
      if (what.rfind("chain CSV", 0) == 0) throw;
      fail(what);
    }
    raw.push_back(q);
  }
  if (raw.empty()) throw InputError("chain CSV: option chain is empty (header only)");
  return OptionChain(ctx, std::move(raw));
}

OptionChain load_chain(const std::filesystem::path& path, const MarketContext& ctx) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open chain file " + path.string());
  return parse_chain(in, ctx);
}

double rmse_objective(const GammaSupOUParams& params, const ZCurve& z, const OptionChain& chain,
                      const PricingOptions& pricing) {
  const auto& ctx = chain.market();
  const auto slices = chain.slices();
  std::vector<double> zs;
  for (const auto& s : slices) {
    const auto v = z.at(s.maturity);
    if (!v) {
      throw InputError("rmse_objective: z-curve has no knot at " + std::to_string(s.days) + " days");
    }
    zs.push_back(*v);
  }

  if (params.leverage() >= params.jump_rate()) {
    return kPenalty + (params.leverage() - params.jump_rate()) + 1e-6;
  }
  const GammaSupOUParams p = params.risk_neutral(ctx.rate());
  const double delta = strip_delta(p, chain.max_maturity()).delta;
  if (!(delta > kStripMinimum)) return kPenalty + (kStripMinimum - delta);

  double sum = 0.0;
  double outside = 0.0;
  std::vector<double> strikes;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const auto& s = slices[i];
    strikes.clear();
    for (const auto& q : s.quotes) {
      if (q.weight > 0.0) strikes.push_back(q.strike);
    }
    if (strikes.empty()) continue;
    std::vector<double> prices;
    try {
      prices = price_calls(p, zs[i], s.maturity, strikes, ctx, pricing).prices;
    } catch (const std::exception&) {
      return kPenalty + 1.0;
    }
    const double df = ctx.discount(s.maturity);
    std::size_t j = 0;
    for (const auto& q : s.quotes) {
      if (!(q.weight > 0.0)) continue;
      const double price = prices[j++];
      const double lower = std::max(ctx.spot() - q.strike * df, 0.0);
      if (!(price > lower)) {
        outside += (lower - price) / ctx.spot() + 1e-12;
        continue;
      }
      if (!(price < ctx.spot())) {
        outside += (price - ctx.spot()) / ctx.spot() + 1e-12;
        continue;
      }
      double iv;
      try {
        iv = bs_implied_vol(price, ctx.spot(), q.strike, s.maturity, ctx.rate());
      } catch (const std::exception&) {
        outside += 1e-6;
        continue;
      }
      const double d = iv - q.implied_vol;
      sum += q.weight * d * d;
    }
  }
  if (outside > 0.0) return kPenalty + outside;
  return std::sqrt(sum);
}

std::vector<Residual> residual_table(const GammaSupOUParams& params, const ZCurve& z,
                                     const OptionChain& chain, const PricingOptions& pricing) {
  const auto& ctx = chain.market();
  const GammaSupOUParams p = params.risk_neutral(ctx.rate());
  std::vector<Residual> out;
  for (const auto& s : chain.slices()) {
    const auto zv = z.at(s.maturity);
    if (!zv) throw InputError("residual_table: z-curve has no knot at " + std::to_string(s.days) + " days");
    std::vector<double> strikes;
    for (const auto& q : s.quotes) strikes.push_back(q.strike);
    const auto prices = price_calls(p, *zv, s.maturity, strikes, ctx, pricing).prices;
    for (std::size_t j = 0; j < s.quotes.size(); ++j) {
      const auto& q = s.quotes[j];
      Residual r{q.maturity_days, q.strike, q.weight, q.mid_price, prices[j], q.implied_vol, kNaN};
      try {
        r.model_iv = bs_implied_vol(prices[j], ctx.spot(), q.strike, s.maturity, ctx.rate());
      } catch (const std::exception&) {
        // left as NaN
      }
      out.push_back(r);
    }
  }
  return out;
}

CalibResult calibrate(const OptionChain& chain, const CalibConfig& config) {
  if (config.multistart < 1) throw InputError("calibrate: multistart must be >= 1");
  if (config.budget < 0) throw InputError("calibrate: budget must be >= 0");
  const auto slices = chain.slices();
  const auto& ctx = chain.market();
  const Encoding enc(config, slices.size(), chain.max_maturity());
  const std::size_t dim = enc.dim();
  const std::size_t ns = enc.structural();

  auto objective = [&](std::span<const double> y) {
    const auto pt = enc.decode(y);
    return rmse_objective(GammaSupOUParams(pt.fields), make_curve(chain, pt.z), chain,
                          config.pricing);
  };
  const std::function<double(std::span<const double>)> fn = objective;

  // Latin-hypercube starts in the unconstrained coordinates; z starts from
  // the at-the-money total variance with a stratified jitter.
  const auto starts = static_cast<std::size_t>(config.multistart);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> y0(starts, std::vector<double>(dim));
  std::vector<std::size_t> perm(starts);
  for (std::size_t d = 0; d <= ns; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < starts; ++k) {
      const double u = (static_cast<double>(perm[k]) + unit(rng)) / static_cast<double>(starts);
      if (d < ns) {
        y0[k][d] = -2.5 + 5.0 * u;
      } else {
        const auto pt = enc.decode(y0[k]);
        std::vector<double> z(slices.size());
        for (std::size_t i = 0; i < slices.size(); ++i) {
          const double vol = atm_vol(slices[i], ctx);
          z[i] = std::min(vol * vol * slices[i].maturity * (0.6 + 0.8 * u), 0.5 * config.bounds.z.hi);
          if (config.monotone_z && i > 0) z[i] = std::max(z[i], z[i - 1]);
        }
        const auto enc_y = enc.encode(pt.fields, z);
        std::copy(enc_y.begin() + static_cast<std::ptrdiff_t>(ns), enc_y.end(),
                  y0[k].begin() + static_cast<std::ptrdiff_t>(ns));
      }
    }
  }
  if (config.initial) {
    std::vector<double> z = config.initial_z.value_or(std::vector<double>{});
    if (z.size() != slices.size()) {
      z.resize(slices.size());
      for (std::size_t i = 0; i < slices.size(); ++i) {
        const double vol = atm_vol(slices[i], ctx);
        z[i] = vol * vol * slices[i].maturity;
      }
    }
    auto f = config.initial->fields();
    if (!config.fit_basis_drift) f.basis_drift = 0.0;
    y0[0] = enc.encode(f, z);
  }

  std::vector<LocalResult> runs(starts);
  if (config.budget == 0) {
    runs[0].y = y0[0];
    runs[0].value = objective(y0[0]);
    runs.resize(1);
  } else {
    parallel_for(starts, resolve_threads(config.threads),
                 [&](std::size_t k) { runs[k] = simplex_search(fn, y0[k], config.budget); });
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    if (runs[k].value < runs[best].value) best = k;
  }
  std::vector<double> values;
  int evaluations = 0;
  for (const auto& r : runs) {
    values.push_back(r.value);
    evaluations += r.evaluations;
  }
  if (!(runs[best].value < kPenalty)) {
    std::ostringstream os;
    os << "calibrate: every start ended in the infeasible region; objective per start:";
    for (double v : values) os << ' ' << format_double(v);
    throw InfeasibleError(os.str());
  }

  const auto pt = enc.decode(runs[best].y);
  const GammaSupOUParams fitted = GammaSupOUParams(pt.fields).risk_neutral(ctx.rate());
  ZCurve curve = make_curve(chain, pt.z);
  CalibResult out{.params = fitted, .z = curve};
  out.rmse = rmse_objective(fitted, curve, chain, config.pricing);
  out.evaluations = evaluations;
  out.converged = config.budget > 0 && runs[best].converged;
  out.best_start = static_cast<int>(best);
  out.start_rmse = std::move(values);
  out.residuals = residual_table(fitted, curve, chain, config.pricing);
  out.warnings = chain.warnings();
  if (!out.converged && config.budget > 0) {
    out.warnings.push_back("evaluation budget exhausted before the simplex settled");
  }
  return out;
}

}  // namespace supou
