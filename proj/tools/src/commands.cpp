#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "run_config.hpp"
#include "supou/calib.hpp"
#include "supou/errors.hpp"
#include "supou/fourier.hpp"
#include "supou/io.hpp"
#include "supou/sim.hpp"
#include "supou/zpred.hpp"

namespace supou::cli {

namespace {

using nlohmann::json;

// Requested maturity has no z value under the chosen resolution mode.
class NotCalibrated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ZMode { knot, blp, interp };

const std::map<std::string, ZMode> kZModes{
    {"knot", ZMode::knot}, {"blp", ZMode::blp}, {"interp", ZMode::interp}};

struct ResolvedZ {
  double value = 0.0;
  std::string source;
  std::vector<std::string> warnings;
};

ResolvedZ resolve_z(const RunConfig& cfg, double days, ZMode mode) {
  const ZCurve curve = cfg.curve();
  const double t = cfg.market.years(days);
  if (const auto z = curve.at(t)) return {*z, "knot", {}};
  switch (mode) {
    case ZMode::knot:
      throw NotCalibrated("maturity not calibrated: no z knot at " + format_double(days) +
                          " days (use --z-mode blp or interp)");
    case ZMode::blp: {
      if (curve.empty()) throw NotCalibrated("maturity not calibrated: the z-curve is empty");
      const ZCovKernel kernel(cfg.require_params());
      auto pred = blp_z_detail(t, curve, kernel, cfg.require_params().basis_drift());
      return {pred.value, "blp", std::move(pred.warnings)};
    }
    case ZMode::interp: {
      if (curve.size() < 2) {
        throw NotCalibrated("maturity not calibrated: interpolation needs at least 2 knots");
      }
      auto r = interpolate_z_detail(t, curve);
      return {r.value, "interp", std::move(r.warnings)};
    }
  }
  return {};
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

double implied_vol_or_nan(double price, const MarketContext& m, double strike, double T) {
  try {
    return bs_implied_vol(price, m.spot(), strike, T, m.rate());
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void warn(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// Writes to `path`, or to `fallback` when the path is empty.
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot open output file " + path);
  write(file);
  file.flush();
  if (!file) throw InputError("failed writing " + path);
}

json estimate_json(const McEstimate& e) { return json{{"value", e.value}, {"stdError", e.std_error}}; }

struct Common {
  std::string config;
  std::string z_mode = "knot";
};

void add_config(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration JSON")->required();
}

void add_z_mode(CLI::App* cmd, Common& c) {
  cmd->add_option("--z-mode", c.z_mode, "z at off-knot maturities: knot, blp or interp")
      ->check(CLI::IsMember({"knot", "blp", "interp"}));
}

// ---- price

struct PriceArgs {
  Common common;
  double maturity_days = 0.0;
  std::vector<double> strikes;
  std::string csv;
};

void cmd_price(const PriceArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.common.config);
  const auto rn = cfg.require_params().risk_neutral(cfg.market.rate());
  const auto z = resolve_z(cfg, a.maturity_days, kZModes.at(a.common.z_mode));
  warn(err, z.warnings);
  const double T = cfg.market.years(a.maturity_days);
  const auto res = price_calls(rn, z.value, T, a.strikes, cfg.market, cfg.pricing);
  warn(err, res.warnings);
  std::ostringstream table;
  table << "maturity_days,strike,z,z_source,price,implied_vol,damping,panels\n";
  for (std::size_t i = 0; i < a.strikes.size(); ++i) {
    table << format_double(a.maturity_days) << ',' << format_double(a.strikes[i]) << ','
          << format_double(z.value) << ',' << z.source << ',' << format_double(res.prices[i])
          << ',' << csv_number(implied_vol_or_nan(res.prices[i], cfg.market, a.strikes[i], T))
          << ',' << format_double(res.damping) << ',' << res.panels << '\n';
  }
  out << table.str();
  if (!a.csv.empty()) emit(a.csv, out, [&](std::ostream& o) { o << table.str(); });
}

// ---- calibrate

struct CalibrateArgs {
  std::string chain;
  std::string config;
  std::string result = "result.json";
  std::string residuals = "residuals.csv";
  std::optional<int> budget;
  std::optional<int> multistart;
  std::optional<std::uint64_t> seed;
  bool monotone_z = false;
  bool fit_basis_drift = false;
};

void cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.config);
  const OptionChain chain = load_chain(a.chain, cfg.market);
  warn(err, chain.warnings());

  CalibConfig cc = cfg.calibration;
  if (a.budget) cc.budget = *a.budget;
  if (a.multistart) cc.multistart = *a.multistart;
  if (a.seed) cc.seed = *a.seed;
  if (a.monotone_z) cc.monotone_z = true;
  if (a.fit_basis_drift) cc.fit_basis_drift = true;
  if (cc.budget < 0) throw InputError("--budget must be >= 0");
  if (cc.multistart < 1) throw InputError("--multistart must be >= 1");
  if (cfg.params) {
    cc.initial = *cfg.params;
    const ZCurve curve = cfg.curve();
    std::vector<double> z;
    for (const double t : chain.maturities()) {
      if (const auto v = curve.at(t)) z.push_back(*v);
    }
    if (z.size() == chain.slices().size()) cc.initial_z = z;
  }

  const CalibResult r = calibrate(chain, cc);
  const auto extra = std::vector<std::string>(r.warnings.begin() + static_cast<std::ptrdiff_t>(
                                                                       chain.warnings().size()),
                                              r.warnings.end());
  warn(err, extra);

  json knots = json::array();
  const auto slices = chain.slices();
  for (std::size_t i = 0; i < slices.size(); ++i) {
    knots.push_back({{"days", slices[i].days}, {"z", r.z.knots()[i].z}});
  }
  json doc{{"schemaVersion", kSchemaVersion},
           {"source", "calibrated to " + std::filesystem::path(a.chain).filename().string()},
           {"market", market_json(cfg.market)},
           {"params", params_json(r.params)},
           {"zCurve", knots},
           {"fit",
            {{"rmse", r.rmse},
             {"evaluations", r.evaluations},
             {"converged", r.converged},
             {"bestStart", r.best_start},
             {"startRmse", r.start_rmse},
             {"budget", cc.budget},
             {"multistart", cc.multistart},
             {"seed", cc.seed},
             {"monotoneZ", cc.monotone_z},
             {"fitBasisDrift", cc.fit_basis_drift},
             {"quotes", chain.quote_count()},
             {"warnings", r.warnings}}}};
  emit(a.result, out, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
  emit(a.residuals, out, [&](std::ostream& o) {
    o << "maturity_days,strike,weight,market_price,model_price,market_iv,model_iv,iv_error\n";
    for (const auto& q : r.residuals) {
      o << q.maturity_days << ',' << format_double(q.strike) << ',' << format_double(q.weight)
        << ',' << format_double(q.market_price) << ',' << format_double(q.model_price) << ','
        << csv_number(q.market_iv) << ',' << csv_number(q.model_iv) << ','
        << csv_number(q.model_iv - q.market_iv) << '\n';
    }
  });
  out << "rmse " << format_double(r.rmse) << "\nevaluations " << r.evaluations << "\nconverged "
      << (r.converged ? "true" : "false") << '\n';
}

// ---- simulate

struct SimulateArgs {
  Common common;
  double maturity_days = 0.0;
  std::vector<double> strikes;
  std::optional<std::uint64_t> paths;
  std::optional<std::uint64_t> seed;
  bool stationary = false;
  std::string out;
  std::string acf;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.common.config);
  const auto& p = cfg.require_params();
  const auto& so = cfg.simulation;
  PathConfig pc;
  pc.paths = a.paths.value_or(so.paths);
  pc.seed = a.seed.value_or(so.seed);
  pc.antithetic = so.antithetic;
  pc.past = so.past_years;
  pc.maturity = cfg.market.years(a.maturity_days);
  if (pc.paths == 0) throw InputError("--paths must be > 0");
  if (pc.antithetic && pc.paths % 2 != 0) {
    throw InputError("--paths must be even with antithetic sampling");
  }
  if (!(pc.maturity > 0.0)) throw InputError("--maturity must be > 0");

  Conditioning cond;
  json zinfo = nullptr;
  if (!a.stationary) {
    const auto z = resolve_z(cfg, a.maturity_days, kZModes.at(a.common.z_mode));
    warn(err, z.warnings);
    cond = z.value;
    zinfo = json{{"value", z.value}, {"source", z.source}};
  }
  const auto x = simulate_XT(p, cfg.market, cond, pc);

  json calls = json::array();
  for (const double k : a.strikes) {
    const auto e = mc_call_price(x, k, pc.maturity, cfg.market, pc.antithetic);
    calls.push_back({{"strike", k}, {"price", e.value}, {"stdError", e.std_error}});
  }
  json doc{{"schemaVersion", kSchemaVersion},
           {"paths", pc.paths},
           {"seed", pc.seed},
           {"antithetic", pc.antithetic},
           {"maturityDays", a.maturity_days},
           {"mode", a.stationary ? "stationary" : "conditional"},
           {"z", zinfo},
           {"spot", cfg.market.spot()},
           {"discountedSpot", estimate_json(mc_discounted_spot(x, pc.maturity, cfg.market,
                                                               pc.antithetic))},
           {"calls", calls}};

  // Variance level at time 0 under the stationary (truncated-past) start.
  PathConfig vc = pc;
  vc.paths = std::min<std::size_t>(pc.paths, so.variance_paths);
  vc.antithetic = false;
  const auto v = simulate_variance(p, vc);
  std::vector<double> sigma0(v.size());
  std::transform(v.begin(), v.end(), sigma0.begin(), [](const VarianceSample& s) { return s.sigma0; });
  doc["variance"] = {{"paths", vc.paths},
                     {"sigma0Mean", estimate_json(mc_mean(sigma0))},
                     {"stationaryMean", p.stationary_variance_mean()},
                     {"pastYears", pc.past.value_or(default_past_window(p))}};

  if (!a.acf.empty()) {
    AcfConfig ac;
    ac.steps = so.acf_steps;
    ac.dt = so.acf_dt;
    ac.max_lag = so.acf_max_lag;
    ac.past = so.past_years;
    ac.seed = pc.seed;
    if (ac.max_lag >= ac.steps) throw InputError("simulation.acfMaxLag must be below acfSteps");
    const auto acf = acf_squared_returns(p, ac);
    emit(a.acf, out, [&](std::ostream& o) {
      o << "lag,acf\n";
      for (std::size_t k = 0; k < acf.size(); ++k) o << k + 1 << ',' << csv_number(acf[k]) << '\n';
    });
    json info{{"file", std::filesystem::path(a.acf).filename().string()},
              {"steps", ac.steps},
              {"dt", ac.dt},
              {"maxLag", ac.max_lag}};
    if (ac.max_lag >= 20) info["logLogSlope"] = acf_loglog_slope(acf, 10, ac.max_lag);
    doc["acf"] = info;
  }
  emit(a.out, out, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
}

// ---- smile

struct SmileArgs {
  Common common;
  double maturity_days = 0.0;
  std::string strikes;
  std::string out;
};

std::vector<double> parse_range(const std::string& spec) {
  const auto colon1 = spec.find(':');
  const auto colon2 = colon1 == std::string::npos ? colon1 : spec.find(':', colon1 + 1);
  if (colon2 == std::string::npos || spec.find(':', colon2 + 1) != std::string::npos) {
    throw InputError("--strikes must look like lo:hi:n");
  }
  const double lo = parse_double(std::string_view(spec).substr(0, colon1));
  const double hi = parse_double(std::string_view(spec).substr(colon1 + 1, colon2 - colon1 - 1));
  const long long n = parse_integer(std::string_view(spec).substr(colon2 + 1));
  if (!(lo > 0.0) || !std::isfinite(hi)) throw InputError("--strikes: lo must be > 0");
  if (!(lo < hi)) throw InputError("--strikes: lo must be below hi");
  if (n < 1 || n > 100000) throw InputError("--strikes: n must be in [1, 100000]");
  std::vector<double> k(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    k[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return k;
}

void cmd_smile(const SmileArgs& a, std::ostream& out, std::ostream& err) {
  const auto strikes = parse_range(a.strikes);
  const RunConfig cfg = load_run_config(a.common.config);
  const auto rn = cfg.require_params().risk_neutral(cfg.market.rate());
  const auto z = resolve_z(cfg, a.maturity_days, kZModes.at(a.common.z_mode));
  warn(err, z.warnings);
  const double T = cfg.market.years(a.maturity_days);
  const auto res = price_calls(rn, z.value, T, strikes, cfg.market, cfg.pricing);
  warn(err, res.warnings);
  emit(a.out, out, [&](std::ostream& o) {
    o << "strike,price,implied_vol\n";
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      o << format_double(strikes[i]) << ',' << format_double(res.prices[i]) << ','
        << csv_number(implied_vol_or_nan(res.prices[i], cfg.market, strikes[i], T)) << '\n';
    }
  });
}

// ---- predict-z

struct PredictArgs {
  std::string config;
  std::vector<double> maturities;
  std::string method = "blp";
  std::string out;
};

void cmd_predict_z(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(a.config);
  const ZCurve curve = cfg.curve();
  if (curve.empty()) throw InputError("config $.zCurve: at least one knot is required");
  std::ostringstream table;
  table << "maturity_days,z,method,unclamped,std_error\n";
  std::optional<ZCovKernel> kernel;
  if (a.method == "blp") kernel.emplace(cfg.require_params());
  for (const double days : a.maturities) {
    if (!(days >= 0.0)) throw InputError("--maturity must be >= 0");
    const double t = cfg.market.years(days);
    if (const auto z = curve.at(t)) {
      table << format_double(days) << ',' << format_double(*z) << ",knot," << format_double(*z)
            << ",0\n";
    } else if (kernel) {
      const auto pred = blp_z_detail(t, curve, *kernel, cfg.require_params().basis_drift());
      warn(err, pred.warnings);
      table << format_double(days) << ',' << format_double(pred.value) << ",blp,"
            << format_double(pred.unclamped) << ','
            << format_double(std::sqrt(std::max(pred.variance, 0.0))) << '\n';
    } else {
      const auto r = interpolate_z_detail(t, curve);
      warn(err, r.warnings);
      table << format_double(days) << ',' << format_double(r.value) << ",interp,"
            << format_double(r.value) << ",\n";
    }
  }
  emit(a.out, out, [&](std::ostream& o) { o << table.str(); });
}

int report(std::ostream& err, const std::exception& e, int code) {
  err << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gamma-supOU option pricing, calibration and simulation", "supou"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "supou 0.1.0");

  PriceArgs price;
  auto* price_cmd = app.add_subcommand("price", "price European calls by Fourier inversion");
  add_config(price_cmd, price.common);
  add_z_mode(price_cmd, price.common);
  price_cmd->add_option("--maturity", price.maturity_days, "maturity in days")->required();
  price_cmd->add_option("--strike", price.strikes, "strike(s)")->required()->expected(1, -1);
  price_cmd->add_option("--csv", price.csv, "also write the table to this CSV file");

  CalibrateArgs calib;
  auto* calib_cmd = app.add_subcommand("calibrate", "fit parameters and z-curve to a chain");
  calib_cmd->add_option("--chain", calib.chain, "option chain CSV")->required();
  calib_cmd->add_option("--config", calib.config, "run configuration JSON (market, options)")
      ->required();
  calib_cmd->add_option("--out", calib.result, "result JSON path");
  calib_cmd->add_option("--residuals", calib.residuals, "residual table CSV path");
  calib_cmd->add_option("--budget", calib.budget, "objective evaluations per start");
  calib_cmd->add_option("--multistart", calib.multistart, "number of starts");
  calib_cmd->add_option("--seed", calib.seed, "start-point seed");
  calib_cmd->add_flag("--monotone-z", calib.monotone_z, "force a nondecreasing z-curve");
  calib_cmd->add_flag("--fit-basis-drift", calib.fit_basis_drift, "fit gamma0 as well");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo prices, variance level and ACF");
  add_config(sim_cmd, sim.common);
  add_z_mode(sim_cmd, sim.common);
  sim_cmd->add_option("--maturity", sim.maturity_days, "maturity in days")->required();
  sim_cmd->add_option("--strike", sim.strikes, "strike(s) for MC call prices");
  sim_cmd->add_option("--paths", sim.paths, "number of paths");
  sim_cmd->add_option("--seed", sim.seed, "random seed");
  sim_cmd->add_flag("--stationary", sim.stationary, "simulate the past instead of using z");
  sim_cmd->add_option("--out", sim.out, "summary JSON path (stdout when omitted)");
  sim_cmd->add_option("--acf", sim.acf, "write the squared-return ACF to this CSV");

  SmileArgs smile;
  auto* smile_cmd = app.add_subcommand("smile", "prices and implied vols over a strike range");
  add_config(smile_cmd, smile.common);
  add_z_mode(smile_cmd, smile.common);
  smile_cmd->add_option("--maturity", smile.maturity_days, "maturity in days")->required();
  smile_cmd->add_option("--strikes", smile.strikes, "lo:hi:n")->required();
  smile_cmd->add_option("--out", smile.out, "CSV path (stdout when omitted)");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict-z", "predict z at unquoted maturities");
  pred_cmd->add_option("--config", pred.config, "run configuration JSON")->required();
  pred_cmd->add_option("--maturity", pred.maturities, "maturity in days")->required()->expected(1, -1);
  pred_cmd->add_option("--method", pred.method, "blp or interp")
      ->check(CLI::IsMember({"blp", "interp"}));
  pred_cmd->add_option("--out", pred.out, "CSV path (stdout when omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "supou 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (price_cmd->parsed()) cmd_price(price, out, err);
    if (calib_cmd->parsed()) cmd_calibrate(calib, out, err);
    if (sim_cmd->parsed()) cmd_simulate(sim, out, err);
    if (smile_cmd->parsed()) cmd_smile(smile, out, err);
    if (pred_cmd->parsed()) cmd_predict_z(pred, out, err);
  } catch (const NotCalibrated& e) {
    return report(err, e, kExitInfeasible);
  } catch (const InfeasibleError& e) {
    return report(err, e, kExitInfeasible);
  } catch (const InputError& e) {
    return report(err, e, kExitInput);
  } catch (const ArbitrageError& e) {
    return report(err, e, kExitInfeasible);
  } catch (const DomainError& e) {
    return report(err, e, kExitInfeasible);
  } catch (const NumericalError& e) {
    return report(err, e, kExitInfeasible);
  } catch (const std::exception& e) {
    return report(err, e, kExitInput);
  }
  return kExitOk;
}

}  // namespace supou::cli
