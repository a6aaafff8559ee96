#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "supou/errors.hpp"

namespace supou::cli {

namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects whatever was not read.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  [[nodiscard]] const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::optional<double> number(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(at(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(at(key), "must be finite");
    return d;
  }

  [[nodiscard]] double required_number(const std::string& key) {
    const auto v = number(key);
    if (!v) fail(at(key), "missing required field");
    return *v;
  }

  [[nodiscard]] std::optional<long long> integer(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) fail(at(key), "expected an integer");
    return v->get<long long>();
  }

  [[nodiscard]] std::optional<std::uint64_t> count(const std::string& key) {
    const auto v = integer(key);
    if (v && *v < 0) fail(at(key), "must be >= 0");
    return v ? std::optional<std::uint64_t>(static_cast<std::uint64_t>(*v)) : std::nullopt;
  }

  [[nodiscard]] std::optional<bool> boolean(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }

  [[nodiscard]] std::optional<std::string> string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  [[nodiscard]] std::string at(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(at(key), "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw InputError("config " + where + ": " + what);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

GammaSupOUParams read_params(const json& j) {
  Fields f(j, "$.params");
  GammaSupOUParams::Fields p;
  p.leverage = f.required_number("leverage");
  p.jump_intensity = f.required_number("jumpIntensity");
  p.jump_rate = f.required_number("jumpRate");
  p.decay_scale = f.required_number("decayScale");
  p.decay_shape = f.required_number("decayShape");
  p.basis_drift = f.number("basisDrift").value_or(0.0);
  p.drift = f.number("drift").value_or(0.0);
  p.variance_loading = f.number("varianceLoading").value_or(-0.5);
  f.finish();
  try {
    return GammaSupOUParams(p);
  } catch (const DomainError& e) {
    Fields::fail("$.params", e.what());
  }
}

MarketContext read_market(const json& j) {
  Fields f(j, "$.market");
  const double spot = f.required_number("spot");
  const double rate = f.required_number("rate");
  const double day_count = f.number("dayCount").value_or(365.0);
  f.finish();
  try {
    return MarketContext(spot, rate, day_count);
  } catch (const std::exception& e) {
    Fields::fail("$.market", e.what());
  }
}

std::vector<ZKnotDays> read_curve(const json& j) {
  if (!j.is_array()) Fields::fail("$.zCurve", "expected an array");
  std::vector<ZKnotDays> knots;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Fields f(j[i], "$.zCurve[" + std::to_string(i) + "]");
    const auto days = f.integer("days");
    if (!days || *days <= 0) Fields::fail(f.at("days"), "required positive integer");
    const double z = f.required_number("z");
    f.finish();
    knots.push_back({static_cast<int>(*days), z});
  }
  return knots;
}

PricingOptions read_pricing(const json& j) {
  Fields f(j, "$.pricing");
  PricingOptions o;
  o.damping = f.number("damping");
  o.tolerance = f.number("tolerance").value_or(o.tolerance);
  o.u_max = f.number("uMax").value_or(o.u_max);
  o.first_panel = f.number("firstPanel").value_or(o.first_panel);
  f.finish();
  if (!(o.tolerance > 0.0)) Fields::fail("$.pricing.tolerance", "must be > 0");
  if (!(o.u_max > 0.0) || !(o.first_panel > 0.0)) {
    Fields::fail("$.pricing", "uMax and firstPanel must be > 0");
  }
  return o;
}

Interval read_interval(Fields& parent, const std::string& key, Interval fallback) {
  const json* v = parent.get(key);
  if (!v) return fallback;
  const std::string where = parent.at(key);
  if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
    Fields::fail(where, "expected [lo, hi]");
  }
  const Interval iv{(*v)[0].get<double>(), (*v)[1].get<double>()};
  if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
    Fields::fail(where, "need finite lo < hi");
  }
  return iv;
}

CalibConfig read_calibration(const json& j) {
  Fields f(j, "$.calibration");
  CalibConfig c;
  if (const auto v = f.integer("multistart")) c.multistart = static_cast<int>(*v);
  if (const auto v = f.integer("budget")) c.budget = static_cast<int>(*v);
  c.monotone_z = f.boolean("monotoneZ").value_or(c.monotone_z);
  c.fit_basis_drift = f.boolean("fitBasisDrift").value_or(c.fit_basis_drift);
  c.seed = f.count("seed").value_or(c.seed);
  if (const json* b = f.get("bounds")) {
    Fields g(*b, f.at("bounds"));
    auto& bounds = c.bounds;
    bounds.leverage = read_interval(g, "leverage", bounds.leverage);
    bounds.jump_intensity = read_interval(g, "jumpIntensity", bounds.jump_intensity);
    bounds.jump_rate = read_interval(g, "jumpRate", bounds.jump_rate);
    bounds.decay_scale = read_interval(g, "decayScale", bounds.decay_scale);
    bounds.decay_shape = read_interval(g, "decayShape", bounds.decay_shape);
    bounds.basis_drift = read_interval(g, "basisDrift", bounds.basis_drift);
    bounds.z = read_interval(g, "z", bounds.z);
    g.finish();
    if (!(bounds.jump_intensity.lo > 0.0) || !(bounds.jump_rate.lo > 0.0) ||
        !(bounds.decay_scale.hi < 0.0) || !(bounds.decay_shape.lo >= 1.0) ||
        !(bounds.basis_drift.lo >= 0.0) || !(bounds.z.lo >= 0.0)) {
      Fields::fail(f.at("bounds"), "interval outside the parameter domain");
    }
  }
  f.finish();
  if (c.multistart < 1) Fields::fail("$.calibration.multistart", "must be >= 1");
  if (c.budget < 0) Fields::fail("$.calibration.budget", "must be >= 0");
  return c;
}

SimulationOptions read_simulation(const json& j) {
  Fields f(j, "$.simulation");
  SimulationOptions s;
  s.paths = f.count("paths").value_or(s.paths);
  s.seed = f.count("seed").value_or(s.seed);
  s.antithetic = f.boolean("antithetic").value_or(s.antithetic);
  s.past_years = f.number("pastYears");
  s.variance_paths = f.count("variancePaths").value_or(s.variance_paths);
  s.acf_steps = f.count("acfSteps").value_or(s.acf_steps);
  s.acf_dt = f.number("acfDt").value_or(s.acf_dt);
  s.acf_max_lag = f.count("acfMaxLag").value_or(s.acf_max_lag);
  f.finish();
  if (s.past_years && !(*s.past_years >= 0.0)) Fields::fail("$.simulation.pastYears", "must be >= 0");
  if (s.variance_paths == 0) Fields::fail("$.simulation.variancePaths", "must be > 0");
  if (!(s.acf_dt > 0.0)) Fields::fail("$.simulation.acfDt", "must be > 0");
  return s;
}

}  // namespace

const GammaSupOUParams& RunConfig::require_params() const {
  if (!params) throw InputError("config: $.params is required for this command");
  return *params;
}

ZCurve RunConfig::curve() const {
  std::vector<ZKnot> knots;
  for (const auto& k : z_curve) knots.push_back({market.years(k.days), k.z});
  try {
    return ZCurve(std::move(knots));
  } catch (const std::exception& e) {
    throw InputError(std::string("config $.zCurve: ") + e.what());
  }
}

RunConfig parse_run_config(const json& doc) {
  Fields f(doc, "$");
  const auto version = f.integer("schemaVersion");
  if (!version) Fields::fail("$.schemaVersion", "missing required field");
  if (*version != kSchemaVersion) {
    Fields::fail("$.schemaVersion", "unsupported version " + std::to_string(*version));
  }
  RunConfig c;
  c.source = f.string("source").value_or("");
  const json* market = f.get("market");
  if (!market) Fields::fail("$.market", "missing required field");
  c.market = read_market(*market);
  if (const json* v = f.get("params")) c.params = read_params(*v);
  if (const json* v = f.get("zCurve")) c.z_curve = read_curve(*v);
  if (const json* v = f.get("pricing")) c.pricing = read_pricing(*v);
  if (const json* v = f.get("calibration")) c.calibration = read_calibration(*v);
  if (const json* v = f.get("simulation")) c.simulation = read_simulation(*v);
  if (const json* v = f.get("fit")) {
    if (!v->is_object()) Fields::fail("$.fit", "expected an object");
    c.fit = *v;
  }
  f.finish();
  c.calibration.pricing = c.pricing;
  (void)c.curve();  // validates ordering and signs
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path.string() + ": malformed JSON: " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::json params_json(const GammaSupOUParams& p) {
  return json{{"leverage", p.leverage()},         {"jumpIntensity", p.jump_intensity()},
              {"jumpRate", p.jump_rate()},        {"decayScale", p.decay_scale()},
              {"decayShape", p.decay_shape()},    {"basisDrift", p.basis_drift()},
              {"drift", p.drift()},               {"varianceLoading", p.variance_loading()}};
}

nlohmann::json market_json(const MarketContext& m) {
  return json{{"spot", m.spot()}, {"rate", m.rate()}, {"dayCount", m.day_count()}};
}

}  // namespace supou::cli
