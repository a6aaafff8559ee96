// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "supou/calib.hpp"
#include "supou/charfn.hpp"
#include "supou/errors.hpp"
#include "supou/fourier.hpp"
#include "supou/sim.hpp"
#include "supou/zpred.hpp"
#include "synthetic.hpp"

using namespace supou;
namespace fs = std::filesystem;

namespace {

const MarketContext kCtx(oracle::kSpot, oracle::kRate);

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double relerr(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

int failures = 0;
std::vector<int> selected;  // empty: all

void criterion(int id, const char* name, double time_limit, const std::function<Outcome()>& body) {
  if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit > 0.0) o.require(secs < time_limit, "runtime " + sci(secs) + " s < " + sci(time_limit) + " s");
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

Outcome theta_oracle() {
  const auto p = oracle::published().risk_neutral(kCtx.rate());
  double worst = 0.0;
  for (double days : {31.0, 213.0, 668.0}) {
    const double t = days / 365.0;
    const double delta = strip_delta(p, t).delta;
    for (int i = 0; i < 10; ++i) {
      const double re = -0.9 * delta + 1.8 * delta * i / 9.0;
      for (int j = 0; j < 10; ++j) {
        const cplx u(re, 5.0 * j);
        worst = std::max(worst, relerr(theta(u, p, t).total, theta_bruteforce(u, p, t, 1e-10)));
      }
    }
  }
  Outcome o;
  o.require(worst <= 1e-8, "max rel. error " + sci(worst) + " <= 1e-8 over 300 points");
  return o;
}

Outcome martingale() {
  const auto p = oracle::published().risk_neutral(kCtx.rate());
  double worst0 = 0.0, worst1 = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double T = oracle::kDays[i] / 365.0;
    worst0 = std::max(worst0, std::abs(mgf(cplx(0.0), p, kCtx.log_spot(), oracle::kZ[i], T) - 1.0));
    const double expect = std::exp(kCtx.log_spot() + kCtx.rate() * T);
    worst1 = std::max(worst1, std::abs(mgf(cplx(1.0), p, kCtx.log_spot(), oracle::kZ[i], T) - expect) / expect);
  }
  PathConfig cfg;
  cfg.paths = 200000;
  cfg.maturity = 668.0 / 365.0;
  cfg.seed = 101;
  const auto x = simulate_XT(oracle::published(), kCtx, oracle::kZ[7], cfg);
  const auto s = mc_discounted_spot(x, cfg.maturity, kCtx);
  const double dev = std::abs(s.value - kCtx.spot()) / s.std_error;
  Outcome o;
  o.require(worst0 <= 1e-12, "|mgf(0)-1| " + sci(worst0) + " <= 1e-12");
  o.require(worst1 <= 1e-8, "mgf(1) rel. error " + sci(worst1) + " <= 1e-8");
  o.require(dev <= 3.0, "MC E[e^{X_T-rT}] = " + sci(s.value) + ", " + sci(dev) + " SE from S0 (<= 3)");
  return o;
}

Outcome fourier_vs_mc() {
  const auto p = oracle::published();
  const auto rn = p.risk_neutral(kCtx.rate());
  const int days[3] = {59, 213, 486};
  const double z[3] = {oracle::kZ[1], oracle::kZ[4], oracle::kZ[6]};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    PathConfig cfg;
    cfg.paths = 200000;
    cfg.maturity = days[i] / 365.0;
    cfg.seed = 200 + i;
    const auto x = simulate_XT(p, kCtx, z[i], cfg);
    std::vector<double> strikes;
    for (double m : {0.95, 1.0, 1.05}) strikes.push_back(m * kCtx.spot());
    const auto f = price_calls(rn, z[i], cfg.maturity, strikes, kCtx).prices;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto mc = mc_call_price(x, strikes[k], cfg.maturity, kCtx);
      worst = std::max(worst, std::abs(f[k] - mc.value) / mc.std_error);
    }
  }
  Outcome o;
  o.require(worst <= 3.0, "max |Fourier - MC| / SE " + sci(worst) + " <= 3 over 9 cells");
  return o;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> k(n);
  for (int i = 0; i < n; ++i) k[i] = lo + (hi - lo) * i / (n - 1);
  return k;
}

Outcome contour() {
  const auto p = oracle::published().risk_neutral(kCtx.rate());
  const auto strikes = grid(0.8 * kCtx.spot(), 1.2 * kCtx.spot(), 50);
  double worst = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double T = oracle::kDays[i] / 365.0;
    const double delta = strip_delta(p, T).delta;
    const auto mid = price_calls(p, oracle::kZ[i], T, strikes, kCtx);
    for (double R : {1.1, 0.9 * delta}) {
      PricingOptions opt;
      opt.damping = R;
      const auto alt = price_calls(p, oracle::kZ[i], T, strikes, kCtx, opt);
      for (std::size_t j = 0; j < strikes.size(); ++j) {
        worst = std::max(worst, std::abs(alt.prices[j] - mid.prices[j]) / mid.prices[j]);
      }
    }
  }
  Outcome o;
  o.require(worst <= 1e-7, "max rel. spread over R in {1.1, mid, 0.9 delta} " + sci(worst) + " <= 1e-7");
  return o;
}

Outcome static_arbitrage() {
  const auto p = oracle::published().risk_neutral(kCtx.rate());
  const auto strikes = grid(0.7 * kCtx.spot(), 1.3 * kCtx.spot(), 50);
  double parity = 0.0;
  int monotone = 0, convex = 0;
  for (int i = 0; i < 8; ++i) {
    const double T = oracle::kDays[i] / 365.0;
    const auto c = price_calls(p, oracle::kZ[i], T, strikes, kCtx).prices;
    const auto q = price_puts(p, oracle::kZ[i], T, strikes, kCtx).prices;
    for (std::size_t j = 0; j < strikes.size(); ++j) {
      parity = std::max(parity, std::abs(c[j] - q[j] - (kCtx.spot() - strikes[j] * kCtx.discount(T))));
      if (j > 0 && c[j] > c[j - 1]) ++monotone;
      // second differences within the pricing tolerance of zero count as convex
      if (j > 1 && c[j] - 2.0 * c[j - 1] + c[j - 2] < -1e-9 * kCtx.spot()) ++convex;
    }
  }
  Outcome o;
  o.require(monotone == 0, std::to_string(monotone) + " increasing steps");
  o.require(convex == 0, std::to_string(convex) + " concave second differences");
  o.require(parity <= 1e-6, "max parity gap " + sci(parity) + " <= 1e-6");
  return o;
}

Outcome round_trip() {
  const MarketContext ctx(100.0, 0.01);
  const GammaSupOUParams truth({-5.0, 0.3, 20.0, -0.01, 3.0, 0.0, 0.0, -0.5});
  const std::vector<int> days{59, 213};
  std::vector<double> z;
  for (int d : days) z.push_back(0.04 * ctx.years(d));  // linear in maturity
  const OptionChain chain(ctx, synthetic::quotes(truth, days, z, synthetic::strikes(80, 120, 10), ctx));
  const auto r = calibrate(chain);
  double zerr = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) zerr = std::max(zerr, std::abs(r.z.knots()[i].z - z[i]) / z[i]);
  Outcome o;
  o.require(r.rmse < 1e-4, "IV rmse " + sci(r.rmse) + " < 1e-4");
  o.require(zerr <= 0.05, "max z rel. error " + sci(zerr) + " <= 5%");
  o.require(r.evaluations <= 8 * 2000, std::to_string(r.evaluations) + " evaluations within the default budget");
  return o;
}

Outcome z_machinery() {
  Outcome o;
  // monotone z on random ledgers
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ua(0.1, 5.0), ub(1.0, 50.0), uB(-2.0, -0.01), ual(1.1, 8.0),
      uw(0.5, 50.0);
  int violations = 0;
  for (int n = 0; n < 1000; ++n) {
    const GammaSupOUParams p({0.0, ua(rng), ub(rng), uB(rng), ual(rng), 0.0, 0.0, -0.5});
    const auto ledger = simulate_ledger(p, -uw(rng), 0.0, rng);
    double prev = -1.0;
    for (int k = 0; k < 100; ++k) {
      const double v = z_from_ledger(ledger, 5.0 * k / 99.0);
      if (v < prev) ++violations;
      prev = v;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " decreasing steps over 1000 ledgers");

  // closed-form covariance vs two-dimensional quadrature
  double worst = 0.0;
  const auto table = oracle::published();
  worst = std::max(worst, std::abs(z_cov(59.0 / 365.0, 213.0 / 365.0, ZCovKernel(table)) /
                                       oracle::z_cov_bruteforce(table, 59.0 / 365.0, 213.0 / 365.0) - 1.0));
  for (double alpha : {1.5, 2.0, 3.0, 7.0}) {
    const GammaSupOUParams q({-1.0, 0.7, 4.0, -0.3, alpha, 0.0, 0.0, -0.5});
    const ZCovKernel k(q);
    for (auto [t, u] : {std::pair{0.2, 0.2}, std::pair{0.5, 3.0}, std::pair{10.0, 40.0}}) {
      worst = std::max(worst, std::abs(z_cov(t, u, k) / oracle::z_cov_bruteforce(q, t, u) - 1.0));
    }
  }
  o.require(worst <= 1e-7, "z_cov vs 2-D quadrature max rel. error " + sci(worst) + " <= 1e-7");

  // covariance vs simulated ledgers
  const double t = 59.0 / 365.0, u = 213.0 / 365.0;
  const double lo = -default_past_window(table);
  std::vector<double> zt, zu;
  for (std::uint64_t s = 0; s < 50000; ++s) {
    auto prng = path_engine(31, s);
    const auto past = simulate_ledger(table, lo, 0.0, prng);
    zt.push_back(z_from_ledger(past, t));
    zu.push_back(z_from_ledger(past, u));
  }
  const auto mt = mc_mean(zt), mu = mc_mean(zu);
  std::vector<double> prod(zt.size());
  for (std::size_t i = 0; i < zt.size(); ++i) prod[i] = (zt[i] - mt.value) * (zu[i] - mu.value);
  const auto c = mc_mean(prod);
  const double dev = std::abs(c.value - z_cov(t, u, ZCovKernel(table))) / c.std_error;
  o.require(dev <= 3.0, "MC covariance " + sci(dev) + " SE from z_cov (<= 3, 50k ledgers)");

  // Gram matrices
  std::uniform_real_distribution<double> ut(1.0 / 365.0, 3.0);
  double most_negative = 0.0;
  for (const auto& p : {table, GammaSupOUParams({0.0, 1.0, 1.0, -1.0, 3.0, 0.0, 0.0, -0.5}),
                        GammaSupOUParams({0.0, 2.0, 5.0, -0.05, 1.4, 0.0, 0.0, -0.5})}) {
    const ZCovKernel k(p);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 1 + trial % 12;
      std::vector<double> times(n);
      for (auto& x : times) x = ut(rng);
      const auto g = k.gram(times);
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = g[i][j];
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
      const double scale = std::max(1.0, eig.eigenvalues().maxCoeff());
      most_negative = std::min(most_negative, eig.eigenvalues().minCoeff() / scale);
    }
  }
  o.require(most_negative >= -1e-10, "min scaled Gram eigenvalue " + sci(most_negative) + " >= -1e-10");

  // BLP reproduces knots when the Gram matrix is nonsingular
  const ZCovKernel unit(GammaSupOUParams({0.0, 1.0, 1.0, -1.0, 3.0, 0.0, 0.0, -0.5}));
  const ZCurve curve({{0.25, 0.05}, {0.5, 0.09}, {1.0, 0.2}, {2.0, 0.26}});
  double knot_err = 0.0;
  for (const auto& kn : curve.knots()) knot_err = std::max(knot_err, std::abs(blp_z(kn.maturity, curve, unit, 0.0) - kn.z));
  o.require(knot_err <= 1e-10, "BLP knot error " + sci(knot_err) + " <= 1e-10");
  return o;
}

Outcome strip() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rho(-50.0, 5.0), b(0.1, 500.0), beta(-3.0, 3.0), T(1.0 / 365.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    GammaSupOUParams::Fields f{0.0, 0.5, b(rng), -0.1, 2.0, 0.0, 0.0, beta(rng)};
    f.leverage = std::min(rho(rng), 0.99 * f.jump_rate);
    const double t = T(rng);
    const double d = strip_delta(GammaSupOUParams(f), t).delta;
    worst = std::max(worst, std::abs(0.5 * t * d * d + (t * std::abs(f.variance_loading) + std::abs(f.leverage)) * d -
                                     f.jump_rate));
  }
  Outcome o;
  o.require(worst < 1e-12, "max |quadratic residual| " + sci(worst) + " < 1e-12");

  // delta <= 1: pricing refuses, calibration penalizes
  const GammaSupOUParams narrow({-5.0, 0.3, 2.0, -0.01, 3.0, 0.0, 0.0, -0.5});
  const auto rn = narrow.risk_neutral(0.01);
  const double T1 = 213.0 / 365.0;
  const double delta = strip_delta(rn, T1).delta;
  bool raised = false;
  try {
    (void)price_call(rn, 0.01, T1, 100.0, MarketContext(100.0, 0.01));
  } catch (const InfeasibleError&) {
    raised = true;
  }
  o.require(delta <= 1.0 && raised, "delta " + sci(delta) + " <= 1 raises InfeasibleError");
  bool raised_edge = false;
  try {
    (void)choose_damping(Strip{1.0 + 1e-7, 0.0, T1});
  } catch (const InfeasibleError&) {
    raised_edge = true;
  }
  o.require(raised_edge, "delta = 1 + 1e-7 raises InfeasibleError");

  const MarketContext ctx(100.0, 0.01);
  const GammaSupOUParams ok({-5.0, 0.3, 20.0, -0.01, 3.0, 0.0, 0.0, -0.5});
  const OptionChain chain(ctx, synthetic::quotes(ok, {213}, {0.02}, {90.0, 100.0, 110.0}, ctx));
  const ZCurve zc({{T1, 0.02}});
  const double pen = rmse_objective(narrow, zc, chain);
  const double pen2 = rmse_objective(GammaSupOUParams({-8.0, 0.3, 2.0, -0.01, 3.0, 0.0, 0.0, -0.5}), zc, chain);
  o.require(std::isfinite(pen) && pen > kPenalty && pen2 > pen,
            "objective penalty " + sci(pen) + " > 1e3, growing with distance");
  CalibConfig cfg;
  cfg.multistart = 2;
  cfg.budget = 200;
  const auto r = calibrate(chain, cfg);
  const double fitted = strip_delta(r.params, chain.max_maturity()).delta;
  o.require(fitted > 1.0 + 1e-6 && r.rmse < kPenalty, "calibrated delta " + sci(fitted) + " > 1 + 1e-6");
  return o;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "supou_acceptance_determinism";
  const std::string fixture = (fs::path(SUPOU_SOURCE_DIR) / "fixtures" / "table1.json").string();
  fs::remove_all(root);
  std::string bytes[2][2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    std::ostringstream out, err;
    const int code = cli::run({"simulate", "--config", fixture, "--maturity", "213", "--strike", "8400",
                               "--paths", "20000", "--seed", "17", "--out", (dir / "summary.json").string(),
                               "--acf", (dir / "acf.csv").string()},
                              out, err);
    if (code != 0) throw std::runtime_error("simulate failed: " + err.str());
    bytes[run][0] = slurp(dir / "summary.json");
    bytes[run][1] = slurp(dir / "acf.csv");
  }
  fs::remove_all(root);
  Outcome o;
  o.require(!bytes[0][0].empty() && bytes[0][0] == bytes[1][0],
            "summary.json identical (" + std::to_string(bytes[0][0].size()) + " bytes)");
  o.require(!bytes[0][1].empty() && bytes[0][1] == bytes[1][1],
            "acf.csv identical (" + std::to_string(bytes[0][1].size()) + " bytes)");
  return o;
}

}  // namespace

// Optional arguments pick criteria by number.
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  criterion(1, "theta closed form vs brute-force oracle", 60.0, theta_oracle);
  criterion(2, "mgf normalization and martingale", 120.0, martingale);
  criterion(3, "Fourier vs Monte Carlo 3x3 panel", 300.0, fourier_vs_mc);
  criterion(4, "contour independence", 0.0, contour);
  criterion(5, "static no-arbitrage and put-call parity", 0.0, static_arbitrage);
  criterion(6, "calibration round trip", 600.0, round_trip);
  criterion(7, "z machinery", 0.0, z_machinery);
  criterion(8, "strip quadratic and infeasibility", 0.0, strip);
  criterion(9, "simulate determinism", 0.0, determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
