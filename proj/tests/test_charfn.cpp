#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "supou/charfn.hpp"
#include "supou/errors.hpp"

using namespace supou;

namespace {

GammaSupOUParams with_drift() {
  return GammaSupOUParams({-3.0, 1.5, 12.0, -0.8, 2.7, 0.04, 0.0, -0.5});
}

double relerr(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// gamma0 * int pi(dA) int_0^t u f_u(A, s) ds by nested quadrature.
cplx gamma0_part_quadrature(cplx u, const GammaSupOUParams& p, double t) {
  auto part = [&](bool imag) {
    auto over_r = [&](double r) {
      const double A = p.decay_scale() * r;
      auto over_s = [&](double s) {
        const cplx v = u * f_u(A, s, u, p.variance_loading(), p.leverage(), t);
        return imag ? v.imag() : v.real();
      };
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(over_s, 0.0, t, 10,
                                                                            1e-14);
    };
    return oracle::gamma_expectation(over_r, p.decay_shape(), 1e-13);
  };
  return p.basis_drift() * cplx(part(false), part(true));
}

}  // namespace

TEST_SUITE("charfn") {

TEST_CASE("f_u special cases") {
  const cplx u(1.3, -0.7);
  CHECK(std::abs(f_u(-0.4, 2.0, u, -0.5, -3.0, 2.0) - cplx(-3.0)) < 1e-15);
  CHECK(std::abs(f_u(-0.4, 0.3, cplx(1.0), -0.5, 2.5, 2.0) - cplx(2.5)) < 1e-15);
  CHECK(f_u(-1.0, 0.0, cplx(2.0), -0.5, 0.0, 1.0).real() ==
        doctest::Approx(0.5 - 0.5 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(f_u(-1.0, 0.0, cplx(2.0), -0.5, 0.0, 1.0).real() == doctest::Approx(0.316060).epsilon(1e-6));
}

TEST_CASE("basis-drift summand of Theta") {
  SUBCASE("u = 1 leaves only the leverage term") {
    const auto p = with_drift();
    const cplx v = theta_gamma0_part(cplx(1.0), p, 0.7);
    CHECK(v.real() == doctest::Approx(0.04 * -3.0 * 0.7).epsilon(1e-13));
    CHECK(v.imag() == 0.0);
  }
  SUBCASE("alpha = 2 example") {
    const GammaSupOUParams p({0.0, 1.0, 10.0, -1.0, 2.0, 1.0, 0.0, -0.5});
    const cplx v = theta_gamma0_part(cplx(2.0), p, 1.0);
    CHECK(v.real() == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-13));
    CHECK(v.real() == doctest::Approx(0.306853).epsilon(1e-6));
    CHECK(relerr(v, gamma0_part_quadrature(cplx(2.0), p, 1.0)) < 1e-10);
  }
  SUBCASE("branches agree around alpha = 2") {
    for (double alpha : {2.0 - 1e-10, 2.0 + 1e-10, 2.0 - 2e-8, 2.0 + 2e-8}) {
      const GammaSupOUParams p({-2.0, 1.0, 10.0, -1.0, alpha, 0.5, 0.0, -0.5});
      const cplx u(1.7, 3.0);
      const cplx got = theta_gamma0_part(u, p, 1.0);
      CHECK(relerr(got, gamma0_part_quadrature(u, p, 1.0)) < 1e-6);
    }
  }
  SUBCASE("matches quadrature away from alpha = 2") {
    const auto p = with_drift();
    for (double t : {0.05, 1.0, 6.0}) {
      const cplx u(0.8, -4.0);
      CHECK(relerr(theta_gamma0_part(u, p, t), gamma0_part_quadrature(u, p, t)) < 1e-10);
    }
  }
}

TEST_CASE("drift integrated variance against quadrature") {
  for (auto p : {oracle::published(), with_drift()}) {
    for (double t : {1.0 / 365.0, 0.3, 2.0, 30.0}) {
      const double B = p.decay_scale();
      const double expect = oracle::gamma_expectation(
          [&](double r) {
            const double A = B * r;
            return (std::expm1(A * t) / A - t) / A;
          },
          p.decay_shape());
      CHECK(drift_integrated_variance(p, t) == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("jump summand per node: closed form vs s-quadrature") {
  const auto p = oracle::published();
  const double t = 213.0 / 365.0;
  const double delta = strip_delta(p, t).delta;
  const auto nodes = pi_quadrature(p.decay_shape(), p.decay_scale(), 64);
  for (cplx u : {cplx(0.5, 0.0), cplx(0.9 * delta, 5.0), cplx(-0.9 * delta, -30.0),
                 cplx(1.5, 200.0), cplx(0.1, 1500.0)}) {
    for (std::size_t k = 0; k < nodes.size(); k += 7) {
      const cplx closed = jump_integral_at(u, p, t, nodes[k].decay);
      const cplx numeric = jump_integral_at_numeric(u, p, t, nodes[k].decay);
      CHECK(std::abs(closed - numeric) <= 1e-9 * std::max(1e-12, std::abs(numeric)));
    }
  }
  SUBCASE("removable singularity") {
    const cplx u(1.5);
    const cplx q = u * p.variance_loading() + 0.5 * u * u;
    const double A = -(q / (p.jump_rate() - p.leverage() * u)).real();
    for (double shift : {0.0, 1e-9, -1e-7}) {
      const double a = A * (1.0 + shift);
      const cplx closed = jump_integral_at(u, p, t, a);
      const cplx numeric = jump_integral_at_numeric(u, p, t, a);
      CHECK(std::abs(closed - numeric) <= 1e-9 * std::abs(numeric));
    }
  }
}

TEST_CASE("jump summand trivial zeros") {
  const auto p = oracle::published();
  const auto nodes = pi_quadrature(p.decay_shape(), p.decay_scale(), 64);
  CHECK(std::abs(theta_jump_part(cplx(0.0), p, 0.5, nodes)) == 0.0);
  const GammaSupOUParams q({0.0, 0.3, 20.0, -0.01, 3.0, 0.0, 0.0, -0.5});
  CHECK(std::abs(theta_jump_part(cplx(1.0), q, 0.5, nodes)) < 1e-17);
}

TEST_CASE("Theta against the brute-force oracle") {
  const auto p = oracle::published();
  const double t = 59.0 / 365.0;
  const double delta = strip_delta(p, t).delta;
  CHECK(std::abs(theta_bruteforce(cplx(0.0), p, t)) == 0.0);
  for (cplx u : {cplx(0.5), cplx(0.7 * delta, 12.0), cplx(-0.5 * delta, -40.0)}) {
    const cplx fast = theta(u, p, t).total;
    const cplx brute = theta_bruteforce(u, p, t, 1e-11);
    CHECK(relerr(fast, brute) < 1e-9);
  }
  const auto g = with_drift();
  const cplx u(1.2, 7.0);
  const auto th = theta(u, g, 0.8);
  CHECK(th.total == th.gamma0_part + th.jump_part);
  CHECK(relerr(th.total, theta_bruteforce(u, g, 0.8, 1e-11)) < 1e-9);
}

TEST_CASE("Theta symmetries, analyticity and domain") {
  const auto p = oracle::published();
  const double t = 122.0 / 365.0;
  const double delta = strip_delta(p, t).delta;
  CHECK(std::abs(theta(cplx(0.0), p, t).total) == 0.0);
  CHECK(theta(cplx(0.6 * delta), p, t).total.imag() == 0.0);
  const cplx u(0.4 * delta, 9.0);
  CHECK(relerr(theta(std::conj(u), p, t).total, std::conj(theta(u, p, t).total)) < 1e-14);
  CHECK(std::abs(theta(u, p, 1e-13).total) == 0.0);
  CHECK_THROWS_AS((void)theta(cplx(delta * 1.01, 0.0), p, t), DomainError);
  CHECK_THROWS_AS((void)theta_bruteforce(cplx(-delta * 1.01, 0.0), p, t), DomainError);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> re(-0.8 * delta, 0.8 * delta), im(-50.0, 50.0);
  const double h = 1e-4;
  for (int i = 0; i < 20; ++i) {
    const cplx z(re(rng), im(rng));
    const cplx dx = (theta(z + h, p, t).total - theta(z - h, p, t).total) / (2.0 * h);
    const cplx dy = (theta(z + cplx(0, h), p, t).total - theta(z - cplx(0, h), p, t).total) /
                    cplx(0.0, 2.0 * h);
    CHECK(std::abs(dx - dy) <= 1e-6 * std::max(1.0, std::abs(dx)));
  }
}

TEST_CASE("mgf normalisation, bounds and the martingale property") {
  const MarketContext ctx(oracle::kSpot, oracle::kRate);
  for (const auto& base : {oracle::published(), with_drift()}) {
    const auto p = base.risk_neutral(ctx.rate());
    for (int i = 0; i < 8; ++i) {
      const double T = oracle::kDays[i] / 365.0;
      const double z = oracle::kZ[i];
      CHECK(mgf(cplx(0.0), p, ctx.log_spot(), z, T) == cplx(1.0));
      const cplx one = mgf(cplx(1.0), p, ctx.log_spot(), z, T);
      const double expect = std::exp(ctx.log_spot() + ctx.rate() * T);
      CHECK(std::abs(one - expect) <= 1e-8 * expect);
      CHECK(std::abs(mgf(cplx(0.0, 17.0), p, ctx.log_spot(), z, T)) <= 1.0 + 1e-14);
    }
  }
}

TEST_CASE("log-convexity of the mgf on the real axis") {
  const auto p = oracle::published();
  const double T = 0.5;
  const double delta = strip_delta(p, T).delta;
  const int n = 40;
  std::vector<double> lg;
  for (int i = 0; i <= n; ++i) {
    const double u = -0.95 * delta + 1.9 * delta * i / n;
    lg.push_back(std::log(mgf(cplx(u), p, 0.0, 0.01, T).real()));
  }
  for (int i = 1; i < n; ++i) CHECK(lg[i - 1] - 2.0 * lg[i] + lg[i + 1] >= -1e-12);
}

TEST_CASE("MgfEvaluator agrees with mgf") {
  const MarketContext ctx(oracle::kSpot, oracle::kRate);
  const auto p = with_drift().risk_neutral(ctx.rate());
  const double T = 0.4;
  const MgfEvaluator ev(p, ctx.log_spot(), 0.02, T);
  const double delta = ev.strip().delta;
  for (cplx u : {cplx(0.3), cplx(0.5 * delta, 3.0), cplx(-0.8 * delta, 30.0), cplx(1.1, 60.0)}) {
    const cplx a = ev.log_mgf(u);
    const cplx b = std::log(mgf(u, p, ctx.log_spot(), 0.02, T));
    // compare modulo 2 pi i
    CHECK(std::abs(std::exp(a - b) - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS((void)ev.log_mgf(cplx(delta, 0.0)), DomainError);
}

TEST_CASE("ZCurve validation") {
  CHECK_NOTHROW(ZCurve({{0.1, 0.001}, {0.2, 0.003}}));
  CHECK_THROWS_AS(ZCurve({{0.2, 0.001}, {0.1, 0.003}}), InputError);
  CHECK_THROWS_AS(ZCurve({{0.1, 0.001}, {0.1, 0.003}}), InputError);
  CHECK_THROWS_AS(ZCurve({{0.1, -1e-6}}), InputError);
  CHECK_NOTHROW(ZCurve({{0.1, 0.003}, {0.2, 0.001}}));
  CHECK_THROWS_AS(ZCurve({{0.1, 0.003}, {0.2, 0.001}}, true), InputError);
  const ZCurve c({{0.1, 0.001}, {0.2, 0.003}});
  CHECK(c.is_nondecreasing());
  CHECK(c.at(0.2).value() == 0.003);
  CHECK_FALSE(c.at(0.15).has_value());
}

}
