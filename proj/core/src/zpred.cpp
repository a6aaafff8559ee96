#include "supou/zpred.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/interpolators/cubic_hermite.hpp>

#include "supou/errors.hpp"
#include "supou/quadrature.hpp"

namespace supou {

namespace {

// expm1(eps * L) / eps, continuous through eps = 0.
double expm1_ratio(double eps, double log_term) {
  const double x = eps * log_term;
  if (std::abs(x) < 1e-4) {
    return log_term * (1.0 + x / 2.0 * (1.0 + x / 3.0 * (1.0 + x / 4.0 * (1.0 + x / 5.0))));
  }
  return std::expm1(x) / eps;
}

// Fritsch-Butland slopes; zero wherever the data is locally flat.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] > 0.0) {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) s = 3.0 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace

ZCovKernel::ZCovKernel(const GammaSupOUParams& p)
    : p_(p), scale_(std::abs(p.decay_scale())), shape_(p.decay_shape()) {}

// With A = B R and E[R^{-1} e^{-sR}] = (1 + s)^{1 - alpha} / (alpha - 1), the
// A-integral becomes a double integral of (1 + y + w)^{1 - alpha} over
// [0, |B| t] x [0, |B| u]; the w-integral is done in closed form.
double ZCovKernel::cov(double t, double u) const {
  if (!(t >= 0.0) || !(u >= 0.0)) throw DomainError("z_cov: times must be >= 0");
  if (t == 0.0 || u == 0.0) return 0.0;
  const double c = scale_ * std::min(t, u);
  const double d = scale_ * std::max(t, u);
  const double eps = 2.0 - shape_;
  auto inner = [&](double y) {
    return std::exp(eps * std::log1p(y)) * expm1_ratio(eps, std::log1p(d / (1.0 + y)));
  };
  double err = 0.0;
  const double value = integrate_kronrod(inner, 0.0, c, 0.0, 1e-13, 2000, &err);
  if (!(err <= 1e-11 * std::abs(value))) {
    throw NumericalError("z_cov: quadrature did not converge");
  }
  const double b = p_.jump_rate();
  return p_.jump_intensity() / (b * b * scale_ * scale_ * scale_ * (shape_ - 1.0)) * value;
}

double ZCovKernel::past_moment(double t) const {
  if (!(t >= 0.0)) throw DomainError("z_mean: time must be >= 0");
  if (t == 0.0) return 0.0;
  return expm1_ratio(2.0 - shape_, std::log1p(scale_ * t)) / (scale_ * scale_ * (shape_ - 1.0));
}

double ZCovKernel::mean(double t, double gamma0) const {
  return (gamma0 + p_.jump_first_moment()) * past_moment(t);
}

std::vector<std::vector<double>> ZCovKernel::gram(const std::vector<double>& times) const {
  const std::size_t n = times.size();
  std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) g[i][j] = g[j][i] = cov(times[i], times[j]);
  }
  return g;
}

double z_cov(double t, double u, const ZCovKernel& kernel) { return kernel.cov(t, u); }

double z_mean(double t, const ZCovKernel& kernel, double gamma0) {
  return kernel.mean(t, gamma0);
}

ZPrediction blp_z_detail(double t_star, const ZCurve& curve, const ZCovKernel& kernel,
                         double gamma0) {
  if (curve.empty()) throw InputError("blp_z: z-curve has no knots");
  if (!(t_star >= 0.0)) throw DomainError("blp_z: maturity must be >= 0");
  const auto knots = curve.knots();
  const auto n = static_cast<Eigen::Index>(knots.size());

  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd cross(n), resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = knots[i].maturity;
    for (Eigen::Index j = i; j < n; ++j) {
      gram(i, j) = gram(j, i) = kernel.cov(ti, knots[j].maturity);
    }
    cross(i) = kernel.cov(t_star, ti);
    resid(i) = knots[i].z - kernel.mean(ti, gamma0);
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("blp_z: eigen-decomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::MatrixXd& vec = eig.eigenvectors();
  const double cutoff = 1e-10 * std::max(lambda.maxCoeff(), 0.0);

  ZPrediction out;
  double correction = 0.0;
  double explained = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(lambda(j) > cutoff)) continue;
    ++out.rank;
    const double kc = vec.col(j).dot(cross);
    correction += kc * vec.col(j).dot(resid) / lambda(j);
    explained += kc * kc / lambda(j);
  }
  out.unclamped = kernel.mean(t_star, gamma0) + correction;
  out.variance = kernel.cov(t_star, t_star) - explained;
  out.value = out.unclamped;
  if (out.value < 0.0) {
    out.value = 0.0;
    out.warnings.push_back("best linear predictor was negative; clamped to 0");
  }
  return out;
}

double blp_z(double t_star, const ZCurve& curve, const ZCovKernel& kernel, double gamma0) {
  return blp_z_detail(t_star, curve, kernel, gamma0).value;
}

ZInterpolation interpolate_z_detail(double t_star, const ZCurve& curve) {
  if (curve.size() < 2) throw InputError("interpolate_z: need at least two knots");
  if (!curve.is_nondecreasing()) throw InputError("interpolate_z: z-curve must be nondecreasing");
  const auto knots = curve.knots();
  ZInterpolation out;
  if (t_star <= knots.front().maturity || t_star >= knots.back().maturity) {
    const bool below = t_star <= knots.front().maturity;
    out.value = below ? knots.front().z : knots.back().z;
    const double edge = below ? knots.front().maturity : knots.back().maturity;
    if (t_star != edge) {
      out.warnings.push_back("maturity outside the knot range; z held constant");
    }
    return out;
  }
  std::vector<double> x, y;
  for (const auto& k : knots) {
    x.push_back(k.maturity);
    y.push_back(k.z);
  }
  auto d = pchip_slopes(x, y);
  const boost::math::interpolators::cubic_hermite spline(std::move(x), std::move(y), std::move(d));
  out.value = spline(t_star);
  return out;
}

double interpolate_z(double t_star, const ZCurve& curve) {
  return interpolate_z_detail(t_star, curve).value;
}

}  // namespace supou
