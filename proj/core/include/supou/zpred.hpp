#pragma once

#include <string>
#include <vector>

#include "supou/charfn.hpp"
#include "supou/model.hpp"

namespace supou {

// Covariance kernel of the pre-time-0 functional t -> z_t. Uses B, alpha
// for the decay law and a, b through the second jump moment 2a/b^2.
class ZCovKernel {
 public:
  explicit ZCovKernel(const GammaSupOUParams& p);

  [[nodiscard]] const GammaSupOUParams& params() const { return p_; }

  // cov(z_t, z_u); symmetric in (t, u) bit for bit, zero when t or u is 0.
  [[nodiscard]] double cov(double t, double u) const;
  // E over the decay law of (1 - e^{At}) / A^2.
  [[nodiscard]] double past_moment(double t) const;
  [[nodiscard]] double mean(double t, double gamma0) const;

  [[nodiscard]] std::vector<std::vector<double>> gram(const std::vector<double>& times) const;

 private:
  GammaSupOUParams p_;
  double scale_;  // |B|
  double shape_;  // alpha
};

[[nodiscard]] double z_cov(double t, double u, const ZCovKernel& kernel);
// E z_t = (gamma0 + a/b) E[(1 - e^{At}) / A^2].
[[nodiscard]] double z_mean(double t, const ZCovKernel& kernel, double gamma0);

struct ZPrediction {
  double value = 0.0;
  double unclamped = 0.0;
  double variance = 0.0;  // cov(t*, t*) - k^T K^+ k
  int rank = 0;           // eigenvalues of K kept by the pseudo-inverse
  std::vector<std::string> warnings;
};

// Best linear predictor m(t*) + k^T K^+ (z - m); negative values are clamped
// to 0 with a warning.
[[nodiscard]] ZPrediction blp_z_detail(double t_star, const ZCurve& curve, const ZCovKernel& kernel,
                                       double gamma0);
[[nodiscard]] double blp_z(double t_star, const ZCurve& curve, const ZCovKernel& kernel,
                           double gamma0);

struct ZInterpolation {
  double value = 0.0;
  std::vector<std::string> warnings;
};

// Monotone piecewise-cubic (PCHIP) interpolation of a nondecreasing curve,
// constant beyond the first and last knots. Throws InputError for fewer than
// two knots or decreasing values.
[[nodiscard]] ZInterpolation interpolate_z_detail(double t_star, const ZCurve& curve);
[[nodiscard]] double interpolate_z(double t_star, const ZCurve& curve);

}  // namespace supou
