#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace supou {

// Nodes and normalized weights for integrals against the Gamma(shape, 1)
// density: sum_k w_k g(r_k) ~= E[g(R)], R ~ Gamma(shape, 1).
struct GammaRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Generalized Gauss-Laguerre rule with exponent shape - 1. shape > 0, n >= 1.
// Throws NumericalError if the node construction fails.
[[nodiscard]] GammaRule gamma_rule(double shape, int n);

// Vector-valued integrand: writes f(x) into `out` (size = dimension).
using VectorIntegrand = std::function<void(double x, std::span<double> out)>;

struct KronrodResult {
  std::vector<double> value;
  double error = 0.0;  // max component error estimate
  int intervals = 0;
  int evaluations = 0;
  bool converged = false;
};

// Globally adaptive 7/15-point Gauss-Kronrod quadrature on [lo, hi] for a
// vector of integrands sharing the same abscissae. Bisects the interval with
// the largest error until max error <= max(abs_tol, rel_tol * max|value|) or
// `max_intervals` is reached. Deterministic: ties are broken by position.
[[nodiscard]] KronrodResult integrate_kronrod(const VectorIntegrand& f, std::size_t dimension,
                                              double lo, double hi, double abs_tol,
                                              double rel_tol, int max_intervals = 2000);

// Scalar-valued convenience wrapper.
[[nodiscard]] double integrate_kronrod(const std::function<double(double)>& f, double lo,
                                       double hi, double abs_tol, double rel_tol,
                                       int max_intervals = 2000, double* error = nullptr);

// Pairwise (cascade) summation; fixed reduction order.
[[nodiscard]] double pairwise_sum(std::span<const double> values);

}  // namespace supou
