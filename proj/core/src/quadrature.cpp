#include "supou/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>

#include "gsl_support.hpp"
#include "supou/errors.hpp"

namespace supou {

namespace detail {

// Errors are reported through return codes; the default handler would abort.
void silence_gsl() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

}  // namespace detail

GammaRule gamma_rule(double shape, int n) {
  if (!(shape > 0.0) || n < 1) {
    throw DomainError("gamma_rule: need shape > 0 and n >= 1");
  }
  // Weight (x - 0)^(shape - 1) e^{-x}; nodes/weights via GSL's Golub-Welsch.
  detail::silence_gsl();
  std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_laguerre, static_cast<std::size_t>(n),
                                  0.0, 1.0, shape - 1.0, 0.0),
      &gsl_integration_fixed_free);
  if (!ws) throw NumericalError("gamma_rule: node construction failed");

  const double* x = gsl_integration_fixed_nodes(ws.get());
  const double* w = gsl_integration_fixed_weights(ws.get());
  GammaRule rule;
  rule.nodes.assign(x, x + n);
  rule.weights.assign(w, w + n);
  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  if (!std::isfinite(total) || !(total > 0.0)) {
    throw NumericalError("gamma_rule: non-finite weights");
  }
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    if (!std::isfinite(rule.nodes[k]) || rule.nodes[k] <= 0.0 || rule.weights[k] < 0.0) {
      throw NumericalError("gamma_rule: invalid node");
    }
    rule.weights[k] /= total;
  }
  return rule;
}

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights at kXgk[1], kXgk[3], kXgk[5], kXgk[7].
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  std::vector<double> value;
  std::vector<double> error;
  bool splittable = true;
};

Panel kronrod15(const VectorIntegrand& f, std::size_t dim, double lo, double hi,
                std::vector<double>& scratch) {
  Panel p{lo, hi, std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  std::vector<double> gauss(dim, 0.0);
  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  scratch.resize(dim);
  for (std::size_t j = 0; j < kXgk.size(); ++j) {
    const int signs = (j == 7) ? 1 : 2;
    for (int s = 0; s < signs; ++s) {
      const double x = centre + (s == 0 ? half : -half) * kXgk[j];
      f(x, scratch);
      for (std::size_t c = 0; c < dim; ++c) {
        p.value[c] += kWgk[j] * scratch[c];
        if (j % 2 == 1) gauss[c] += kWg[j / 2] * scratch[c];
      }
    }
  }
  for (std::size_t c = 0; c < dim; ++c) {
    p.value[c] *= half;
    gauss[c] *= half;
    p.error[c] = std::abs(p.value[c] - gauss[c]);
  }
  // Below this width further bisection only resolves rounding noise.
  p.splittable = std::abs(half) > 64.0 * std::numeric_limits<double>::epsilon() *
                                     std::max(std::abs(lo), std::abs(hi));
  return p;
}

}  // namespace

KronrodResult integrate_kronrod(const VectorIntegrand& f, std::size_t dimension, double lo,
                                double hi, double abs_tol, double rel_tol, int max_intervals) {
  KronrodResult out;
  out.value.assign(dimension, 0.0);
  if (dimension == 0 || lo == hi) {
    out.converged = true;
    return out;
  }
  std::vector<double> scratch;
  std::vector<Panel> panels;
  panels.push_back(kronrod15(f, dimension, lo, hi, scratch));
  out.evaluations = 15;

  std::vector<double> total(dimension), total_err(dimension);
  for (;;) {
    std::fill(total.begin(), total.end(), 0.0);
    std::fill(total_err.begin(), total_err.end(), 0.0);
    for (const auto& p : panels) {
      for (std::size_t c = 0; c < dimension; ++c) {
        total[c] += p.value[c];
        total_err[c] += p.error[c];
      }
    }
    bool ok = true;
    for (std::size_t c = 0; c < dimension; ++c) {
      const double tol = std::max(abs_tol, rel_tol * std::abs(total[c]));
      if (total_err[c] > tol) ok = false;
    }
    if (ok) {
      out.converged = true;
      break;
    }
    if (static_cast<int>(panels.size()) >= max_intervals) break;

    // Split the panel with the largest error relative to the current tolerance.
    std::size_t worst = panels.size();
    double worst_score = -1.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      if (!panels[i].splittable) continue;
      double score = 0.0;
      for (std::size_t c = 0; c < dimension; ++c) {
        const double tol = std::max(abs_tol, rel_tol * std::abs(total[c]));
        score = std::max(score, panels[i].error[c] / std::max(tol, 1e-300));
      }
      if (score > worst_score) {
        worst_score = score;
        worst = i;
      }
    }
    if (worst == panels.size()) break;
    const double a = panels[worst].lo;
    const double b = panels[worst].hi;
    const double mid = 0.5 * (a + b);
    panels[worst] = kronrod15(f, dimension, a, mid, scratch);
    panels.push_back(kronrod15(f, dimension, mid, b, scratch));
    out.evaluations += 30;
  }

  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
  std::fill(total.begin(), total.end(), 0.0);
  std::fill(total_err.begin(), total_err.end(), 0.0);
  for (const auto& p : panels) {
    for (std::size_t c = 0; c < dimension; ++c) {
      total[c] += p.value[c];
      total_err[c] += p.error[c];
    }
  }
  out.value = total;
  out.error = *std::max_element(total_err.begin(), total_err.end());
  out.intervals = static_cast<int>(panels.size());
  return out;
}

double integrate_kronrod(const std::function<double(double)>& f, double lo, double hi,
                         double abs_tol, double rel_tol, int max_intervals, double* error) {
  const auto r = integrate_kronrod([&](double x, std::span<double> out) { out[0] = f(x); }, 1,
                                   lo, hi, abs_tol, rel_tol, max_intervals);
  if (error) *error = r.error;
  return r.value[0];
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace supou
