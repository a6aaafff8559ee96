#pragma once

#include <complex>
#include <vector>

namespace supou {

using cplx = std::complex<double>;

// Parameter vector of the Gamma-supOU stochastic volatility model.
//
// The Levy basis is a compound Poisson subordinator with intensity
// `jump_intensity`, Exp(`jump_rate`) jump sizes and drift `basis_drift`.
// Every jump carries its own decay rate A = decay_scale * R with
// R ~ Gamma(decay_shape, 1). Log prices follow
//   dX = (drift + basis_drift + variance_loading * Sigma) dt + sqrt(Sigma) dW
//        + leverage * (dL - basis_drift dt).
//
// Invariants are checked on construction; every other function in the library
// assumes a validated instance.
class GammaSupOUParams {
 public:
  struct Fields {
    double leverage = 0.0;        // rho
    double jump_intensity = 0.0;  // a, per year
    double jump_rate = 0.0;       // b, inverse mean jump size
    double decay_scale = 0.0;     // B < 0
    double decay_shape = 0.0;     // alpha > 1
    double basis_drift = 0.0;     // gamma0 >= 0
    double drift = 0.0;           // mu
    double variance_loading = -0.5;  // beta
  };

  explicit GammaSupOUParams(const Fields& f);

  [[nodiscard]] const Fields& fields() const noexcept { return f_; }
  [[nodiscard]] double leverage() const noexcept { return f_.leverage; }
  [[nodiscard]] double jump_intensity() const noexcept { return f_.jump_intensity; }
  [[nodiscard]] double jump_rate() const noexcept { return f_.jump_rate; }
  [[nodiscard]] double decay_scale() const noexcept { return f_.decay_scale; }
  [[nodiscard]] double decay_shape() const noexcept { return f_.decay_shape; }
  [[nodiscard]] double basis_drift() const noexcept { return f_.basis_drift; }
  [[nodiscard]] double drift() const noexcept { return f_.drift; }
  [[nodiscard]] double variance_loading() const noexcept { return f_.variance_loading; }

  // E[1/|A|] under the decay-rate law.
  [[nodiscard]] double mean_inverse_decay() const noexcept;
  // Integral of x and x^2 against the jump measure.
  [[nodiscard]] double jump_first_moment() const noexcept;
  [[nodiscard]] double jump_second_moment() const noexcept;
  // (gamma0 + a/b) * E[1/|A|], the stationary mean of the variance process.
  [[nodiscard]] double stationary_variance_mean() const noexcept;

  // Copy with variance_loading = -1/2 and drift chosen so the discounted
  // price is a martingale at rate r. Throws DomainError if leverage >= jump_rate.
  [[nodiscard]] GammaSupOUParams risk_neutral(double rate) const;

 private:
  Fields f_;
};

class MarketContext {
 public:
  MarketContext(double spot, double rate, double day_count = 365.0);

  [[nodiscard]] double spot() const noexcept { return spot_; }
  [[nodiscard]] double rate() const noexcept { return rate_; }
  [[nodiscard]] double day_count() const noexcept { return day_count_; }
  [[nodiscard]] double log_spot() const noexcept;
  [[nodiscard]] double years(double days) const noexcept { return days / day_count_; }
  [[nodiscard]] double discount(double maturity) const noexcept;

 private:
  double spot_;
  double rate_;
  double day_count_;
};

// Half-width of the strip |Re u| < delta on which the conditional moment
// generating function of X_T is analytic.
struct Strip {
  double delta = 0.0;
  double epsilon = 0.0;  // exponential-moment bound of the jump measure
  double maturity = 0.0;
};

// gamma0 * u + integral (e^{ux} - 1) nu(dx) = gamma0 * u + a u / (b - u).
// Throws DomainError when Re(u) >= b.
[[nodiscard]] cplx cumulant_transform(cplx u, const GammaSupOUParams& p);

// Value of mu + gamma0 that makes e^{-rt} S_t a martingale: r - a rho / (b - rho).
[[nodiscard]] double martingale_drift(const GammaSupOUParams& p, double rate);

// Positive root of (T/2) d^2 + (T|beta| + |rho|) d - b = 0.
[[nodiscard]] Strip strip_delta(const GammaSupOUParams& p, double maturity);

struct DecayNode {
  double decay;   // A_k < 0
  double weight;  // w_k > 0, sum to 1
};

// Gauss rule for integrals g(A) against the decay-rate law, A = B * R with
// R ~ Gamma(alpha, 1). Exact for g polynomial in A up to degree 2n - 1.
[[nodiscard]] std::vector<DecayNode> pi_quadrature(double alpha, double decay_scale, int n);

}  // namespace supou
