#include "uwbfuse/statkernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <math.h>
#include <limits>
#include <numbers>
#include <string>

namespace uwbfuse::stats {

namespace {

constexpr double kLogTailSwitch = 1e-280;

// std::lgamma writes the global signgam on glibc; the reentrant form does not.
double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + ": argument must be finite");
  }
}

// Acklam's rational approximation to the lower-tail normal quantile
// (relative error about 1.15e-9). Used only as a starting point.
double acklam_lower_quantile(double p) {
  static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                              -2.759285104469687e+02, 1.383577518672690e+02,
                                              -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                              -1.556989798598866e+02, 6.680131188771972e+01,
                                              -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                              -2.400758277161838e+00, -2.549732539343734e+00,
                                              4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log1p(-p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// Series for P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(a * std::log(x) - x - log_gamma(a));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(a * std::log(x) - x - log_gamma(a)) * h;
}

void validate_gamma_args(double a, double x) {
  require_finite(a, "regularized gamma");
  require_finite(x, "regularized gamma");
  if (a <= 0.0) throw std::domain_error("regularized gamma: shape must be positive");
}

constexpr double kRelativeTermFloor = 1e-17;

// Index of the largest Poisson(mean) weight and that weight.
struct PoissonMode {
  long index;
  double weight;
};

PoissonMode poisson_mode(double mean) {
  if (mean == 0.0) return {0, 1.0};
  const long j = static_cast<long>(std::floor(mean));
  const double log_w = -mean + j * std::log(mean) - log_gamma(static_cast<double>(j) + 1.0);
  return {j, std::exp(log_w)};
}

// Sums w_j * f(j) over Poisson(mean) weights outward from the mode until the
// accumulated weight exceeds kPoissonMassCutoff, then keeps adding upper terms
// until the weight alone is negligible against the sum (f <= 1 for the tail,
// and grows with j deep in the right tail).
template <typename Term>
double poisson_mixture(double mean, Term&& term) {
  const auto [mode, mode_weight] = poisson_mode(mean);
  double sum = mode_weight * term(mode);
  double mass = mode_weight;

  long up = mode;
  double w_up = mode_weight;
  long down = mode;
  double w_down = mode_weight;
  while (mass < kPoissonMassCutoff) {
    const double next_up = w_up * mean / static_cast<double>(up + 1);
    const double next_down = down > 0 ? w_down * static_cast<double>(down) / mean : 0.0;
    if (next_up == 0.0 && next_down == 0.0) break;
    if (next_up >= next_down) {
      ++up;
      w_up = next_up;
      sum += w_up * term(up);
      mass += w_up;
    } else {
      --down;
      w_down = next_down;
      sum += w_down * term(down);
      mass += w_down;
    }
  }
  for (;;) {
    const double next_up = w_up * mean / static_cast<double>(up + 1);
    if (!(next_up > kRelativeTermFloor * sum)) break;
    ++up;
    w_up = next_up;
    sum += w_up * term(up);
  }
  return sum;
}

bool use_series(const NoncentralChiSq& params) {
  return params.dof + params.noncentrality <= kNoncentralSeriesLimit;
}

double chisq_pdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  const double k = 0.5 * dof;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - log_gamma(k));
}

}  // namespace

Probability::Probability(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::domain_error("probability outside [0, 1]: " + std::to_string(value));
  }
}

double normal_tail(double x) {
  require_finite(x, "normal_tail");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double log_normal_tail(double x) {
  require_finite(x, "log_normal_tail");
  if (x < 30.0) return std::log(normal_tail(x));
  // Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...)))), evaluated bottom-up.
  double cf = x;
  for (int k = 80; k >= 1; --k) cf = x + k / cf;
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(cf);
}

double normal_tail_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_tail_inv: p must lie in (0, 1)");
  }
  if (p > 0.5) return -normal_tail_inv(1.0 - p);

  double x = -acklam_lower_quantile(p);
  if (p >= kLogTailSwitch) {
    for (int step = 0; step < 2; ++step) {
      x += (normal_tail(x) - p) / normal_pdf(x);
    }
    return x;
  }
  // Deep tail: Newton on log Q(x) - log p.
  const double log_p = std::log(p);
  for (int step = 0; step < 4; ++step) {
    const double log_q = log_normal_tail(x);
    const double hazard =
        std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - log_q);
    x += (log_q - log_p) / hazard;
  }
  return x;
}

double regularized_gamma_p(double a, double x) {
  validate_gamma_args(a, x);
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  validate_gamma_args(a, x);
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_continued_fraction(a, x);
}

double chisq_tail(double x, double dof) {
  require_finite(x, "chisq_tail");
  if (!(dof > 0.0)) throw std::domain_error("chisq_tail: dof must be positive");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

NoncentralChiSq NoncentralChiSq::make(double dof, double noncentrality) {
  if (!std::isfinite(dof) || !(dof > 0.0)) {
    throw std::domain_error("non-central chi-square: dof must be positive and finite");
  }
  if (!std::isfinite(noncentrality) || noncentrality < 0.0) {
    throw std::domain_error("non-central chi-square: noncentrality must be non-negative");
  }
  return NoncentralChiSq{dof, noncentrality};
}

double noncentral_chisq_tail(double x, const NoncentralChiSq& params) {
  require_finite(x, "noncentral_chisq_tail");
  (void)NoncentralChiSq::make(params.dof, params.noncentrality);
  if (x <= 0.0) return 1.0;

  if (!use_series(params)) {
    return normal_tail((x - params.mean()) / std::sqrt(params.variance()));
  }
  const double half_x = 0.5 * x;
  const double half_dof = 0.5 * params.dof;
  const double tail = poisson_mixture(0.5 * params.noncentrality, [&](long j) {
    return regularized_gamma_q(half_dof + static_cast<double>(j), half_x);
  });
  return std::clamp(tail, 0.0, 1.0);
}

double noncentral_chisq_pdf(double x, const NoncentralChiSq& params) {
  (void)NoncentralChiSq::make(params.dof, params.noncentrality);
  if (x <= 0.0) return 0.0;
  if (!use_series(params)) {
    const double sd = std::sqrt(params.variance());
    return normal_pdf((x - params.mean()) / sd) / sd;
  }
  return poisson_mixture(0.5 * params.noncentrality, [&](long j) {
    return chisq_pdf(x, params.dof + 2.0 * static_cast<double>(j));
  });
}

double noncentral_chisq_tail_inv(double p, const NoncentralChiSq& params) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("noncentral_chisq_tail_inv: p must lie in (0, 1)");
  }
  (void)NoncentralChiSq::make(params.dof, params.noncentrality);

  double lo = 0.0;
  double hi = params.mean() + 20.0 * std::sqrt(params.variance());
  while (noncentral_chisq_tail(hi, params) > p) {
    lo = hi;
    hi *= 2.0;
  }
  // Invariant: tail(lo) >= p >= tail(hi).
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (noncentral_chisq_tail(mid, params) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double density = noncentral_chisq_pdf(x, params);
    if (!(density > 0.0)) break;
    const double next = x + (noncentral_chisq_tail(x, params) - p) / density;
    if (!(next > lo && next < hi)) break;
    x = next;
  }
  return x;
}

}  // namespace uwbfuse::stats
