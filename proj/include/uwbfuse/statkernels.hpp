#pragma once

// Probability kernels used by the detector performance curves: the standard
// normal tail Q(x) and its inverse, and the central / non-central chi-square
// upper tails with their inverse.
//
// All functions are pure and thread-safe.

#include <stdexcept>

namespace uwbfuse::stats {

/// A value in [0, 1]. Construction outside that range throws std::domain_error.
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value);

  [[nodiscard]] constexpr double value() const { return value_; }
  constexpr auto operator<=>(const Probability&) const = default;

 private:
  double value_ = 0.0;
};

/// Q(x) = P(Z > x) for Z ~ N(0, 1). Throws std::invalid_argument on non-finite x.
double normal_tail(double x);

/// log Q(x), accurate far beyond the point where Q(x) underflows.
double log_normal_tail(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Inverse of normal_tail on (0, 1). Throws std::domain_error outside the open
/// interval.
double normal_tail_inv(double p);

/// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// Upper tail of the central chi-square distribution with `dof` degrees of freedom.
double chisq_tail(double x, double dof);

/// Parameters of a non-central chi-square distribution chi2_dof(noncentrality).
struct NoncentralChiSq {
  double dof = 1.0;
  double noncentrality = 0.0;

  /// Validating constructor: dof > 0 and noncentrality >= 0, both finite.
  static NoncentralChiSq make(double dof, double noncentrality);

  [[nodiscard]] double mean() const { return dof + noncentrality; }
  [[nodiscard]] double variance() const { return 2.0 * (dof + 2.0 * noncentrality); }
};

/// Above this value of dof + noncentrality the tail is evaluated with a
/// Gaussian approximation (mean dof + lambda, variance 2(dof + 2 lambda))
/// instead of the Poisson-mixture series.
inline constexpr double kNoncentralSeriesLimit = 2000.0;

/// Cumulative Poisson weight after which the mixture series stops.
inline constexpr double kPoissonMassCutoff = 1.0 - 1e-12;

/// P(X > x) for X ~ chi2_dof(noncentrality). Returns 1 for x <= 0.
double noncentral_chisq_tail(double x, const NoncentralChiSq& params);

/// Density of chi2_dof(noncentrality) at x (Gaussian density in the fallback regime).
double noncentral_chisq_pdf(double x, const NoncentralChiSq& params);

/// x such that noncentral_chisq_tail(x, params) = p, for p in (0, 1).
double noncentral_chisq_tail_inv(double p, const NoncentralChiSq& params);

}  // namespace uwbfuse::stats
