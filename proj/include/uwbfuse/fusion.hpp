#pragma once

// Decision fusion over L binary detector decisions: k-out-of-L counting rules
// and the MAP (Chair-Varshney) weighted rule.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uwbfuse/analytic.hpp"
#include "uwbfuse/detectors.hpp"

namespace uwbfuse {

struct DecisionVector {
  std::vector<Decision> decisions;
  std::vector<std::string> labels;

  /// Throws std::invalid_argument if empty or if labels are given with a different length.
  static DecisionVector make(std::vector<Decision> decisions, std::vector<std::string> labels = {});
  [[nodiscard]] std::size_t size() const { return decisions.size(); }
};

struct Priors {
  double h0 = 0.5;
  double h1 = 0.5;

  /// Throws std::domain_error unless both lie in (0, 1) and sum to 1 within 1e-12.
  static Priors make(double h0, double h1);
};

/// Operating points are clamped to [kClamp, 1 - kClamp] before taking logs.
inline constexpr double kOperatingPointClamp = 1e-12;

class FusionRule {
 public:
  enum class Kind { counting, map };

  /// H1 iff at least k of `detectors` decisions are H1. Throws std::domain_error unless 1 <= k <= L.
  static FusionRule counting(std::size_t k, std::size_t detectors);
  static FusionRule and_rule(std::size_t detectors) { return counting(detectors, detectors); }
  static FusionRule or_rule(std::size_t detectors) { return counting(1, detectors); }
  /// k = floor(L / 2) + 1.
  static FusionRule majority(std::size_t detectors) { return counting(detectors / 2 + 1, detectors); }

  /// Chair-Varshney weights from per-detector (P_D, P_FA).
  static FusionRule map(std::vector<OperatingPoint> operating_points, Priors priors = {});

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t k() const { return k_; }
  [[nodiscard]] std::size_t detectors() const { return detectors_; }
  [[nodiscard]] const std::vector<OperatingPoint>& operating_points() const { return points_; }
  [[nodiscard]] const Priors& priors() const { return priors_; }

  /// Contribution of detector i to the log posterior ratio:
  /// log(pd/pfa) when it decided H1, log((1-pd)/(1-pfa)) otherwise.
  [[nodiscard]] double term(std::size_t i, Decision d) const;
  [[nodiscard]] double log_prior_ratio() const { return log_prior_ratio_; }

 private:
  FusionRule() = default;

  Kind kind_ = Kind::counting;
  std::size_t k_ = 1;
  std::size_t detectors_ = 1;
  std::vector<OperatingPoint> points_;
  std::vector<double> weight_fire_;
  std::vector<double> weight_quiet_;
  Priors priors_;
  double log_prior_ratio_ = 0.0;
};

/// Sum of d_i >= k. Throws std::domain_error unless 1 <= k <= L.
Decision counting_fuse(std::span<const Decision> d, std::size_t k);
inline Decision counting_fuse(const DecisionVector& d, std::size_t k) { return counting_fuse(d.decisions, k); }

/// log Pr(H1|d) / Pr(H0|d) under conditionally independent decisions.
double map_llr(std::span<const Decision> d, const FusionRule& rule);
inline double map_llr(const DecisionVector& d, const FusionRule& rule) { return map_llr(d.decisions, rule); }

/// H1 iff map_llr > 0.
Decision map_fuse(std::span<const Decision> d, const FusionRule& rule);
inline Decision map_fuse(const DecisionVector& d, const FusionRule& rule) { return map_fuse(d.decisions, rule); }

/// Dispatches on rule.kind().
Decision fuse(std::span<const Decision> d, const FusionRule& rule);

}  // namespace uwbfuse
