#include "uwbfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwbfuse {

DecisionVector DecisionVector::make(std::vector<Decision> decisions, std::vector<std::string> labels) {
  if (decisions.empty()) throw std::invalid_argument("decision vector: need at least one decision");
  if (!labels.empty() && labels.size() != decisions.size()) {
    throw std::invalid_argument("decision vector: labels do not align with decisions");
  }
  return DecisionVector{std::move(decisions), std::move(labels)};
}

Priors Priors::make(double h0, double h1) {
  if (!(h0 > 0.0 && h0 < 1.0 && h1 > 0.0 && h1 < 1.0) || std::fabs(h0 + h1 - 1.0) > 1e-12) {
    throw std::domain_error("priors must lie in (0, 1) and sum to 1");
  }
  return Priors{h0, h1};
}

FusionRule FusionRule::counting(std::size_t k, std::size_t detectors) {
  if (detectors == 0 || k < 1 || k > detectors) {
    throw std::domain_error("counting rule: k must satisfy 1 <= k <= L");
  }
  FusionRule rule;
  rule.kind_ = Kind::counting;
  rule.k_ = k;
  rule.detectors_ = detectors;
  return rule;
}

FusionRule FusionRule::map(std::vector<OperatingPoint> operating_points, Priors priors) {
  if (operating_points.empty()) throw std::invalid_argument("map rule: need at least one operating point");
  priors = Priors::make(priors.h0, priors.h1);

  FusionRule rule;
  rule.kind_ = Kind::map;
  rule.detectors_ = operating_points.size();
  rule.priors_ = priors;
  rule.log_prior_ratio_ = std::log(priors.h1 / priors.h0);
  for (auto& op : operating_points) {
    const double pd = std::clamp(op.pd.value(), kOperatingPointClamp, 1.0 - kOperatingPointClamp);
    const double pfa = std::clamp(op.pfa.value(), kOperatingPointClamp, 1.0 - kOperatingPointClamp);
    if (pd <= 0.0 || pd >= 1.0 || pfa <= 0.0 || pfa >= 1.0) {
      throw std::logic_error("map rule: operating point escaped clamping");
    }
    op = OperatingPoint{stats::Probability(pd), stats::Probability(pfa)};
    rule.weight_fire_.push_back(std::log(pd / pfa));
    rule.weight_quiet_.push_back(std::log1p(-pd) - std::log1p(-pfa));
  }
  rule.points_ = std::move(operating_points);
  return rule;
}

double FusionRule::term(std::size_t i, Decision d) const {
  if (kind_ != Kind::map) throw std::logic_error("term() is only defined for MAP rules");
  return d == Decision::h1 ? weight_fire_.at(i) : weight_quiet_.at(i);
}

Decision counting_fuse(std::span<const Decision> d, std::size_t k) {
  if (d.empty() || k < 1 || k > d.size()) throw std::domain_error("counting_fuse: k must satisfy 1 <= k <= L");
  const auto fired = static_cast<std::size_t>(std::count(d.begin(), d.end(), Decision::h1));
  return fired >= k ? Decision::h1 : Decision::h0;
}

double map_llr(std::span<const Decision> d, const FusionRule& rule) {
  if (rule.kind() != FusionRule::Kind::map) throw std::invalid_argument("map_llr: rule is not a MAP rule");
  if (d.size() != rule.detectors()) throw std::invalid_argument("map_llr: decision vector length mismatch");
  double llr = rule.log_prior_ratio();
  for (std::size_t i = 0; i < d.size(); ++i) llr += rule.term(i, d[i]);
  return llr;
}

Decision map_fuse(std::span<const Decision> d, const FusionRule& rule) {
  return map_llr(d, rule) > 0.0 ? Decision::h1 : Decision::h0;
}

Decision fuse(std::span<const Decision> d, const FusionRule& rule) {
  if (rule.kind() == FusionRule::Kind::map) return map_fuse(d, rule);
  if (d.size() != rule.detectors()) throw std::invalid_argument("fuse: decision vector length mismatch");
  return counting_fuse(d, rule.k());
}

}  // namespace uwbfuse
