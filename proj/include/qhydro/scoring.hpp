#pragma once

// Quantile (pinball) and squared-error losses, average scores, relative
// scores, coverage and quantile-crossing diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qhydro/errors.hpp"

namespace qhydro::scoring {

inline void check_level(double a) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError(fmt::format("quantile level {} not in (0, 1)", a));
}

/// L(r; x, a) = (r - x)(1{x <= r} - a). Non-negative, zero iff r == x.
inline double quantile_loss(double r, double x, double a) {
  check_level(a);
  if (!std::isfinite(r) || !std::isfinite(x)) throw NumericError("non-finite loss argument");
  const double indicator = x <= r ? 1.0 : 0.0;
  return (r - x) * (indicator - a);
}

inline double squared_error(double r, double x) {
  if (!std::isfinite(r) || !std::isfinite(x)) throw NumericError("non-finite loss argument");
  return (r - x) * (r - x);
}

class LossSpec {
 public:
  enum class Kind { Quantile, SquaredError };

  static LossSpec quantile(double level) {
    check_level(level);
    return LossSpec(Kind::Quantile, level);
  }
  static LossSpec squared_error() { return LossSpec(Kind::SquaredError, 0.0); }

  Kind kind() const { return kind_; }
  bool is_quantile() const { return kind_ == Kind::Quantile; }
  /// Quantile level; only meaningful for quantile losses.
  double level() const { return level_; }

  double operator()(double r, double x) const {
    return is_quantile() ? quantile_loss(r, x, level_) : scoring::squared_error(r, x);
  }

  std::string kind_name() const { return is_quantile() ? "quantile" : "squared_error"; }
  std::string level_text() const { return is_quantile() ? fmt::format("{}", level_) : ""; }
  std::string label() const {
    return is_quantile() ? fmt::format("q{}", level_) : std::string("se");
  }

  bool operator==(const LossSpec&) const = default;

 private:
  LossSpec(Kind k, double a) : kind_(k), level_(a) {}
  Kind kind_;
  double level_;
};

/// Mean per-day loss over days where the observation is present (NaN
/// observations are masked out).
inline double average_score(std::span<const double> r, std::span<const double> x,
                            const LossSpec& spec) {
  if (r.size() != x.size()) throw DomainError("prediction and observation lengths differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::isnan(x[i])) continue;
    sum += spec(r[i], x[i]);
    ++n;
  }
  if (n == 0) throw EmptyScoreError("no observed days to score");
  return sum / static_cast<double>(n);
}

inline std::size_t count_observed(std::span<const double> x) {
  return static_cast<std::size_t>(
      std::count_if(x.begin(), x.end(), [](double v) { return !std::isnan(v); }));
}

/// Sorted sample backing an empirical distribution function.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> sample) : sorted_(std::move(sample)) {
    for (double v : sorted_)
      if (!std::isfinite(v)) throw NumericError("non-finite sample value");
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::span<const double> sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }

  /// Right-continuous empirical CDF.
  double cdf(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

 private:
  std::vector<double> sorted_;
};

/// inf{x : F(x) >= a}, i.e. the smallest order statistic x_(k) with k/n >= a.
inline double empirical_quantile(const EmpiricalDistribution& dist, double a) {
  check_level(a);
  if (dist.empty()) throw EmptyScoreError("empty sample");
  const auto s = dist.sorted();
  const double n = static_cast<double>(s.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(a * n));
  k = std::clamp<std::size_t>(k, 1, s.size());
  // a * n can land one ulp on either side of an integer.
  while (k > 1 && static_cast<double>(k - 1) / n >= a) --k;
  while (k < s.size() && static_cast<double>(k) / n < a) ++k;
  return s[k - 1];
}

inline double average_quantile_loss(std::span<const double> sample, double r, double a) {
  double sum = 0.0;
  for (double x : sample) sum += quantile_loss(r, x, a);
  return sum / static_cast<double>(sample.size());
}

struct ArgminResult {
  double minimizer = 0.0;
  double loss = 0.0;
};

/// Exhaustive search over constant predictions: every sample point plus a
/// uniform grid of `grid_points` over the sample range. Returns the smallest
/// candidate achieving the minimal average quantile loss.
inline ArgminResult pinball_argmin_check(std::span<const double> sample, double a,
                                         std::size_t grid_points = 1001) {
  check_level(a);
  if (sample.empty()) throw EmptyScoreError("empty sample");
  std::vector<double> candidates(sample.begin(), sample.end());
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  for (std::size_t i = 0; i < grid_points && *hi > *lo; ++i)
    candidates.push_back(*lo + (*hi - *lo) * static_cast<double>(i) /
                                   static_cast<double>(grid_points - 1));
  std::sort(candidates.begin(), candidates.end());
  ArgminResult best{candidates.front(), std::numeric_limits<double>::infinity()};
  for (double c : candidates) {
    const double l = average_quantile_loss(sample, c, a);
    if (l < best.loss) best = {c, l};
  }
  return best;
}

/// (bench - model) / bench; positive means the model improves on the benchmark.
inline double relative_score(double score_bench, double score_model) {
  if (!(score_bench > 0.0))
    throw DegenerateBenchmarkError(fmt::format("benchmark score {} is not positive", score_bench));
  return (score_bench - score_model) / score_bench;
}

/// Fraction of observations below the prediction, ties counted as one half.
/// Missing observations are masked.
inline double coverage(std::span<const double> r, std::span<const double> x) {
  if (r.size() != x.size()) throw DomainError("prediction and observation lengths differ");
  double below = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::isnan(x[i])) continue;
    if (x[i] < r[i])
      below += 1.0;
    else if (x[i] == r[i])
      below += 0.5;
    ++n;
  }
  if (n == 0) throw EmptyScoreError("no observed days for coverage");
  return below / static_cast<double>(n);
}

struct CrossingReport {
  double rate = 0.0;
  std::vector<std::size_t> days;  // indices where the lower-level series is strictly above
};

inline CrossingReport crossing_rate(std::span<const double> q_low, double level_low,
                                    std::span<const double> q_high, double level_high) {
  check_level(level_low);
  check_level(level_high);
  if (!(level_low < level_high)) throw DomainError("crossing check needs level_low < level_high");
  if (q_low.size() != q_high.size()) throw DomainError("series lengths differ");
  CrossingReport rep;
  for (std::size_t i = 0; i < q_low.size(); ++i)
    if (q_low[i] > q_high[i]) rep.days.push_back(i);
  if (!q_low.empty())
    rep.rate = static_cast<double>(rep.days.size()) / static_cast<double>(q_low.size());
  return rep;
}

/// Conventional median: mean of the two central values on even counts.
inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace qhydro::scoring
