#pragma once

// Parameter estimation: lattice screening in transformed parameter space
// followed by a compass (coordinate pattern) search that halves its step
// whenever no axis move improves the objective.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "qhydro/errors.hpp"
#include "qhydro/gr_models.hpp"
#include "qhydro/log.hpp"
#include "qhydro/scoring.hpp"
#include "qhydro/timeseries_io.hpp"

namespace qhydro::calib {

using gr::ModelVariant;
using gr::ParameterSet;

struct Bound {
  double lo;
  double hi;
};

// x1..x6
inline constexpr std::array<Bound, 6> kParameterBounds{
    {{1e-2, 3000.0}, {-10.0, 10.0}, {1e-2, 1000.0}, {0.5, 10.0}, {-4.0, 4.0}, {1e-2, 100.0}}};

enum class Scale { Log, Asinh, Identity };

inline constexpr std::array<Scale, 6> kParameterScales{Scale::Log, Scale::Asinh, Scale::Log,
                                                       Scale::Log, Scale::Identity, Scale::Log};

inline double forward(Scale s, double v) {
  switch (s) {
    case Scale::Log: return std::log(v);
    case Scale::Asinh: return std::asinh(v);
    case Scale::Identity: return v;
  }
  return v;
}

inline double inverse(Scale s, double t) {
  switch (s) {
    case Scale::Log: return std::exp(t);
    case Scale::Asinh: return std::sinh(t);
    case Scale::Identity: return t;
  }
  return t;
}

inline bool within_bounds(const ParameterSet& p) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p.x[i] >= kParameterBounds[i].lo && p.x[i] <= kParameterBounds[i].hi)) return false;
  return true;
}

/// Maps a variant's parameters to the unbounded search coordinates and back.
class ParamTransform {
 public:
  explicit ParamTransform(ModelVariant v) : variant_(v) {}

  ModelVariant variant() const { return variant_; }
  std::size_t dims() const { return gr::param_count(variant_); }

  std::vector<double> to_transformed(const ParameterSet& p) const {
    if (p.variant != variant_) throw DomainError("parameter set variant mismatch");
    std::vector<double> t(dims());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = forward(kParameterScales[i], p.x[i]);
    return t;
  }

  /// Inverse map; results are clamped into the parameter box.
  ParameterSet from_transformed(std::span<const double> t) const {
    if (t.size() != dims()) throw DomainError("transformed vector has wrong dimension");
    ParameterSet p{variant_, {}};
    for (std::size_t i = 0; i < t.size(); ++i)
      p.x[i] = std::clamp(inverse(kParameterScales[i], t[i]), kParameterBounds[i].lo,
                          kParameterBounds[i].hi);
    return p;
  }

  std::vector<double> lower() const { return edge(true); }
  std::vector<double> upper() const { return edge(false); }

 private:
  std::vector<double> edge(bool low) const {
    std::vector<double> e(dims());
    for (std::size_t i = 0; i < e.size(); ++i)
      e[i] = forward(kParameterScales[i], low ? kParameterBounds[i].lo : kParameterBounds[i].hi);
    return e;
  }

  ModelVariant variant_;
};

struct CalibOptions {
  int design = 5;              // screening points per dimension
  double initial_step = 0.64;  // transformed units
  double shrink = 0.5;
  double stop_step = 1e-3;
  int max_iterations = 200;
  std::uint64_t seed = 0;  // recorded with results; the search itself is deterministic

  void validate() const {
    if (design < 1) throw ConfigError("screening design size must be >= 1");
    if (!(initial_step > 0.0)) throw ConfigError("initial step must be > 0");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("step shrink factor must be in (0, 1)");
    if (!(stop_step > 0.0)) throw ConfigError("stop step must be > 0");
    if (!(stop_step < initial_step)) throw ConfigError("stop step must be below the initial step");
    if (max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  }
};

struct TracePoint {
  int iteration;
  double score;
};

struct SearchResult {
  std::vector<double> point;  // transformed coordinates
  double score = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  std::vector<TracePoint> trace;
  int iterations = 0;
  bool converged = false;
};

/// Compass search over a box. `objective` maps a transformed point to a
/// score; +inf marks an infeasible point. Among equally good neighbours the
/// lowest axis wins, negative direction first.
template <typename Objective>
SearchResult local_search(std::vector<double> start, Objective&& objective,
                          std::span<const double> lower, std::span<const double> upper,
                          const CalibOptions& options) {
  options.validate();
  if (start.size() != lower.size() || start.size() != upper.size())
    throw DomainError("search dimension mismatch");
  for (std::size_t i = 0; i < start.size(); ++i)
    if (!(start[i] >= lower[i] && start[i] <= upper[i]))
      throw BoundsError("search start outside the box");

  SearchResult res;
  res.point = std::move(start);
  res.score = objective(std::span<const double>(res.point));
  res.evaluations = 1;
  res.trace.push_back({0, res.score});

  double step = options.initial_step;
  std::vector<double> probe;
  std::vector<double> best_probe;
  while (step >= options.stop_step && res.iterations < options.max_iterations) {
    ++res.iterations;
    double best = res.score;
    bool moved = false;
    for (std::size_t axis = 0; axis < res.point.size(); ++axis) {
      for (double dir : {-1.0, 1.0}) {
        probe = res.point;
        probe[axis] = std::clamp(res.point[axis] + dir * step, lower[axis], upper[axis]);
        if (probe[axis] == res.point[axis]) continue;
        const double v = objective(std::span<const double>(probe));
        ++res.evaluations;
        if (v < best) {
          best = v;
          best_probe = probe;
          moved = true;
        }
      }
    }
    if (moved) {
      res.point = best_probe;
      res.score = best;
    } else {
      step *= options.shrink;
    }
    res.trace.push_back({res.iterations, res.score});
  }
  res.converged = step < options.stop_step;
  return res;
}

struct ScreenResult {
  ParameterSet best;
  double score = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

/// Midpoint lattice of design^d points in transformed space; design 1 gives
/// the box centre.
inline std::vector<std::vector<double>> screening_lattice(const ParamTransform& tf, int design) {
  const auto lo = tf.lower();
  const auto hi = tf.upper();
  const std::size_t d = tf.dims();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(design);
  std::vector<std::vector<double>> pts;
  pts.reserve(total);
  std::vector<int> digit(d, 0);
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> p(d);
    for (std::size_t i = 0; i < d; ++i)
      p[i] = lo[i] + (hi[i] - lo[i]) * (digit[i] + 0.5) / design;
    pts.push_back(std::move(p));
    for (std::size_t i = 0; i < d; ++i) {
      if (++digit[i] < design) break;
      digit[i] = 0;
    }
  }
  return pts;
}

/// Evaluates the lattice and returns the first candidate with the lowest score.
template <typename ParamObjective>
ScreenResult screen_with(ModelVariant variant, ParamObjective&& objective,
                         const CalibOptions& options) {
  options.validate();
  const ParamTransform tf(variant);
  ScreenResult res;
  bool found = false;
  for (const auto& t : screening_lattice(tf, options.design)) {
    const auto p = tf.from_transformed(t);
    const double v = objective(p);
    ++res.evaluations;
    if (v < res.score) {
      res.score = v;
      res.best = p;
      found = true;
    }
  }
  if (!found) throw ScreeningFailedError("every screening candidate failed");
  return res;
}

struct CalibrationResult {
  ParameterSet best;
  double score = std::numeric_limits<double>::infinity();
  double screened_score = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  std::vector<TracePoint> trace;
  bool converged = false;
};

/// Screening then compass search on an arbitrary parameter objective.
template <typename ParamObjective>
CalibrationResult calibrate_with(ModelVariant variant, ParamObjective&& objective,
                                 const CalibOptions& options) {
  const auto screened = screen_with(variant, objective, options);
  const ParamTransform tf(variant);
  const auto lo = tf.lower();
  const auto hi = tf.upper();
  auto start = tf.to_transformed(screened.best);
  for (std::size_t i = 0; i < start.size(); ++i) start[i] = std::clamp(start[i], lo[i], hi[i]);
  auto search = local_search(
      std::move(start),
      [&](std::span<const double> t) { return objective(tf.from_transformed(t)); }, lo, hi,
      options);

  CalibrationResult out;
  out.best = tf.from_transformed(search.point);
  out.score = search.score;
  out.screened_score = screened.score;
  out.evaluations = screened.evaluations + search.evaluations;
  out.trace = std::move(search.trace);
  out.converged = search.converged;
  return out;
}

/// Average loss over the calibration period after warm-up.
class CalibrationObjective {
 public:
  CalibrationObjective(const ForcingSeries& forcing, const PeriodSplit& periods,
                       scoring::LossSpec spec)
      : forcing_(forcing), index_(locate(forcing, periods)), spec_(spec) {
    const auto calib_obs =
        std::span(forcing.q_obs).subspan(index_.calibration, index_.validation - index_.calibration);
    if (scoring::count_observed(calib_obs) == 0)
      throw EmptyScoreError("calibration period has no observed flow");
  }

  double operator()(const ParameterSet& params) const {
    if (!within_bounds(params)) throw BoundsError("parameters outside calibration bounds");
    const auto n = index_.validation - index_.warmup;
    try {
      const auto run = gr::simulate_span(params, std::span(forcing_.precip).subspan(index_.warmup, n),
                                         std::span(forcing_.pet).subspan(index_.warmup, n),
                                         forcing_.date_at(index_.warmup),
                                         index_.calibration - index_.warmup);
      const auto obs = std::span(forcing_.q_obs)
                           .subspan(index_.calibration, index_.validation - index_.calibration);
      const double v = scoring::average_score(run.q_sim, obs, spec_);
      if (!std::isfinite(v)) throw NumericError("non-finite score");
      return v;
    } catch (const NumericError& e) {
      log_warning(fmt::format("objective evaluation failed: {}", e.what()));
      return std::numeric_limits<double>::infinity();
    }
  }

 private:
  const ForcingSeries& forcing_;
  SplitIndex index_;
  scoring::LossSpec spec_;
};

inline double objective(const ParameterSet& params, const ForcingSeries& forcing,
                        const PeriodSplit& periods, const scoring::LossSpec& spec) {
  return CalibrationObjective(forcing, periods, spec)(params);
}

inline ScreenResult screen(ModelVariant variant, const ForcingSeries& forcing,
                           const PeriodSplit& periods, const scoring::LossSpec& spec,
                           const CalibOptions& options) {
  return screen_with(variant, CalibrationObjective(forcing, periods, spec), options);
}

inline CalibrationResult calibrate(ModelVariant variant, const ForcingSeries& forcing,
                                   const PeriodSplit& periods, const scoring::LossSpec& spec,
                                   const CalibOptions& options) {
  return calibrate_with(variant, CalibrationObjective(forcing, periods, spec), options);
}

}  // namespace qhydro::calib
