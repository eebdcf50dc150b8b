#pragma once

// Daily lumped GR4J / GR5J / GR6J rainfall-runoff models.
//
// All depths are in mm and fluxes in mm/day. A day proceeds as: interception
// of min(P, E), production store gain or loss, percolation, unit-hydrograph
// routing of effective rainfall, groundwater exchange, then the routing store
// (and for GR6J the exponential store) and the direct branch.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "qhydro/calendar.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/timeseries_io.hpp"

namespace qhydro::gr {

enum class ModelVariant { GR4J, GR5J, GR6J };

inline constexpr std::array kAllVariants{ModelVariant::GR4J, ModelVariant::GR5J,
                                         ModelVariant::GR6J};

constexpr std::size_t param_count(ModelVariant v) {
  switch (v) {
    case ModelVariant::GR4J: return 4;
    case ModelVariant::GR5J: return 5;
    case ModelVariant::GR6J: return 6;
  }
  return 0;
}

constexpr std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::GR4J: return "GR4J";
    case ModelVariant::GR5J: return "GR5J";
    case ModelVariant::GR6J: return "GR6J";
  }
  return "?";
}

inline ModelVariant parse_variant(std::string_view s) {
  for (auto v : kAllVariants)
    if (to_string(v) == s) return v;
  throw ConfigError(fmt::format("unknown model variant '{}'", s));
}

/// x1 production capacity [mm], x2 exchange coefficient [mm/day], x3 routing
/// capacity [mm], x4 unit-hydrograph time base [day], x5 exchange threshold
/// [-], x6 exponential store scale [mm]. Unused trailing slots are ignored.
struct ParameterSet {
  ModelVariant variant = ModelVariant::GR4J;
  std::array<double, 6> x{};

  double x1() const { return x[0]; }
  double x2() const { return x[1]; }
  double x3() const { return x[2]; }
  double x4() const { return x[3]; }
  double x5() const { return x[4]; }
  double x6() const { return x[5]; }

  std::size_t size() const { return param_count(variant); }
  std::span<const double> values() const { return {x.data(), size()}; }

  void validate() const {
    for (double v : values())
      if (!std::isfinite(v)) throw NumericError("non-finite model parameter");
    if (!(x1() > 0.0)) throw DomainError("x1 must be > 0");
    if (!(x3() > 0.0)) throw DomainError("x3 must be > 0");
    if (!(x4() >= 0.5)) throw DomainError("x4 must be >= 0.5");
    if (variant == ModelVariant::GR6J && !(x6() > 0.0)) throw DomainError("x6 must be > 0");
  }

  static ParameterSet gr4j(double x1, double x2, double x3, double x4) {
    return {ModelVariant::GR4J, {x1, x2, x3, x4, 0.0, 0.0}};
  }
  static ParameterSet gr5j(double x1, double x2, double x3, double x4, double x5) {
    return {ModelVariant::GR5J, {x1, x2, x3, x4, x5, 0.0}};
  }
  static ParameterSet gr6j(double x1, double x2, double x3, double x4, double x5, double x6) {
    return {ModelVariant::GR6J, {x1, x2, x3, x4, x5, x6}};
  }

  bool operator==(const ParameterSet&) const = default;
};

enum class UnitHydrograph { UH1, UH2 };

inline double s_curve(UnitHydrograph which, double t, double x4) {
  if (t <= 0.0) return 0.0;
  if (which == UnitHydrograph::UH1) return t < x4 ? std::pow(t / x4, 2.5) : 1.0;
  if (t <= x4) return 0.5 * std::pow(t / x4, 2.5);
  if (t < 2.0 * x4) return 1.0 - 0.5 * std::pow(2.0 - t / x4, 2.5);
  return 1.0;
}

/// Ordinates of UH1 (length ceil(x4)) or UH2 (length ceil(2 x4)).
inline std::vector<double> uh_ordinates(double x4, UnitHydrograph which) {
  if (!(x4 >= 0.5)) throw DomainError("x4 must be >= 0.5");
  const double base = which == UnitHydrograph::UH1 ? x4 : 2.0 * x4;
  const auto n = static_cast<std::size_t>(std::ceil(base));
  std::vector<double> ord(n);
  for (std::size_t j = 0; j < n; ++j)
    ord[j] = s_curve(which, static_cast<double>(j + 1), x4) - s_curve(which, static_cast<double>(j), x4);
  return ord;
}

struct ModelState {
  double production = 0.0;   // s, 0 <= s <= x1
  double routing = 0.0;      // r, 0 <= r <= x3
  double exponential = 0.0;  // GR6J only, may be negative
  std::vector<double> uh1;   // pending depth released on day +k
  std::vector<double> uh2;

  double storage() const {
    return production + routing + exponential + std::accumulate(uh1.begin(), uh1.end(), 0.0) +
           std::accumulate(uh2.begin(), uh2.end(), 0.0);
  }
  bool operator==(const ModelState&) const = default;
};

inline ModelState init_state(const ParameterSet& p) {
  p.validate();
  ModelState s;
  s.production = 0.3 * p.x1();
  s.routing = 0.5 * p.x3();
  s.exponential = 0.0;
  s.uh1.assign(static_cast<std::size_t>(std::ceil(p.x4())), 0.0);
  s.uh2.assign(static_cast<std::size_t>(std::ceil(2.0 * p.x4())), 0.0);
  return s;
}

struct StepFluxes {
  double q = 0.0;
  double actual_et = 0.0;
  double net_rainfall = 0.0;      // Pn
  double production_gain = 0.0;   // Ps
  double production_loss = 0.0;   // Es
  double percolation = 0.0;
  double potential_exchange = 0.0;  // F
  double actual_exchange = 0.0;     // net water gained through exchange, all branches
  double routing_outflow = 0.0;     // Qr
  double direct_outflow = 0.0;      // Qd
  double exponential_outflow = 0.0;
};

/// Log(1 + exp(a)) without overflow.
inline double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

/// A parameterized model with precomputed unit-hydrograph ordinates.
class Model {
 public:
  explicit Model(const ParameterSet& params) : p_(params) {
    p_.validate();
    ord1_ = uh_ordinates(p_.x4(), UnitHydrograph::UH1);
    ord2_ = uh_ordinates(p_.x4(), UnitHydrograph::UH2);
  }

  const ParameterSet& params() const { return p_; }
  ModelState initial_state() const { return init_state(p_); }

  StepFluxes step(ModelState& st, double precip, double pet) const {
    if (!std::isfinite(precip) || !std::isfinite(pet))
      throw NumericError("non-finite forcing");
    if (precip < 0.0 || pet < 0.0) throw DomainError("negative forcing");
    if (st.uh1.size() != ord1_.size() || st.uh2.size() != ord2_.size())
      throw DomainError("state buffers do not match x4");

    StepFluxes f;
    const double x1 = p_.x1();
    const double x3 = p_.x3();
    double s = st.production;

    const double interception = std::min(precip, pet);
    const double pn = precip - interception;
    const double en = pet - interception;
    f.net_rainfall = pn;
    if (pn > 0.0) {
      const double tws = std::tanh(pn / x1);
      const double sr = s / x1;
      f.production_gain = x1 * (1.0 - sr * sr) * tws / (1.0 + sr * tws);
    } else if (en > 0.0) {
      const double tws = std::tanh(en / x1);
      const double sr = s / x1;
      f.production_loss = s * (2.0 - sr) * tws / (1.0 + (1.0 - sr) * tws);
    }
    s = std::clamp(s + f.production_gain - f.production_loss, 0.0, x1);

    const double sp = s / (2.25 * x1);
    const double sp2 = sp * sp;
    f.percolation = s * (1.0 - 1.0 / std::sqrt(std::sqrt(1.0 + sp2 * sp2)));
    s -= f.percolation;
    st.production = s;
    f.actual_et = interception + f.production_loss;

    const double effective = f.percolation + (pn - f.production_gain);

    double q9 = 0.0;
    double q1 = 0.0;
    double exchange = 0.0;
    switch (p_.variant) {
      case ModelVariant::GR4J:
      case ModelVariant::GR6J:
        q9 = convolve(st.uh1, ord1_, 0.9 * effective);
        q1 = convolve(st.uh2, ord2_, 0.1 * effective);
        break;
      case ModelVariant::GR5J: {
        const double routed = convolve(st.uh2, ord2_, effective);
        q9 = 0.9 * routed;
        q1 = 0.1 * routed;
        break;
      }
    }
    if (p_.variant == ModelVariant::GR4J)
      exchange = p_.x2() * std::pow(st.routing / x3, 3.5);
    else
      exchange = p_.x2() * (st.routing / x3 - p_.x5());
    f.potential_exchange = exchange;

    const double to_routing = p_.variant == ModelVariant::GR6J ? 0.6 * q9 : q9;
    double r = st.routing + to_routing + exchange;
    double gained = exchange;
    if (r < 0.0) {
      gained = -(st.routing + to_routing);
      r = 0.0;
    }
    const double rr = r / x3;
    const double rr2 = rr * rr;
    // Exactly below x3 in real arithmetic; rounding can overshoot by an ulp.
    st.routing = std::min(r / std::sqrt(std::sqrt(1.0 + rr2 * rr2)), x3);
    f.routing_outflow = r - st.routing;

    if (p_.variant == ModelVariant::GR6J) {
      const double x6 = p_.x6();
      const double e = st.exponential + 0.4 * q9 + exchange;
      f.exponential_outflow = x6 * softplus(e / x6);
      st.exponential = e - f.exponential_outflow;
      gained += exchange;
    }

    if (q1 + exchange < 0.0) {
      gained += -q1;
      f.direct_outflow = 0.0;
    } else {
      gained += exchange;
      f.direct_outflow = q1 + exchange;
    }
    f.actual_exchange = gained;
    f.q = f.routing_outflow + f.direct_outflow + f.exponential_outflow;
    if (!std::isfinite(f.q) || !std::isfinite(st.exponential))
      throw NumericError("non-finite model flux");
    return f;
  }

 private:
  // Adds `input` spread over the ordinates, releases today's share.
  static double convolve(std::vector<double>& buf, const std::vector<double>& ord, double input) {
    const std::size_t n = buf.size();
    for (std::size_t k = 0; k < n; ++k) buf[k] += ord[k] * input;
    const double out = buf[0];
    std::copy(buf.begin() + 1, buf.end(), buf.begin());
    buf[n - 1] = 0.0;
    return out;
  }

  ParameterSet p_;
  std::vector<double> ord1_;
  std::vector<double> ord2_;
};

/// One-day transition; returns the new state and the day's discharge.
inline std::pair<ModelState, double> step(const ParameterSet& params, ModelState state,
                                          double precip, double pet) {
  const Model model(params);
  const double q = model.step(state, precip, pet).q;
  return {std::move(state), q};
}

struct WaterBalance {
  double precipitation = 0.0;
  double actual_et = 0.0;
  double net_exchange = 0.0;
  double discharge = 0.0;
  double storage_start = 0.0;
  double storage_end = 0.0;
};

struct SimulationRun {
  Date start;                 // date of q_sim[0]
  std::vector<double> q_sim;  // mm/day
  ModelState final_state;
  WaterBalance balance;       // accumulated over every simulated day
};

/// Runs the model over aligned precipitation/PET spans. The first
/// `discard` days are simulated but left out of q_sim.
inline SimulationRun simulate_span(const ParameterSet& params, std::span<const double> precip,
                                   std::span<const double> pet, Date start = {},
                                   std::size_t discard = 0,
                                   std::optional<ModelState> initial = std::nullopt) {
  if (precip.size() != pet.size()) throw DomainError("forcing arrays differ in length");
  if (discard > precip.size()) throw BoundsError("discard exceeds series length");
  const Model model(params);
  SimulationRun run;
  run.start = start + std::chrono::days{static_cast<long>(discard)};
  ModelState st = initial ? std::move(*initial) : model.initial_state();
  run.balance.storage_start = st.storage();
  run.q_sim.reserve(precip.size() - discard);
  for (std::size_t i = 0; i < precip.size(); ++i) {
    StepFluxes f;
    try {
      f = model.step(st, precip[i], pet[i]);
    } catch (const Error& e) {
      throw NumericError(fmt::format("day {} ({}): {}", i,
                                     format_date(start + std::chrono::days{static_cast<long>(i)}),
                                     e.what()));
    }
    run.balance.precipitation += precip[i];
    run.balance.actual_et += f.actual_et;
    run.balance.net_exchange += f.actual_exchange;
    run.balance.discharge += f.q;
    if (i >= discard) run.q_sim.push_back(f.q);
  }
  run.balance.storage_end = st.storage();
  run.final_state = std::move(st);
  return run;
}

/// Simulates warm-up through validation; q_sim covers calibration and
/// validation days only.
inline SimulationRun simulate(const ParameterSet& params, const ForcingSeries& forcing,
                              const PeriodSplit& periods) {
  const auto ix = locate(forcing, periods);
  const auto n = ix.end - ix.warmup;
  return simulate_span(params, std::span(forcing.precip).subspan(ix.warmup, n),
                       std::span(forcing.pet).subspan(ix.warmup, n), forcing.date_at(ix.warmup),
                       ix.calibration - ix.warmup);
}

/// Signed water-balance residual [mm]; zero for exact accounting.
inline double mass_balance(const SimulationRun& run) {
  const auto& b = run.balance;
  return b.precipitation - b.actual_et - b.discharge - (b.storage_end - b.storage_start) +
         b.net_exchange;
}

}  // namespace qhydro::gr
