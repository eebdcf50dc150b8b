#pragma once

// Synthetic basins: stochastic weather, a known-parameter model as the true
// hydrograph, and optional multiplicative (heteroscedastic) observation noise.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qhydro/calendar.hpp"
#include "qhydro/gr_models.hpp"
#include "qhydro/timeseries_io.hpp"

namespace qhydro::synthetic {

struct WeatherOptions {
  double p_wet_after_dry = 0.3;
  double p_wet_after_wet = 0.6;
  double mean_wet_depth = 8.0;  // mm
  double mean_temp = 10.0;      // degC
  double temp_amplitude = 12.0;
  double temp_noise = 3.0;
  double diurnal_half_range = 5.0;
};

struct BasinOptions {
  std::string basin_id = "synthetic";
  Date start = make_date(1980, 1, 1);
  std::size_t days = 0;
  double latitude_deg = 45.0;
  double area_km2 = 500.0;
  gr::ParameterSet truth = gr::ParameterSet::gr4j(350.0, 0.0, 90.0, 1.7);
  double noise_sigma = 0.0;  // log-space sd of the multiplicative noise
  std::uint64_t seed = 1;
  WeatherOptions weather{};
};

struct SyntheticBasin {
  BasinMeta meta;
  std::vector<RawDailyRecord> records;  // flow in mm/day
  ForcingSeries forcing;                // q_obs is the (noisy) observation
  std::vector<double> q_true;           // noise-free model output, one per day
  gr::ParameterSet truth;
};

inline SyntheticBasin make_basin(const BasinOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> depth(1.0 / opt.weather.mean_wet_depth);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticBasin b;
  b.meta = {opt.basin_id, opt.latitude_deg, opt.area_km2};
  b.truth = opt.truth;
  b.records.resize(opt.days);
  bool wet = false;
  for (std::size_t i = 0; i < opt.days; ++i) {
    auto& r = b.records[i];
    r.date = opt.start + std::chrono::days{static_cast<long>(i)};
    const double pw = wet ? opt.weather.p_wet_after_wet : opt.weather.p_wet_after_dry;
    wet = unif(rng) < pw;
    r.precip = wet ? depth(rng) : 0.0;
    const double season = std::sin(2.0 * std::numbers::pi * (day_of_year(r.date) - 105) / 365.0);
    const double t = opt.weather.mean_temp + opt.weather.temp_amplitude * season +
                     opt.weather.temp_noise * gauss(rng);
    const double half = opt.weather.diurnal_half_range * (0.5 + unif(rng));
    r.tmin = t - half;
    r.tmax = t + half;
  }

  b.forcing = build_forcing(b.records, b.meta, FlowUnit::mm_day);
  b.q_true = gr::simulate_span(opt.truth, b.forcing.precip, b.forcing.pet, b.forcing.start).q_sim;
  for (std::size_t i = 0; i < opt.days; ++i) {
    const double noise = opt.noise_sigma > 0.0 ? std::exp(opt.noise_sigma * gauss(rng)) : 1.0;
    b.records[i].flow = b.q_true[i] * noise;
    b.forcing.q_obs[i] = b.records[i].flow;
  }
  return b;
}

/// Draws GR4J parameters from a plausible sub-box of the calibration bounds.
inline gr::ParameterSet random_gr4j(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  return gr::ParameterSet::gr4j(logu(100.0, 1200.0), -2.0 + 3.0 * u(rng), logu(20.0, 300.0),
                                1.1 + 2.4 * u(rng));
}

}  // namespace qhydro::synthetic
