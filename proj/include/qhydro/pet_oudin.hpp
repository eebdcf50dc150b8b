#pragma once

// Temperature-based potential evapotranspiration (Oudin form) driven by
// daily extraterrestrial radiation from standard solar geometry.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "qhydro/calendar.hpp"
#include "qhydro/errors.hpp"

namespace qhydro::pet {

inline constexpr double kSolarConstant = 0.0820;   // MJ m-2 min-1
inline constexpr double kLatentHeat = 2.45;        // MJ kg-1, converts MJ m-2 to mm
inline constexpr double kTemperatureOffset = 5.0;  // degC
inline constexpr double kTemperatureScale = 100.0;

struct SolarContext {
  double latitude_rad = 0.0;
  int day_of_year = 1;

  void validate() const {
    if (!(std::abs(latitude_rad) <= std::numbers::pi / 2))
      throw DomainError("latitude outside [-pi/2, pi/2]");
    if (day_of_year < 1 || day_of_year > 366) throw DomainError("day of year outside 1..366");
  }
};

inline double seasonal_angle(int day_of_year) {
  return 2.0 * std::numbers::pi * day_of_year / 365.0;
}

/// Solar declination [rad].
inline double solar_declination(int day_of_year) {
  return 0.409 * std::sin(seasonal_angle(day_of_year) - 1.39);
}

/// Inverse relative Earth-Sun distance.
inline double inverse_relative_distance(int day_of_year) {
  return 1.0 + 0.033 * std::cos(seasonal_angle(day_of_year));
}

/// Sunset hour angle [rad]; 0 during polar night, pi during polar day.
inline double sunset_hour_angle(double latitude_rad, double declination) {
  const double c = std::clamp(-std::tan(latitude_rad) * std::tan(declination), -1.0, 1.0);
  return std::acos(c);
}

/// Daily extraterrestrial radiation [MJ m-2 day-1].
inline double extraterrestrial_radiation(const SolarContext& ctx) {
  ctx.validate();
  const double decl = solar_declination(ctx.day_of_year);
  const double dr = inverse_relative_distance(ctx.day_of_year);
  const double ws = sunset_hour_angle(ctx.latitude_rad, decl);
  const double phi = ctx.latitude_rad;
  const double re = (24.0 * 60.0 / std::numbers::pi) * kSolarConstant * dr *
                    (ws * std::sin(phi) * std::sin(decl) +
                     std::cos(phi) * std::cos(decl) * std::sin(ws));
  // Rounding at the clamp boundary can leave a tiny negative value.
  return std::max(re, 0.0);
}

/// PET [mm/day] from mean daily temperature [degC] and Re [MJ m-2 day-1].
inline double oudin_pet(double mean_temp, double re) {
  if (!(re >= 0.0)) throw DomainError("extraterrestrial radiation must be >= 0");
  if (!std::isfinite(mean_temp)) throw NumericError("non-finite temperature");
  const double t = mean_temp + kTemperatureOffset;
  if (t <= 0.0) return 0.0;
  return re / kLatentHeat * t / kTemperatureScale;
}

/// Daily PET for a gap-free series beginning at `start`.
inline std::vector<double> oudin_pet_series(Date start, std::span<const double> mean_temp,
                                            double latitude_deg) {
  const double lat = latitude_deg * std::numbers::pi / 180.0;
  std::vector<double> out(mean_temp.size());
  for (std::size_t i = 0; i < mean_temp.size(); ++i) {
    const Date d = start + std::chrono::days{static_cast<long>(i)};
    out[i] = oudin_pet(mean_temp[i], extraterrestrial_radiation({lat, day_of_year(d)}));
  }
  return out;
}

}  // namespace qhydro::pet
