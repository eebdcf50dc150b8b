#pragma once

// Daily basin records: CSV ingestion, unit conversion and period splitting.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qhydro/calendar.hpp"
#include "qhydro/csv.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/pet_oudin.hpp"

namespace qhydro {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
/// Flow values at or below this are treated as missing (CAMELS uses -999/-9999).
inline constexpr double kMissingSentinel = -999.0;

inline bool is_missing(double v) { return std::isnan(v); }

enum class FlowUnit { cfs, mm_day };

inline FlowUnit parse_flow_unit(std::string_view s) {
  if (s == "cfs") return FlowUnit::cfs;
  if (s == "mm_day") return FlowUnit::mm_day;
  throw ConfigError(fmt::format("unknown flow unit '{}' (expected cfs or mm_day)", s));
}

inline std::string_view to_string(FlowUnit u) { return u == FlowUnit::cfs ? "cfs" : "mm_day"; }

struct BasinMeta {
  std::string basin_id;
  double latitude_deg = 0.0;
  double area_km2 = 1.0;

  void validate() const {
    if (basin_id.empty()) throw DomainError("empty basin id");
    if (!(latitude_deg >= -90.0 && latitude_deg <= 90.0))
      throw DomainError(fmt::format("basin {}: latitude {} outside [-90, 90]", basin_id, latitude_deg));
    if (!(area_km2 > 0.0))
      throw DomainError(fmt::format("basin {}: area must be > 0", basin_id));
  }
};

struct RawDailyRecord {
  Date date;
  double precip = 0.0;  // mm/day
  double tmin = 0.0;    // degC
  double tmax = 0.0;    // degC
  double flow = 0.0;    // configured unit; NaN when missing
};

inline double mean_daily_temp(double tmin, double tmax) {
  if (tmin > tmax) throw OrderingError(fmt::format("tmin {} > tmax {}", tmin, tmax));
  return (tmin + tmax) / 2.0;
}

inline constexpr double kCubicMetresPerCubicFoot = 0.0283168;
inline constexpr double kSecondsPerDay = 86400.0;

/// ft3/s over a basin of `area_km2` to runoff depth in mm/day.
inline double flow_to_mm_per_day(double flow_cfs, double area_km2) {
  if (!(area_km2 > 0.0)) throw DomainError("basin area must be > 0");
  if (!(flow_cfs >= 0.0)) throw DomainError("flow must be >= 0");
  return flow_cfs * kCubicMetresPerCubicFoot * kSecondsPerDay / (area_km2 * 1.0e6) * 1000.0;
}

/// Parses a basin CSV with columns date, precip_mm, tmin_C, tmax_C, flow
/// (any order). Records come back sorted and verified gap-free.
inline std::vector<RawDailyRecord> read_basin(std::istream& in) {
  const auto table = csv::read_table(in);
  const auto c_date = table.require("date");
  const auto c_p = table.require("precip_mm");
  const auto c_tmin = table.require("tmin_C");
  const auto c_tmax = table.require("tmax_C");
  const auto c_flow = table.require("flow");
  const auto ncol = table.header.size();

  std::vector<RawDailyRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t rowno = i + 1;
    if (row.size() != ncol)
      throw ParseError(fmt::format("expected {} fields, got {}", ncol, row.size()), rowno);
    RawDailyRecord rec;
    const auto date = try_parse_date(row[c_date]);
    if (!date) throw ParseError(fmt::format("bad date '{}'", row[c_date]), rowno);
    rec.date = *date;
    auto number = [&](std::size_t c, const char* name) {
      const auto v = csv::parse_double(row[c]);
      if (!v || !std::isfinite(*v))
        throw ParseError(fmt::format("bad {} value '{}'", name, row[c]), rowno);
      return *v;
    };
    rec.precip = number(c_p, "precip_mm");
    rec.tmin = number(c_tmin, "tmin_C");
    rec.tmax = number(c_tmax, "tmax_C");
    const double flow = number(c_flow, "flow");
    if (rec.precip < 0.0) throw ParseError("negative precipitation", rowno);
    if (rec.tmin > rec.tmax) throw ParseError("tmin > tmax", rowno);
    if (flow <= kMissingSentinel) {
      rec.flow = kMissing;
    } else if (flow < 0.0) {
      throw ParseError(fmt::format("negative flow {}", flow), rowno);
    } else {
      rec.flow = flow;
    }
    out.push_back(rec);
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto delta = (out[i].date - out[i - 1].date).count();
    if (delta == 0) throw ContinuityError("duplicate date", format_date(out[i].date));
    if (delta > 1)
      throw ContinuityError("missing date", format_date(out[i - 1].date + std::chrono::days{1}));
  }
  return out;
}

inline std::vector<RawDailyRecord> load_basin(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_basin(in);
}

inline void write_basin(std::ostream& out, std::span<const RawDailyRecord> records) {
  out << "date,precip_mm,tmin_C,tmax_C,flow\n";
  for (const auto& r : records) {
    out << format_date(r.date) << ',' << csv::num(r.precip) << ',' << csv::num(r.tmin) << ','
        << csv::num(r.tmax) << ',' << (is_missing(r.flow) ? std::string("-9999") : csv::num(r.flow))
        << '\n';
  }
}

/// Basin metadata file with columns basin_id, lat_deg, area_km2.
inline std::vector<BasinMeta> load_basin_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const auto table = csv::read_table(in);
  const auto c_id = table.require("basin_id");
  const auto c_lat = table.require("lat_deg");
  const auto c_area = table.require("area_km2");
  std::vector<BasinMeta> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) throw ParseError("field count mismatch", i + 1);
    const auto lat = csv::parse_double(row[c_lat]);
    const auto area = csv::parse_double(row[c_area]);
    if (!lat || !area) throw ParseError("bad numeric field", i + 1);
    BasinMeta m{row[c_id], *lat, *area};
    m.validate();
    out.push_back(std::move(m));
  }
  return out;
}

/// Model-ready forcing: precipitation, PET and observed flow, all mm/day.
/// Observed flow is NaN on missing days.
struct ForcingSeries {
  Date start;
  std::vector<double> precip;
  std::vector<double> pet;
  std::vector<double> q_obs;

  std::size_t size() const { return precip.size(); }
  Date date_at(std::size_t i) const { return start + std::chrono::days{static_cast<long>(i)}; }
  Date end_date() const { return date_at(size() - 1); }
};

inline ForcingSeries build_forcing(std::span<const RawDailyRecord> records, const BasinMeta& meta,
                                   FlowUnit unit) {
  meta.validate();
  if (records.empty()) throw Error("no records for basin " + meta.basin_id);
  ForcingSeries f;
  f.start = records.front().date;
  std::vector<double> tmean(records.size());
  f.precip.resize(records.size());
  f.q_obs.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    f.precip[i] = r.precip;
    tmean[i] = mean_daily_temp(r.tmin, r.tmax);
    if (is_missing(r.flow))
      f.q_obs[i] = kMissing;
    else
      f.q_obs[i] = unit == FlowUnit::cfs ? flow_to_mm_per_day(r.flow, meta.area_km2) : r.flow;
  }
  f.pet = pet::oudin_pet_series(f.start, tmean, meta.latitude_deg);
  return f;
}

inline ForcingSeries load_forcing(const std::filesystem::path& path, const BasinMeta& meta,
                                  FlowUnit unit) {
  const auto records = load_basin(path);
  return build_forcing(records, meta, unit);
}

// Warm-up, calibration and validation windows.
struct PeriodSplit {
  DateRange warmup;
  DateRange calibration;
  DateRange validation;

  static constexpr long kMinWarmupDays = 365;

  void validate() const {
    for (const auto* r : {&warmup, &calibration, &validation})
      if (r->last < r->first) throw BoundsError("period ends before it starts");
    if (warmup.days() < kMinWarmupDays)
      throw BoundsError(fmt::format("warm-up must cover at least {} days", kMinWarmupDays));
    if (calibration.first != warmup.last + std::chrono::days{1})
      throw BoundsError("calibration must start the day after warm-up ends");
    if (validation.first != calibration.last + std::chrono::days{1})
      throw BoundsError("validation must start the day after calibration ends");
  }

  // 1980-81 warm-up, 1982-97 calibration, 1998-2013 validation.
  static PeriodSplit standard() {
    return {{make_date(1980, 1, 1), make_date(1981, 12, 31)},
            {make_date(1982, 1, 1), make_date(1997, 12, 31)},
            {make_date(1998, 1, 1), make_date(2013, 12, 31)}};
  }
};

/// Index boundaries of a split inside a series: [warmup, calibration,
/// validation, end).
struct SplitIndex {
  std::size_t warmup = 0;
  std::size_t calibration = 0;
  std::size_t validation = 0;
  std::size_t end = 0;
};

inline SplitIndex locate(const ForcingSeries& series, const PeriodSplit& split) {
  split.validate();
  if (series.size() == 0) throw BoundsError("empty series");
  if (split.warmup.first < series.start || split.validation.last > series.end_date())
    throw BoundsError(fmt::format("split {}..{} outside series {}..{}",
                                  format_date(split.warmup.first),
                                  format_date(split.validation.last), format_date(series.start),
                                  format_date(series.end_date())));
  auto idx = [&](Date d) { return static_cast<std::size_t>((d - series.start).count()); };
  return {idx(split.warmup.first), idx(split.calibration.first), idx(split.validation.first),
          idx(split.validation.last) + 1};
}

/// Non-owning window into a ForcingSeries.
struct ForcingView {
  Date start;
  std::span<const double> precip;
  std::span<const double> pet;
  std::span<const double> q_obs;

  std::size_t size() const { return precip.size(); }
};

inline ForcingView view(const ForcingSeries& s, std::size_t begin, std::size_t end) {
  const auto n = end - begin;
  return {s.date_at(begin), std::span(s.precip).subspan(begin, n),
          std::span(s.pet).subspan(begin, n), std::span(s.q_obs).subspan(begin, n)};
}

struct SplitViews {
  ForcingView warmup;
  ForcingView calibration;
  ForcingView validation;
};

inline SplitViews split(const ForcingSeries& series, const PeriodSplit& periods) {
  const auto ix = locate(series, periods);
  return {view(series, ix.warmup, ix.calibration), view(series, ix.calibration, ix.validation),
          view(series, ix.validation, ix.end)};
}

}  // namespace qhydro
