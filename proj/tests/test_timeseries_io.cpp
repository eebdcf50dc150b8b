#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qhydro/timeseries_io.hpp"
#include "test_support.hpp"

using namespace qhydro;

namespace {

std::vector<RawDailyRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return read_basin(in);
}

// Days in [y0, y1] counted year by year with the Gregorian leap rule.
long oracle_days(int y0, int y1) {
  long n = 0;
  for (int y = y0; y <= y1; ++y) {
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    n += leap ? 366 : 365;
  }
  return n;
}

ForcingSeries flat_series(Date start, std::size_t days) {
  ForcingSeries f;
  f.start = start;
  f.precip.assign(days, 1.0);
  f.pet.assign(days, 1.0);
  f.q_obs.assign(days, 1.0);
  return f;
}

}  // namespace

TEST(ReadBasin, ThreeRowsParsed) {
  const auto recs = parse(
      "date,precip_mm,tmin_C,tmax_C,flow\n"
      "1980-01-01,0,-2,4,120\n"
      "1980-01-02,3.5,0,6,130\n"
      "1980-01-03,0,1,7,125\n");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(format_date(recs[0].date), "1980-01-01");
  EXPECT_DOUBLE_EQ(recs[1].precip, 3.5);
  EXPECT_DOUBLE_EQ(recs[2].flow, 125.0);
  EXPECT_DOUBLE_EQ(recs[0].tmin, -2.0);
}

TEST(ReadBasin, ColumnsInAnyOrderAndRowsSorted) {
  const auto recs = parse(
      "flow,tmax_C,date,tmin_C,precip_mm\n"
      "3,5,1980-01-02,1,0\n"
      "2,5,1980-01-01,1,7\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(format_date(recs[0].date), "1980-01-01");
  EXPECT_DOUBLE_EQ(recs[0].precip, 7.0);
  EXPECT_DOUBLE_EQ(recs[1].flow, 3.0);
}

TEST(ReadBasin, GapNamesFirstMissingDate) {
  try {
    parse(
        "date,precip_mm,tmin_C,tmax_C,flow\n"
        "1980-01-01,0,0,1,1\n"
        "1980-01-03,0,0,1,1\n");
    FAIL() << "expected ContinuityError";
  } catch (const ContinuityError& e) {
    EXPECT_EQ(e.date(), "1980-01-02");
  }
}

TEST(ReadBasin, DuplicateDateRejected) {
  EXPECT_THROW(parse("date,precip_mm,tmin_C,tmax_C,flow\n"
                     "1980-01-01,0,0,1,1\n"
                     "1980-01-01,0,0,1,1\n"),
               ContinuityError);
}

TEST(ReadBasin, SentinelFlowBecomesMissing) {
  const auto recs = parse(
      "date,precip_mm,tmin_C,tmax_C,flow\n"
      "1980-01-01,0,0,1,-9999\n"
      "1980-01-02,0,0,1,-999\n"
      "1980-01-03,0,0,1,0\n");
  EXPECT_TRUE(is_missing(recs[0].flow));
  EXPECT_TRUE(is_missing(recs[1].flow));
  EXPECT_EQ(recs[2].flow, 0.0);
}

TEST(ReadBasin, MissingColumnIsSchemaError) {
  EXPECT_THROW(parse("date,precip_mm,tmin_C,flow\n1980-01-01,0,0,1\n"), SchemaError);
}

TEST(ReadBasin, BadValueReportsRow) {
  try {
    parse(
        "date,precip_mm,tmin_C,tmax_C,flow\n"
        "1980-01-01,0,0,1,1\n"
        "1980-01-02,abc,0,1,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(ReadBasin, PhysicallyImpossibleValuesRejected) {
  const std::string head = "date,precip_mm,tmin_C,tmax_C,flow\n";
  EXPECT_THROW(parse(head + "1980-01-01,-1,0,1,1\n"), ParseError);
  EXPECT_THROW(parse(head + "1980-01-01,0,3,1,1\n"), ParseError);
  EXPECT_THROW(parse(head + "1980-01-01,0,0,1,-5\n"), ParseError);
  EXPECT_THROW(parse(head + "1980-13-01,0,0,1,1\n"), ParseError);
  EXPECT_THROW(parse(head + "1980-01-01,0,0,1\n"), ParseError);
}

TEST(ReadBasin, RoundTripPreservesValues) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<RawDailyRecord> recs(400);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& r = recs[i];
    r.date = make_date(1999, 12, 1) + std::chrono::days{static_cast<long>(i)};
    r.precip = u(rng);
    r.tmin = u(rng) - 30.0;
    r.tmax = r.tmin + u(rng) / 3.0;
    r.flow = i % 37 == 0 ? kMissing : u(rng) * 1e3;
  }
  std::stringstream buf;
  write_basin(buf, recs);
  const auto back = read_basin(buf);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].date, recs[i].date);
    EXPECT_EQ(back[i].precip, recs[i].precip);
    EXPECT_EQ(back[i].tmin, recs[i].tmin);
    EXPECT_EQ(back[i].tmax, recs[i].tmax);
    if (is_missing(recs[i].flow))
      EXPECT_TRUE(is_missing(back[i].flow));
    else
      EXPECT_EQ(back[i].flow, recs[i].flow);
  }
}

TEST(MeanTemp, Examples) {
  EXPECT_DOUBLE_EQ(mean_daily_temp(-2, 4), 1.0);
  EXPECT_DOUBLE_EQ(mean_daily_temp(10, 10), 10.0);
  EXPECT_THROW(mean_daily_temp(5, 3), OrderingError);
}

TEST(FlowConversion, MatchesDimensionalOracle) {
  // cfs -> m3/s -> m3/day -> m/day over area -> mm/day, step by step.
  auto oracle = [](double cfs, double area_km2) {
    const double m3_per_s = cfs * 0.3048 * 0.3048 * 0.3048;
    const double m3_per_day = m3_per_s * 24.0 * 3600.0;
    const double area_m2 = area_km2 * 1000.0 * 1000.0;
    return m3_per_day / area_m2 * 1000.0;
  };
  for (double cfs : {1.0, 10.0, 1234.5})
    for (double area : {2.446576, 100.0, 5000.0})
      // The library's 0.0283168 m3/ft3 is the exact factor rounded to 6 figures.
      EXPECT_NEAR(flow_to_mm_per_day(cfs, area), oracle(cfs, area), 2e-6 * oracle(cfs, area));
  // One cfs over ~2.4466 km2 is about one millimetre per day.
  EXPECT_NEAR(flow_to_mm_per_day(1.0, 2.446576), 1.0, 1e-5);
  EXPECT_EQ(flow_to_mm_per_day(0.0, 500.0), 0.0);
}

TEST(FlowConversion, LinearInFlow) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1e4);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), area = 1.0 + u(rng);
    EXPECT_NEAR(flow_to_mm_per_day(a + b, area),
                flow_to_mm_per_day(a, area) + flow_to_mm_per_day(b, area),
                1e-12 * flow_to_mm_per_day(a + b, area));
  }
}

TEST(FlowConversion, NonPositiveAreaRejected) {
  EXPECT_THROW(flow_to_mm_per_day(1.0, 0.0), DomainError);
  EXPECT_THROW(flow_to_mm_per_day(1.0, -3.0), DomainError);
}

TEST(Split, StandardPeriodLengths) {
  const auto f = flat_series(make_date(1980, 1, 1), static_cast<std::size_t>(oracle_days(1980, 2013)));
  const auto v = split(f, PeriodSplit::standard());
  EXPECT_EQ(static_cast<long>(v.warmup.size()), oracle_days(1980, 1981));
  EXPECT_EQ(static_cast<long>(v.calibration.size()), oracle_days(1982, 1997));
  EXPECT_EQ(static_cast<long>(v.validation.size()), oracle_days(1998, 2013));
  EXPECT_EQ(v.warmup.size(), 731u);
  EXPECT_EQ(v.calibration.size(), 5844u);
  EXPECT_EQ(v.validation.size(), 5844u);
}

TEST(Split, PartitionsTheRangeContiguously) {
  const auto f = flat_series(make_date(1979, 6, 1), 20000);
  const auto ix = locate(f, PeriodSplit::standard());
  EXPECT_EQ(f.date_at(ix.warmup), make_date(1980, 1, 1));
  EXPECT_EQ(f.date_at(ix.calibration), make_date(1982, 1, 1));
  EXPECT_EQ(f.date_at(ix.validation), make_date(1998, 1, 1));
  EXPECT_EQ(f.date_at(ix.end - 1), make_date(2013, 12, 31));
  const auto v = split(f, PeriodSplit::standard());
  EXPECT_EQ(v.warmup.size() + v.calibration.size() + v.validation.size(), ix.end - ix.warmup);
  EXPECT_EQ(v.calibration.start, make_date(1982, 1, 1));
}

TEST(Split, RangeOutsideSeriesIsBoundsError) {
  const auto f = flat_series(make_date(1981, 1, 1), 12000);
  EXPECT_THROW(locate(f, PeriodSplit::standard()), BoundsError);
  const auto g = flat_series(make_date(1980, 1, 1), 100);
  EXPECT_THROW(locate(g, PeriodSplit::standard()), BoundsError);
}

TEST(Split, BadPeriodsRejected) {
  const auto f = flat_series(make_date(1980, 1, 1), 20000);
  auto p = PeriodSplit::standard();
  p.warmup = {make_date(1981, 6, 1), make_date(1981, 12, 31)};  // under a year
  EXPECT_THROW(locate(f, p), BoundsError);
  p = PeriodSplit::standard();
  p.calibration.first = make_date(1982, 1, 2);  // hole between periods
  EXPECT_THROW(locate(f, p), BoundsError);
  p = PeriodSplit::standard();
  p.validation = {make_date(1998, 1, 1), make_date(1997, 1, 1)};  // empty
  EXPECT_THROW(locate(f, p), BoundsError);
  p = PeriodSplit::standard();
  p.warmup = {make_date(1982, 1, 1), make_date(1980, 1, 1)};
  EXPECT_THROW(p.validate(), BoundsError);
}

TEST(BuildForcing, ConvertsUnitsAndFillsPet) {
  const std::vector<RawDailyRecord> recs{{make_date(1990, 7, 1), 2.0, 10.0, 20.0, 100.0},
                                         {make_date(1990, 7, 2), 0.0, 12.0, 22.0, kMissing}};
  const BasinMeta meta{"x", 45.0, 300.0};
  const auto f = build_forcing(recs, meta, FlowUnit::cfs);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_NEAR(f.q_obs[0], flow_to_mm_per_day(100.0, 300.0), 1e-15);
  EXPECT_TRUE(is_missing(f.q_obs[1]));
  EXPECT_GT(f.pet[0], 0.0);
  EXPECT_GT(f.pet[1], f.pet[0]);  // warmer day, nearly the same radiation
  const auto g = build_forcing(recs, meta, FlowUnit::mm_day);
  EXPECT_EQ(g.q_obs[0], 100.0);
}

TEST(BasinMeta, LoadAndValidate) {
  testing_support::TempDir dir("meta");
  testing_support::spit(dir.path() / "m.csv",
                        "basin_id,lat_deg,area_km2\n01013500,47.2,2252.7\n02,30,10\n");
  const auto m = load_basin_meta(dir.path() / "m.csv");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].basin_id, "01013500");
  EXPECT_DOUBLE_EQ(m[0].area_km2, 2252.7);
  testing_support::spit(dir.path() / "bad.csv", "basin_id,lat_deg,area_km2\nx,95,10\n");
  EXPECT_THROW(load_basin_meta(dir.path() / "bad.csv"), DomainError);
  testing_support::spit(dir.path() / "bad2.csv", "basin_id,lat_deg\nx,45\n");
  EXPECT_THROW(load_basin_meta(dir.path() / "bad2.csv"), SchemaError);
}
