#pragma once

// Cross-basin summaries of validation scores: relative scores against the
// benchmark model, their medians per (model, loss) and over all quantile
// levels, median coverage per (model, loss), and display histograms.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "qhydro/config.hpp"
#include "qhydro/csv.hpp"
#include "qhydro/log.hpp"
#include "qhydro/records.hpp"
#include "qhydro/scoring.hpp"

namespace qhydro {

inline constexpr double kHistogramLimit = 0.5;
inline constexpr double kHistogramBinWidth = 0.05;

struct RelativeScoreRecord {
  std::string basin_id;
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  scoring::LossSpec loss = scoring::LossSpec::squared_error();
  double value = 0.0;  // untruncated
};

/// One (model, loss) cell; value is NaN when no basin contributed.
struct SummaryCell {
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  scoring::LossSpec loss = scoring::LossSpec::squared_error();
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

struct ModelMedian {
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

struct HistogramBin {
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct ExcludedRecord {
  std::string basin_id;
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  scoring::LossSpec loss = scoring::LossSpec::squared_error();
  std::string reason;
};

struct SummaryTables {
  std::vector<RelativeScoreRecord> relative;   // non-benchmark models, every loss
  std::vector<SummaryCell> median_relative;    // per (non-benchmark model, loss)
  std::vector<ModelMedian> overall_relative;   // per model, pooled over quantile levels
  std::vector<SummaryCell> median_coverage;    // per (model, loss), all models
  std::vector<HistogramBin> histogram;         // per model, quantile levels pooled
  std::vector<ExcludedRecord> excluded;
};

inline double bin_edge(std::size_t i) {
  const double per_unit = 1.0 / kHistogramBinWidth;
  return (static_cast<double>(i) - kHistogramLimit * per_unit) / per_unit;
}

/// Bin index for the display histogram; values beyond +-0.5 land in the edge
/// bins. Bins are [lo, hi) on the edges reported by bin_edge().
inline std::size_t histogram_bin(double v) {
  const auto nbins = static_cast<long>(std::lround(2.0 * kHistogramLimit / kHistogramBinWidth));
  const double c = std::clamp(v, -kHistogramLimit, kHistogramLimit);
  auto i = std::clamp<long>(static_cast<long>(std::floor((c + kHistogramLimit) / kHistogramBinWidth)), 0,
                            nbins - 1);
  // The division can land one ulp off an edge.
  if (i + 1 < nbins && c >= bin_edge(static_cast<std::size_t>(i + 1))) ++i;
  if (i > 0 && c < bin_edge(static_cast<std::size_t>(i))) --i;
  return static_cast<std::size_t>(i);
}

inline SummaryTables summarize(std::span<const ScoreRecord> records, const ExperimentConfig& cfg,
                               const std::string& period = kValidationPeriod) {
  using Key = std::tuple<std::string, gr::ModelVariant, std::string>;  // basin, model, loss label
  std::map<Key, const ScoreRecord*> index;
  for (const auto& r : records)
    if (r.period == period) index[{r.basin_id, r.variant, r.loss.label()}] = &r;

  std::vector<std::string> basins;
  for (const auto& r : records)
    if (r.period == period) basins.push_back(r.basin_id);
  std::sort(basins.begin(), basins.end());
  basins.erase(std::unique(basins.begin(), basins.end()), basins.end());

  const auto specs = cfg.loss_specs();
  SummaryTables t;
  const auto nbins = static_cast<std::size_t>(std::lround(2.0 * kHistogramLimit / kHistogramBinWidth));

  for (auto v : cfg.variants) {
    std::vector<double> pooled;
    for (const auto& spec : specs) {
      std::vector<double> cov;
      for (const auto& b : basins)
        if (auto it = index.find({b, v, spec.label()}); it != index.end())
          cov.push_back(it->second->coverage);
      t.median_coverage.push_back({v, spec, scoring::median(cov), cov.size()});

      if (v == cfg.benchmark) continue;
      std::vector<double> rel;
      for (const auto& b : basins) {
        const auto m = index.find({b, v, spec.label()});
        const auto bench = index.find({b, cfg.benchmark, spec.label()});
        if (m == index.end() || bench == index.end()) continue;
        try {
          const double r = scoring::relative_score(bench->second->avg_score, m->second->avg_score);
          rel.push_back(r);
          t.relative.push_back({b, v, spec, r});
        } catch (const DegenerateBenchmarkError& e) {
          t.excluded.push_back({b, v, spec, e.what()});
          log_warning(fmt::format("relative score for {} {} {} excluded: {}", b,
                                  gr::to_string(v), spec.label(), e.what()));
        }
      }
      if (spec.is_quantile()) pooled.insert(pooled.end(), rel.begin(), rel.end());
      t.median_relative.push_back({v, spec, scoring::median(rel), rel.size()});
    }
    if (v == cfg.benchmark) continue;
    t.overall_relative.push_back({v, scoring::median(pooled), pooled.size()});
    std::vector<std::size_t> counts(nbins, 0);
    for (double r : pooled) ++counts[histogram_bin(r)];
    for (std::size_t i = 0; i < nbins; ++i)
      t.histogram.push_back({v, bin_edge(i), bin_edge(i + 1), counts[i]});
  }
  return t;
}

inline void write_summary(const SummaryTables& t, const std::filesystem::path& dir,
                          const std::string& hash) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", (dir / name).string()));
    out << manifest_comment(hash) << body;
  };

  std::string s = "basin_id,model,loss_kind,level,relative_score\n";
  for (const auto& r : t.relative)
    s += fmt::format("{},{},{},{},{}\n", r.basin_id, gr::to_string(r.variant), r.loss.kind_name(),
                     r.loss.level_text(), csv::num(r.value));
  write("relative_scores.csv", s);

  s = "model,loss_kind,level,median_relative_score,n_basins\n";
  for (const auto& c : t.median_relative)
    s += fmt::format("{},{},{},{},{}\n", gr::to_string(c.variant), c.loss.kind_name(),
                     c.loss.level_text(), csv::num(c.value), c.n);
  write("median_relative.csv", s);

  s = "model,median_relative_score,n\n";
  for (const auto& m : t.overall_relative)
    s += fmt::format("{},{},{}\n", gr::to_string(m.variant), csv::num(m.value), m.n);
  write("overall_relative.csv", s);

  s = "model,loss_kind,level,median_coverage,n_basins\n";
  for (const auto& c : t.median_coverage)
    s += fmt::format("{},{},{},{},{}\n", gr::to_string(c.variant), c.loss.kind_name(),
                     c.loss.level_text(), csv::num(c.value), c.n);
  write("median_coverage.csv", s);

  s = "model,bin_lo,bin_hi,count\n";
  for (const auto& h : t.histogram)
    s += fmt::format("{},{},{},{}\n", gr::to_string(h.variant), csv::num(h.lo), csv::num(h.hi),
                     h.count);
  write("relative_histogram.csv", s);

  s = "basin_id,model,loss_kind,level,reason\n";
  for (const auto& e : t.excluded)
    s += fmt::format("{},{},{},{},\"{}\"\n", e.basin_id, gr::to_string(e.variant),
                     e.loss.kind_name(), e.loss.level_text(), e.reason);
  write("excluded.csv", s);
}

}  // namespace qhydro
