#pragma once

// Post-processing of a finished run directory: re-summarizing scores and
// emitting plot-ready tables (hydrographs, paired-score scatter, histogram
// and heatmap tables).

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qhydro/calendar.hpp"
#include "qhydro/config.hpp"
#include "qhydro/csv.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/records.hpp"
#include "qhydro/scoring.hpp"
#include "qhydro/summary.hpp"

namespace qhydro {

struct RunDirectory {
  std::filesystem::path dir;
  ExperimentConfig config;
  std::string hash;
};

inline RunDirectory open_run(const std::filesystem::path& dir) {
  const auto cfg_path = dir / "config.ini";
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(cfg_path) || !std::filesystem::exists(manifest_path))
    throw DataError(fmt::format("{} is not a run directory (config.ini/manifest.json missing)",
                                dir.string()));
  RunDirectory run;
  run.dir = dir;
  std::ifstream cin(cfg_path);
  run.config = parse_config(cin);
  std::ifstream min(manifest_path);
  try {
    run.hash = nlohmann::json::parse(min).at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("bad manifest: {}", e.what()));
  }
  return run;
}

/// Recomputes summary tables from scores.csv and rewrites <run>/summary.
inline SummaryTables summarize_run(const std::filesystem::path& dir) {
  const auto run = open_run(dir);
  const auto scores = read_scores(dir / "scores.csv");
  auto tables = summarize(scores, run.config);
  write_summary(tables, dir / "summary", run.hash);
  return tables;
}

struct PlotSelection {
  std::string basin_id;
  Date from;
  Date to;
};

namespace detail {

struct SimulationTable {
  std::vector<Date> dates;
  std::vector<std::string> periods;
  std::vector<std::string> labels;            // series columns after q_obs
  std::vector<std::vector<double>> columns;   // [0] is q_obs, then one per label
};

inline SimulationTable read_simulations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const auto t = csv::read_table(in);
  if (t.header.size() < 3 || t.header[0] != "date" || t.header[1] != "period" ||
      t.header[2] != "q_obs")
    throw SchemaError("simulation file must start with date,period,q_obs");
  SimulationTable s;
  s.labels.assign(t.header.begin() + 3, t.header.end());
  s.columns.resize(t.header.size() - 2);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) throw ParseError("field count mismatch", i + 1);
    const auto d = try_parse_date(row[0]);
    if (!d) throw ParseError("bad date", i + 1);
    s.dates.push_back(*d);
    s.periods.push_back(row[1]);
    for (std::size_t c = 2; c < row.size(); ++c) {
      const auto v = row[c] == "NA" ? std::optional<double>(kMissing) : csv::parse_double(row[c]);
      if (!v) throw ParseError("bad value", i + 1);
      s.columns[c - 2].push_back(*v);
    }
  }
  return s;
}

inline std::optional<std::size_t> find_label(const SimulationTable& s, const std::string& label) {
  for (std::size_t i = 0; i < s.labels.size(); ++i)
    if (s.labels[i] == label) return i + 1;
  return std::nullopt;
}

}  // namespace detail

/// Writes plot-ready files into <run>/plot and returns their paths. The
/// selection is checked before anything is written.
inline std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir,
                                                         const PlotSelection& sel) {
  const auto run = open_run(dir);
  if (sel.to < sel.from) throw SelectionError("empty selection: --to precedes --from");
  const auto sim_path = dir / "simulations" / (sel.basin_id + ".csv");
  if (sel.basin_id.empty() || !std::filesystem::exists(sim_path))
    throw SelectionError(fmt::format("unknown basin '{}'", sel.basin_id));
  const auto sims = detail::read_simulations(sim_path);
  if (sims.dates.empty() || sel.from < sims.dates.front() || sel.to > sims.dates.back())
    throw SelectionError(fmt::format("window {}..{} outside simulated range", format_date(sel.from),
                                     format_date(sel.to)));

  const auto out_dir = dir / "plot";
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& name, const std::string& body) {
    const auto p = out_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << manifest_comment(run.hash) << body;
    written.push_back(p);
  };

  // Hydrographs: observed flow plus each quantile level's simulation.
  for (auto v : run.config.variants) {
    std::vector<std::size_t> cols;
    std::string s = "date,q_obs";
    for (double a : run.config.levels) {
      const auto spec = scoring::LossSpec::quantile(a);
      const auto c = detail::find_label(sims, series_label(v, spec));
      if (!c) continue;
      cols.push_back(*c);
      s += "," + spec.label();
    }
    if (cols.empty()) continue;
    s += "\n";
    for (std::size_t i = 0; i < sims.dates.size(); ++i) {
      if (sims.dates[i] < sel.from || sims.dates[i] > sel.to) continue;
      s += format_date(sims.dates[i]) + "," + csv::num(sims.columns[0][i]);
      for (auto c : cols) s += "," + csv::num(sims.columns[c][i]);
      s += "\n";
    }
    write(fmt::format("hydrograph_{}_{}.csv", sel.basin_id, gr::to_string(v)), s);
  }

  // Paired validation scores at level 0.5: median-calibrated vs squared-error-calibrated.
  const auto median_spec = scoring::LossSpec::quantile(0.5);
  const auto se_spec = scoring::LossSpec::squared_error();
  std::vector<std::filesystem::path> sim_files;
  for (const auto& e : std::filesystem::directory_iterator(dir / "simulations"))
    if (e.path().extension() == ".csv") sim_files.push_back(e.path());
  std::sort(sim_files.begin(), sim_files.end());
  std::string scatter =
      "basin_id,model,score_quantile_calibrated,score_squared_error_calibrated\n";
  bool any = false;
  for (const auto& f : sim_files) {
    const auto table = detail::read_simulations(f);
    for (auto v : run.config.variants) {
      const auto cq = detail::find_label(table, series_label(v, median_spec));
      const auto cs = detail::find_label(table, series_label(v, se_spec));
      if (!cq || !cs) continue;
      std::vector<double> obs, rq, rs;
      for (std::size_t i = 0; i < table.dates.size(); ++i) {
        if (table.periods[i] != kValidationPeriod) continue;
        obs.push_back(table.columns[0][i]);
        rq.push_back(table.columns[*cq][i]);
        rs.push_back(table.columns[*cs][i]);
      }
      if (scoring::count_observed(obs) == 0) continue;
      scatter += fmt::format("{},{},{},{}\n", f.stem().string(), gr::to_string(v),
                             csv::num(scoring::average_score(rq, obs, median_spec)),
                             csv::num(scoring::average_score(rs, obs, median_spec)));
      any = true;
    }
  }
  if (any) write("scatter_median_vs_squared_error.csv", scatter);

  // Histogram and heatmap tables.
  const auto tables = summarize(read_scores(dir / "scores.csv"), run.config);
  std::string s = "model,bin_lo,bin_hi,count\n";
  for (const auto& h : tables.histogram)
    s += fmt::format("{},{},{},{}\n", gr::to_string(h.variant), csv::num(h.lo), csv::num(h.hi),
                     h.count);
  write("histogram_relative_score.csv", s);
  s = "model,loss_kind,level,median_relative_score,n_basins\n";
  for (const auto& c : tables.median_relative)
    s += fmt::format("{},{},{},{},{}\n", gr::to_string(c.variant), c.loss.kind_name(),
                     c.loss.level_text(), csv::num(c.value), c.n);
  write("heatmap_median_relative_score.csv", s);
  s = "model,loss_kind,level,median_coverage,n_basins\n";
  for (const auto& c : tables.median_coverage)
    s += fmt::format("{},{},{},{},{}\n", gr::to_string(c.variant), c.loss.kind_name(),
                     c.loss.level_text(), csv::num(c.value), c.n);
  write("heatmap_median_coverage.csv", s);
  return written;
}

}  // namespace qhydro
