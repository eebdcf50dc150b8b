#pragma once

// Batch protocol: for every basin x model variant x loss function, calibrate
// on the calibration period, simulate through validation, score both periods
// and write a self-describing artifact tree.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qhydro/calibration.hpp"
#include "qhydro/config.hpp"
#include "qhydro/csv.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/gr_models.hpp"
#include "qhydro/log.hpp"
#include "qhydro/records.hpp"
#include "qhydro/scoring.hpp"
#include "qhydro/summary.hpp"
#include "qhydro/timeseries_io.hpp"

namespace qhydro {

struct ParameterRecord {
  std::string basin_id;
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  scoring::LossSpec loss = scoring::LossSpec::squared_error();
  gr::ParameterSet params;
  double score_calib = 0.0;
  bool converged = false;
  std::size_t n_evals = 0;
};

struct CrossingRecord {
  std::string basin_id;
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  double level_low = 0.0;
  double level_high = 0.0;
  std::string period;
  double rate = 0.0;
  std::size_t n_days = 0;
  std::vector<Date> days;
};

struct SkippedBasin {
  std::string basin_id;
  std::string reason;
};

struct RunOutcome {
  std::string config_hash;
  std::vector<std::string> basins;  // processed, sorted
  std::vector<ParameterRecord> parameters;
  std::vector<ScoreRecord> scores;
  std::vector<CrossingRecord> crossings;
  std::vector<SkippedBasin> skipped;
  std::vector<std::string> failures;
};

namespace detail {

struct LoadedBasin {
  BasinMeta meta;
  ForcingSeries forcing;
  SplitIndex index;
};

struct Job {
  std::size_t basin;
  gr::ModelVariant variant;
  scoring::LossSpec loss;
};

struct JobResult {
  calib::CalibrationResult calibration;
  std::vector<double> q_sim;  // calibration + validation days
};

inline ScoreRecord score_period(const std::string& basin, const Job& job, const char* period,
                                std::span<const double> sim, std::span<const double> obs) {
  ScoreRecord r;
  r.basin_id = basin;
  r.variant = job.variant;
  r.loss = job.loss;
  r.period = period;
  r.avg_score = scoring::average_score(sim, obs, job.loss);
  r.coverage = scoring::coverage(sim, obs);
  r.n_days = scoring::count_observed(obs);
  return r;
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace detail

/// Loads metadata and forcing for the configured basins. Failures are
/// returned as skipped entries rather than thrown.
inline std::vector<detail::LoadedBasin> load_basins(const ExperimentConfig& cfg,
                                                    std::vector<SkippedBasin>& skipped) {
  const auto meta_path = cfg.data_dir / cfg.metadata;
  std::vector<BasinMeta> metas;
  try {
    metas = load_basin_meta(meta_path);
  } catch (const Error& e) {
    throw DataError(fmt::format("basin metadata {}: {}", meta_path.string(), e.what()));
  }
  std::map<std::string, BasinMeta> by_id;
  for (auto& m : metas) by_id.emplace(m.basin_id, m);

  std::vector<std::string> ids = cfg.basins;
  if (ids.empty())
    for (const auto& [id, m] : by_id) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<detail::LoadedBasin> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      skipped.push_back({id, "not listed in basin metadata"});
      log_warning(fmt::format("basin {} skipped: not listed in basin metadata", id));
      continue;
    }
    try {
      auto forcing = load_forcing(cfg.data_dir / (id + ".csv"), it->second, cfg.flow_unit);
      const auto index = locate(forcing, cfg.periods);
      const auto calib_obs = std::span(forcing.q_obs).subspan(
          index.calibration, index.validation - index.calibration);
      const auto valid_obs =
          std::span(forcing.q_obs).subspan(index.validation, index.end - index.validation);
      if (scoring::count_observed(calib_obs) == 0 || scoring::count_observed(valid_obs) == 0)
        throw DataError("no observed flow in calibration or validation period");
      out.push_back({it->second, std::move(forcing), index});
    } catch (const Error& e) {
      skipped.push_back({id, e.what()});
      log_warning(fmt::format("basin {} skipped: {}", id, e.what()));
    }
  }
  return out;
}

namespace detail {

inline std::string parameters_csv(const RunOutcome& o) {
  std::string s = manifest_comment(o.config_hash);
  s += "basin_id,model,loss_kind,level,x1,x2,x3,x4,x5,x6,score_calib,converged,n_evals\n";
  for (const auto& p : o.parameters) {
    s += fmt::format("{},{},{},{}", p.basin_id, gr::to_string(p.variant), p.loss.kind_name(),
                     p.loss.level_text());
    for (std::size_t i = 0; i < 6; ++i)
      s += "," + (i < p.params.size() ? csv::num(p.params.x[i]) : std::string("NA"));
    s += fmt::format(",{},{},{}\n", csv::num(p.score_calib), p.converged ? "true" : "false",
                     p.n_evals);
  }
  return s;
}

inline std::string scores_csv(const std::string& hash, std::span<const ScoreRecord> scores) {
  std::string s = manifest_comment(hash);
  s += "basin_id,model,loss_kind,level,period,avg_score,coverage,n_days\n";
  for (const auto& r : scores)
    s += fmt::format("{},{},{},{},{},{},{},{}\n", r.basin_id, gr::to_string(r.variant),
                     r.loss.kind_name(), r.loss.level_text(), r.period, csv::num(r.avg_score),
                     csv::num(r.coverage), r.n_days);
  return s;
}

inline std::string crossings_csv(const RunOutcome& o) {
  std::string s = manifest_comment(o.config_hash);
  s += "basin_id,model,level_low,level_high,period,crossing_rate,n_crossings,n_days\n";
  for (const auto& c : o.crossings)
    s += fmt::format("{},{},{},{},{},{},{},{}\n", c.basin_id, gr::to_string(c.variant),
                     csv::num(c.level_low), csv::num(c.level_high), c.period, csv::num(c.rate),
                     c.days.size(), c.n_days);
  return s;
}

inline std::string crossing_days_csv(const RunOutcome& o) {
  std::string s = manifest_comment(o.config_hash);
  s += "basin_id,model,level_low,level_high,date\n";
  for (const auto& c : o.crossings)
    for (const auto& d : c.days)
      s += fmt::format("{},{},{},{},{}\n", c.basin_id, gr::to_string(c.variant),
                       csv::num(c.level_low), csv::num(c.level_high), format_date(d));
  return s;
}

inline nlohmann::ordered_json manifest_json(const ExperimentConfig& cfg, const RunOutcome& o) {
  nlohmann::ordered_json m;
  m["version"] = kVersion;
  m["config_hash"] = o.config_hash;
  m["seed"] = cfg.calibration.seed;
  m["config"] = canonical_config(cfg, false);
  m["conventions"] = {
      {"coverage_ties", "an observation equal to the prediction counts as one half"},
      {"median", "mean of the two central values on even counts"},
      {"missing_observations",
       "flow <= -999 is missing; missing days are masked from every score, identically for all "
       "models of a basin"},
      {"relative_score_degenerate_benchmark", "excluded from summaries with a warning"},
      {"histogram_truncation", "display bins clamp to [-0.5, 0.5]; raw values kept in CSV"},
      {"crossing", "strict: lower-level quantile above higher-level quantile"}};
  m["basins"] = o.basins;
  auto skipped = nlohmann::ordered_json::array();
  for (const auto& s : o.skipped) skipped.push_back({{"basin_id", s.basin_id}, {"reason", s.reason}});
  m["skipped_basins"] = skipped;
  m["failed_jobs"] = o.failures;
  m["parameter_rows"] = o.parameters.size();
  m["score_rows"] = o.scores.size();
  return m;
}

}  // namespace detail

/// Runs the full protocol and writes the artifact tree into cfg.output_dir.
/// Throws ConfigError before any work on an invalid config and DataError when
/// no basin could be loaded.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunOutcome outcome;
  outcome.config_hash = config_hash(cfg);

  auto basins = load_basins(cfg, outcome.skipped);
  if (basins.empty()) throw DataError("no basin could be loaded");
  for (const auto& b : basins) outcome.basins.push_back(b.meta.basin_id);

  const auto specs = cfg.loss_specs();
  std::vector<detail::Job> jobs;
  for (std::size_t b = 0; b < basins.size(); ++b)
    for (auto v : cfg.variants)
      for (const auto& spec : specs) jobs.push_back({b, v, spec});

  std::vector<std::optional<detail::JobResult>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  detail::parallel_for(jobs.size(), cfg.parallelism, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& basin = basins[job.basin];
    try {
      auto cal = calib::calibrate(job.variant, basin.forcing, cfg.periods, job.loss, cfg.calibration);
      auto run = gr::simulate(cal.best, basin.forcing, cfg.periods);
      results[i] = detail::JobResult{std::move(cal), std::move(run.q_sim)};
    } catch (const std::exception& e) {
      errors[i] = fmt::format("{} {} {}: {}", basin.meta.basin_id, gr::to_string(job.variant),
                              job.loss.label(), e.what());
    }
  });

  // Deterministic fold in job order.
  std::map<std::pair<std::size_t, gr::ModelVariant>, std::vector<std::pair<double, const std::vector<double>*>>>
      quantile_series;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto& basin = basins[job.basin];
    if (!results[i]) {
      outcome.failures.push_back(errors[i]);
      log_warning("calibration failed: " + errors[i]);
      continue;
    }
    const auto& res = *results[i];
    outcome.parameters.push_back({basin.meta.basin_id, job.variant, job.loss, res.calibration.best,
                                  res.calibration.score, res.calibration.converged,
                                  res.calibration.evaluations});
    const auto n_cal = basin.index.validation - basin.index.calibration;
    const auto n_val = basin.index.end - basin.index.validation;
    const std::span<const double> sim(res.q_sim);
    const std::span<const double> obs(basin.forcing.q_obs);
    outcome.scores.push_back(detail::score_period(basin.meta.basin_id, job, kCalibrationPeriod,
                                                  sim.subspan(0, n_cal),
                                                  obs.subspan(basin.index.calibration, n_cal)));
    outcome.scores.push_back(detail::score_period(basin.meta.basin_id, job, kValidationPeriod,
                                                  sim.subspan(n_cal, n_val),
                                                  obs.subspan(basin.index.validation, n_val)));
    if (job.loss.is_quantile())
      quantile_series[{job.basin, job.variant}].push_back({job.loss.level(), &res.q_sim});
  }

  for (const auto& [key, series] : quantile_series) {
    const auto& basin = basins[key.first];
    const auto n_cal = basin.index.validation - basin.index.calibration;
    const auto n_val = basin.index.end - basin.index.validation;
    for (std::size_t k = 1; k < series.size(); ++k) {
      const auto& [a_lo, lo] = series[k - 1];
      const auto& [a_hi, hi] = series[k];
      const auto rep = scoring::crossing_rate(std::span(*lo).subspan(n_cal, n_val), a_lo,
                                              std::span(*hi).subspan(n_cal, n_val), a_hi);
      CrossingRecord c{basin.meta.basin_id, key.second, a_lo, a_hi, kValidationPeriod, rep.rate,
                       n_val, {}};
      for (auto d : rep.days) c.days.push_back(basin.forcing.date_at(basin.index.validation + d));
      outcome.crossings.push_back(std::move(c));
    }
  }

  const auto& out = cfg.output_dir;
  std::filesystem::create_directories(out / "simulations");
  detail::write_file(out / "config.ini", canonical_config(cfg));
  detail::write_file(out / "parameters.csv", detail::parameters_csv(outcome));
  detail::write_file(out / "scores.csv", detail::scores_csv(outcome.config_hash, outcome.scores));
  detail::write_file(out / "crossings.csv", detail::crossings_csv(outcome));
  detail::write_file(out / "crossing_days.csv", detail::crossing_days_csv(outcome));

  for (std::size_t b = 0; b < basins.size(); ++b) {
    const auto& basin = basins[b];
    std::vector<std::pair<std::string, const std::vector<double>*>> cols;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (jobs[i].basin == b && results[i])
        cols.push_back({series_label(jobs[i].variant, jobs[i].loss), &results[i]->q_sim});
    std::string s = manifest_comment(outcome.config_hash);
    s += "date,period,q_obs";
    for (const auto& c : cols) s += "," + c.first;
    s += "\n";
    for (std::size_t d = basin.index.calibration; d < basin.index.end; ++d) {
      const auto rel = d - basin.index.calibration;
      s += fmt::format("{},{},{}", format_date(basin.forcing.date_at(d)),
                       d < basin.index.validation ? kCalibrationPeriod : kValidationPeriod,
                       csv::num(basin.forcing.q_obs[d]));
      for (const auto& c : cols) s += "," + csv::num((*c.second)[rel]);
      s += "\n";
    }
    detail::write_file(out / "simulations" / (basin.meta.basin_id + ".csv"), s);
  }

  write_summary(summarize(outcome.scores, cfg), out / "summary", outcome.config_hash);
  detail::write_file(out / "manifest.json", detail::manifest_json(cfg, outcome).dump(2) + "\n");
  return outcome;
}

}  // namespace qhydro
