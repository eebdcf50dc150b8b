// qhydro: batch calibration of GR models against quantile losses.
//
// Exit codes: 0 success, 1 config/usage error, 2 data error, 3 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qhydro/qhydro.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kRuntime = 3 };

int cmd_validate(const std::string& path) {
  const auto cfg = qhydro::load_config(path);
  std::cout << qhydro::canonical_config(cfg) << "# hash " << qhydro::config_hash(cfg) << '\n'
            << "# parameter sets per basin: " << cfg.variants.size() * cfg.loss_specs().size()
            << '\n';
  return kOk;
}

int cmd_run(const std::string& path, int parallelism) {
  auto cfg = qhydro::load_config(path);
  if (parallelism > 0) cfg.parallelism = parallelism;
  const auto out = qhydro::run_experiment(cfg);
  std::cout << fmt::format("{} basins, {} parameter sets, {} skipped, {} failed -> {}\n",
                           out.basins.size(), out.parameters.size(), out.skipped.size(),
                           out.failures.size(), cfg.output_dir.string());
  return out.failures.empty() ? kOk : kRuntime;
}

int cmd_summarize(const std::string& dir) {
  const auto t = qhydro::summarize_run(dir);
  for (const auto& m : t.overall_relative)
    std::cout << fmt::format("{}: median relative score {} over {} (basin, level) pairs\n",
                             qhydro::gr::to_string(m.variant), qhydro::csv::num(m.value), m.n);
  return kOk;
}

int cmd_plot(const std::string& dir, const std::string& basin, const std::string& from,
             const std::string& to) {
  const auto f = qhydro::try_parse_date(from);
  const auto t = qhydro::try_parse_date(to);
  if (!f || !t) throw qhydro::SelectionError("--from/--to must be ISO dates (YYYY-MM-DD)");
  for (const auto& p : qhydro::emit_plot_data(dir, {basin, *f, *t})) std::cout << p.string() << '\n';
  return kOk;
}

int cmd_synthetic(const std::string& dir, int basins, std::uint64_t seed, double noise,
                  const std::string& start, const std::string& end) {
  namespace syn = qhydro::synthetic;
  const auto s = qhydro::try_parse_date(start);
  const auto e = qhydro::try_parse_date(end);
  if (!s || !e || *e < *s) throw qhydro::ConfigError("bad --start/--end");
  std::filesystem::create_directories(dir);
  std::ofstream meta(std::filesystem::path(dir) / "basins.csv");
  meta << "basin_id,lat_deg,area_km2\n";
  std::mt19937_64 rng(seed);
  for (int b = 0; b < basins; ++b) {
    syn::BasinOptions opt;
    opt.basin_id = fmt::format("syn{:03d}", b + 1);
    opt.start = *s;
    opt.days = static_cast<std::size_t>((*e - *s).count()) + 1;
    opt.latitude_deg = 30.0 + 18.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    opt.area_km2 = 50.0 + 950.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    opt.truth = syn::random_gr4j(rng);
    opt.noise_sigma = noise;
    opt.seed = rng();
    auto basin = syn::make_basin(opt);
    // Stored in ft3/s like CAMELS discharge.
    const double to_cfs = 1.0 / qhydro::flow_to_mm_per_day(1.0, opt.area_km2);
    for (auto& r : basin.records) r.flow *= to_cfs;
    std::ofstream out(std::filesystem::path(dir) / (opt.basin_id + ".csv"));
    qhydro::write_basin(out, basin.records);
    meta << fmt::format("{},{},{}\n", opt.basin_id, qhydro::csv::num(opt.latitude_deg),
                        qhydro::csv::num(opt.area_km2));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-loss calibration and evaluation of GR4J/GR5J/GR6J models"};
  app.require_subcommand(1);

  std::string config_path, run_dir, basin, from, to, out_dir;
  int parallelism = 0;
  auto* run = app.add_subcommand("run", "calibrate, simulate and score every configured job");
  run->add_option("config", config_path, "experiment config (INI)")->required();
  run->add_option("-j,--parallelism", parallelism, "override the configured worker count");

  auto* summarize = app.add_subcommand("summarize", "recompute summary tables of a run directory");
  summarize->add_option("run-dir", run_dir)->required();

  auto* plot = app.add_subcommand("plot-data", "write plot-ready tables for a run directory");
  plot->add_option("run-dir", run_dir)->required();
  plot->add_option("--basin", basin, "basin id")->required();
  plot->add_option("--from", from, "first date of the hydrograph window")->required();
  plot->add_option("--to", to, "last date of the hydrograph window")->required();

  auto* validate = app.add_subcommand("validate-config", "parse and check a config file");
  validate->add_option("config", config_path)->required();

  int n_basins = 3;
  std::uint64_t seed = 1;
  double noise = 0.25;
  std::string start = "1980-01-01", end = "2013-12-31";
  auto* synth = app.add_subcommand("make-synthetic", "write a synthetic basin data set");
  synth->add_option("out-dir", out_dir)->required();
  synth->add_option("--basins", n_basins)->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed);
  synth->add_option("--noise", noise, "log-space sd of multiplicative flow noise");
  synth->add_option("--start", start);
  synth->add_option("--end", end);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config_path, parallelism);
    if (*summarize) return cmd_summarize(run_dir);
    if (*plot) return cmd_plot(run_dir, basin, from, to);
    if (*validate) return cmd_validate(config_path);
    if (*synth) return cmd_synthetic(out_dir, n_basins, seed, noise, start, end);
  } catch (const qhydro::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const qhydro::SelectionError& e) {
    std::cerr << "selection error: " << e.what() << '\n';
    return kConfig;
  } catch (const qhydro::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const qhydro::SchemaError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const qhydro::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const qhydro::ContinuityError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
