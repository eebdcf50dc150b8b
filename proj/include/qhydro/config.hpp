#pragma once

// Experiment configuration: an INI file with one section per concern.
//
//   [data]         dir, metadata, basins, flow_unit
//   [periods]      warmup, calibration, validation   (first:last ISO dates)
//   [models]       variants, benchmark
//   [losses]       levels, squared_error
//   [calibration]  design, initial_step, shrink, stop_step, max_iterations
//   [run]          output, parallelism, seed
//
// Relative paths resolve against the config file's directory. The
// QHYDRO_DATA_ROOT environment variable overrides [data] dir.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "qhydro/calendar.hpp"
#include "qhydro/calibration.hpp"
#include "qhydro/csv.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/gr_models.hpp"
#include "qhydro/scoring.hpp"
#include "qhydro/timeseries_io.hpp"

namespace qhydro {

inline constexpr const char* kDataRootEnv = "QHYDRO_DATA_ROOT";
inline constexpr const char* kVersion = "qhydro 1.0.0";

inline const std::vector<double>& standard_levels() {
  static const std::vector<double> levels{0.025, 0.050, 0.100, 0.500, 0.900, 0.950, 0.975};
  return levels;
}

struct ExperimentConfig {
  std::filesystem::path data_dir = ".";
  std::string metadata = "basins.csv";
  std::vector<std::string> basins;  // empty selects every basin in the metadata file
  FlowUnit flow_unit = FlowUnit::cfs;
  PeriodSplit periods = PeriodSplit::standard();
  std::vector<gr::ModelVariant> variants{gr::kAllVariants.begin(), gr::kAllVariants.end()};
  gr::ModelVariant benchmark = gr::ModelVariant::GR4J;
  std::vector<double> levels = standard_levels();
  bool squared_error = true;
  calib::CalibOptions calibration{};
  std::filesystem::path output_dir = "qhydro-run";
  int parallelism = 1;

  /// Quantile levels in order, then squared error.
  std::vector<scoring::LossSpec> loss_specs() const {
    std::vector<scoring::LossSpec> out;
    for (double a : levels) out.push_back(scoring::LossSpec::quantile(a));
    if (squared_error) out.push_back(scoring::LossSpec::squared_error());
    return out;
  }

  void validate() const {
    try {
      periods.validate();
    } catch (const Error& e) {
      throw ConfigError(fmt::format("periods: {}", e.what()));
    }
    if (variants.empty()) throw ConfigError("no model variants selected");
    if (std::set(variants.begin(), variants.end()).size() != variants.size())
      throw ConfigError("duplicate model variant");
    if (std::find(variants.begin(), variants.end(), benchmark) == variants.end())
      throw ConfigError("benchmark variant must be one of the variants");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(levels[i] > 0.0 && levels[i] < 1.0))
        throw ConfigError(fmt::format("quantile level {} not in (0, 1)", levels[i]));
      if (i > 0 && !(levels[i] > levels[i - 1]))
        throw ConfigError("quantile levels must be strictly increasing");
    }
    if (levels.empty() && !squared_error) throw ConfigError("no loss functions selected");
    calibration.validate();
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (metadata.empty()) throw ConfigError("metadata file name is empty");
  }
};

namespace detail {

inline std::string join(const std::vector<std::string>& parts, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& f : csv::split_line(s))
    if (!f.empty()) out.push_back(f);
  return out;
}

inline DateRange parse_range(const std::string& key, const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError(fmt::format("{}: expected first:last, got '{}'", key, text));
  const auto a = try_parse_date(csv::trim(std::string_view(text).substr(0, colon)));
  const auto b = try_parse_date(csv::trim(std::string_view(text).substr(colon + 1)));
  if (!a || !b) throw ConfigError(fmt::format("{}: bad date in '{}'", key, text));
  return {*a, *b};
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigError(fmt::format("{}: cannot parse '{}'", key, text));
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, text));
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax: {}", e.what()));
  }

  static const std::set<std::string> known{
      "data.dir",          "data.metadata",        "data.basins",       "data.flow_unit",
      "periods.warmup",    "periods.calibration",  "periods.validation", "models.variants",
      "models.benchmark",  "losses.levels",        "losses.squared_error",
      "calibration.design", "calibration.initial_step", "calibration.shrink",
      "calibration.stop_step", "calibration.max_iterations", "run.output", "run.parallelism",
      "run.seed"};
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(fmt::format("key '{}' outside any section", section));
    for (const auto& [key, value] : body) {
      const auto full = section + "." + key;
      if (!known.count(full)) throw ConfigError(fmt::format("unknown config key '{}'", full));
    }
  }

  ExperimentConfig c;
  auto get = [&](const char* path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return std::string(csv::trim(*v));
    return std::nullopt;
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    if (!path.is_absolute() && !base_dir.empty()) path = base_dir / path;
    return std::filesystem::absolute(path).lexically_normal();
  };

  if (auto v = get("data.dir")) c.data_dir = resolve(*v);
  if (auto v = get("data.metadata")) c.metadata = *v;
  if (auto v = get("data.basins"); v && *v != "all") c.basins = detail::split_list(*v);
  if (auto v = get("data.flow_unit")) c.flow_unit = parse_flow_unit(*v);
  if (auto v = get("periods.warmup")) c.periods.warmup = detail::parse_range("periods.warmup", *v);
  if (auto v = get("periods.calibration"))
    c.periods.calibration = detail::parse_range("periods.calibration", *v);
  if (auto v = get("periods.validation"))
    c.periods.validation = detail::parse_range("periods.validation", *v);
  if (auto v = get("models.variants")) {
    c.variants.clear();
    for (const auto& s : detail::split_list(*v)) c.variants.push_back(gr::parse_variant(s));
  }
  if (auto v = get("models.benchmark")) c.benchmark = gr::parse_variant(*v);
  if (auto v = get("losses.levels")) {
    c.levels.clear();
    for (const auto& s : detail::split_list(*v))
      c.levels.push_back(detail::parse_number<double>("losses.levels", s));
  }
  if (auto v = get("losses.squared_error"))
    c.squared_error = detail::parse_bool("losses.squared_error", *v);
  if (auto v = get("calibration.design"))
    c.calibration.design = detail::parse_number<int>("calibration.design", *v);
  if (auto v = get("calibration.initial_step"))
    c.calibration.initial_step = detail::parse_number<double>("calibration.initial_step", *v);
  if (auto v = get("calibration.shrink"))
    c.calibration.shrink = detail::parse_number<double>("calibration.shrink", *v);
  if (auto v = get("calibration.stop_step"))
    c.calibration.stop_step = detail::parse_number<double>("calibration.stop_step", *v);
  if (auto v = get("calibration.max_iterations"))
    c.calibration.max_iterations = detail::parse_number<int>("calibration.max_iterations", *v);
  if (auto v = get("run.output")) c.output_dir = resolve(*v);
  if (auto v = get("run.parallelism")) c.parallelism = detail::parse_number<int>("run.parallelism", *v);
  if (auto v = get("run.seed"))
    c.calibration.seed = detail::parse_number<std::uint64_t>("run.seed", *v);

  if (const char* root = std::getenv(kDataRootEnv); root && *root) c.data_dir = root;
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

/// Fully explicit INI rendering; parse_config(canonical(c)) reproduces c.
/// Parallelism never changes results; the output location is left out of
/// the hash so a run can be reproduced into another directory.
inline std::string canonical_config(const ExperimentConfig& c, bool with_run_paths = true) {
  std::vector<std::string> variants;
  for (auto v : c.variants) variants.emplace_back(gr::to_string(v));
  std::vector<std::string> levels;
  for (double a : c.levels) levels.push_back(csv::num(a));
  auto range = [](const DateRange& r) { return format_date(r.first) + ":" + format_date(r.last); };

  std::string s;
  s += "[data]\n";
  s += "dir = " + c.data_dir.string() + "\n";
  s += "metadata = " + c.metadata + "\n";
  s += "basins = " + (c.basins.empty() ? std::string("all") : detail::join(c.basins)) + "\n";
  s += fmt::format("flow_unit = {}\n", to_string(c.flow_unit));
  s += "[periods]\n";
  s += "warmup = " + range(c.periods.warmup) + "\n";
  s += "calibration = " + range(c.periods.calibration) + "\n";
  s += "validation = " + range(c.periods.validation) + "\n";
  s += "[models]\n";
  s += "variants = " + detail::join(variants) + "\n";
  s += fmt::format("benchmark = {}\n", gr::to_string(c.benchmark));
  s += "[losses]\n";
  s += "levels = " + detail::join(levels) + "\n";
  s += fmt::format("squared_error = {}\n", c.squared_error ? "true" : "false");
  s += "[calibration]\n";
  s += fmt::format("design = {}\n", c.calibration.design);
  s += "initial_step = " + csv::num(c.calibration.initial_step) + "\n";
  s += "shrink = " + csv::num(c.calibration.shrink) + "\n";
  s += "stop_step = " + csv::num(c.calibration.stop_step) + "\n";
  s += fmt::format("max_iterations = {}\n", c.calibration.max_iterations);
  s += "[run]\n";
  if (with_run_paths) {
    s += "output = " + c.output_dir.string() + "\n";
    s += fmt::format("parallelism = {}\n", c.parallelism);
  }
  s += fmt::format("seed = {}\n", c.calibration.seed);
  return s;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_config(c, false)); }

}  // namespace qhydro
