#pragma once

// Score records shared by the experiment runner, summaries and plot data.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qhydro/csv.hpp"
#include "qhydro/errors.hpp"
#include "qhydro/gr_models.hpp"
#include "qhydro/scoring.hpp"

namespace qhydro {

class DataError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kCalibrationPeriod = "calibration";
inline constexpr const char* kValidationPeriod = "validation";

struct ScoreRecord {
  std::string basin_id;
  gr::ModelVariant variant = gr::ModelVariant::GR4J;
  scoring::LossSpec loss = scoring::LossSpec::squared_error();
  std::string period;
  double avg_score = 0.0;
  double coverage = 0.0;
  std::size_t n_days = 0;
};

inline std::string series_label(gr::ModelVariant v, const scoring::LossSpec& loss) {
  return fmt::format("{}_{}", gr::to_string(v), loss.label());
}

inline std::string manifest_comment(const std::string& hash) { return "# manifest " + hash + "\n"; }

/// Reads scores.csv back into records.
inline std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const auto t = csv::read_table(in);
  const auto c_basin = t.require("basin_id"), c_model = t.require("model"),
             c_kind = t.require("loss_kind"), c_level = t.require("level"),
             c_period = t.require("period"), c_score = t.require("avg_score"),
             c_cov = t.require("coverage"), c_n = t.require("n_days");
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) throw ParseError("field count mismatch", i + 1);
    ScoreRecord r;
    r.basin_id = row[c_basin];
    r.variant = gr::parse_variant(row[c_model]);
    if (row[c_kind] == "quantile") {
      const auto a = csv::parse_double(row[c_level]);
      if (!a) throw ParseError("bad level", i + 1);
      r.loss = scoring::LossSpec::quantile(*a);
    } else if (row[c_kind] == "squared_error") {
      r.loss = scoring::LossSpec::squared_error();
    } else {
      throw ParseError("unknown loss kind " + row[c_kind], i + 1);
    }
    r.period = row[c_period];
    const auto score = csv::parse_double(row[c_score]);
    const auto cov = csv::parse_double(row[c_cov]);
    const auto n = csv::parse_double(row[c_n]);
    if (!score || !cov || !n) throw ParseError("bad numeric field", i + 1);
    r.avg_score = *score;
    r.coverage = *cov;
    r.n_days = static_cast<std::size_t>(*n);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace qhydro
