#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "svrlab/losses.hpp"

namespace svrlab {

struct MetricsRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double r1_t2a = 0.0, r5_t2a = 0.0, r10_t2a = 0.0;
  double r1_a2t = 0.0, r5_a2t = 0.0, r10_a2t = 0.0;
  double map10_t2a = 0.0, map10_a2t = 0.0;
  double drift_cos_t2a = 0.0, drift_cos_a2t = 0.0;
  double mean_radius_t2a = 0.0, mean_radius_a2t = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

// One optimizer step of a training run.
struct StepTrace {
  std::size_t step = 0;
  std::size_t epoch = 0;
  LossBreakdown loss;
  double drift_cos_t2a = 0.0, drift_cos_a2t = 0.0;
  double perp_fraction_t2a = 0.0, perp_fraction_a2t = 0.0;
  double mean_radius_t2a = 0.0, mean_radius_a2t = 0.0;
  double radius_out_of_band = 0.0;  // fraction of per-anchor radii outside [0, ||a - t||]

  bool operator==(const StepTrace&) const = default;
};

const std::vector<std::string>& metrics_columns();
const std::vector<std::string>& trace_columns();

// RFC-4180 CSV with a header row; numbers use the shortest exact representation.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows);
std::vector<MetricsRecord> parse_metrics_csv(std::istream& in);
void write_trace_csv(std::ostream& out, const std::vector<StepTrace>& rows);
std::vector<StepTrace> parse_trace_csv(std::istream& in);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

std::string format_double(double v);

// Splits one CSV record; handles quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Per-step rows followed by per-epoch means of the step trace.
void write_diagnostics_csv(std::ostream& out, const std::vector<StepTrace>& trace);

nlohmann::json to_json(const MetricsRecord& m);

}  // namespace svrlab
