#include "svrlab/report.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "svrlab/error.hpp"

namespace svrlab {

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "epoch",     "orig_t2a",  "orig_a2t",  "svr_t2a",      "svr_a2t",       "cons_t2a",        "cons_a2t",
      "total",     "r1_t2a",    "r5_t2a",    "r10_t2a",      "r1_a2t",        "r5_a2t",          "r10_a2t",
      "map10_t2a", "map10_a2t", "drift_cos_t2a", "drift_cos_a2t", "mean_radius_t2a", "mean_radius_a2t"};
  return cols;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{
      "step",          "epoch",         "orig_t2a",          "orig_a2t",          "svr_t2a",
      "svr_a2t",       "cons_t2a",      "cons_a2t",          "total",             "drift_cos_t2a",
      "drift_cos_a2t", "perp_fraction_t2a", "perp_fraction_a2t", "mean_radius_t2a", "mean_radius_a2t",
      "radius_out_of_band"};
  return cols;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error(Errc::Format, "bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error(Errc::Format, "bad integer '" + s + "'");
  return v;
}

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\r\n";
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
  out << "\r\n";
}

std::vector<std::string> loss_fields(const LossBreakdown& l) {
  return {format_double(l.orig_t2a), format_double(l.orig_a2t), format_double(l.svr_t2a), format_double(l.svr_a2t),
          format_double(l.cons_t2a), format_double(l.cons_a2t), format_double(l.total)};
}

LossBreakdown parse_loss(const std::vector<std::string>& f, std::size_t at) {
  LossBreakdown l;
  l.orig_t2a = parse_double(f[at]);
  l.orig_a2t = parse_double(f[at + 1]);
  l.svr_t2a = parse_double(f[at + 2]);
  l.svr_a2t = parse_double(f[at + 3]);
  l.cons_t2a = parse_double(f[at + 4]);
  l.cons_a2t = parse_double(f[at + 5]);
  l.total = parse_double(f[at + 6]);
  return l;
}

std::vector<std::vector<std::string>> read_records(std::istream& in, const std::vector<std::string>& cols) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Format, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != cols) throw Error(Errc::Format, "unexpected CSV header");
  std::vector<std::vector<std::string>> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != cols.size()) throw Error(Errc::Format, "CSV row has wrong field count");
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows) {
  write_header(out, metrics_columns());
  for (const auto& m : rows) {
    std::vector<std::string> f{std::to_string(m.epoch)};
    for (auto& s : loss_fields(m.loss)) f.push_back(std::move(s));
    for (double v : {m.r1_t2a, m.r5_t2a, m.r10_t2a, m.r1_a2t, m.r5_a2t, m.r10_a2t, m.map10_t2a, m.map10_a2t,
                     m.drift_cos_t2a, m.drift_cos_a2t, m.mean_radius_t2a, m.mean_radius_a2t}) {
      f.push_back(format_double(v));
    }
    write_row(out, f);
  }
}

std::vector<MetricsRecord> parse_metrics_csv(std::istream& in) {
  std::vector<MetricsRecord> out;
  for (const auto& f : read_records(in, metrics_columns())) {
    MetricsRecord m;
    m.epoch = parse_size(f[0]);
    m.loss = parse_loss(f, 1);
    double* dst[] = {&m.r1_t2a,       &m.r5_t2a,        &m.r10_t2a,        &m.r1_a2t,
                     &m.r5_a2t,       &m.r10_a2t,       &m.map10_t2a,      &m.map10_a2t,
                     &m.drift_cos_t2a, &m.drift_cos_a2t, &m.mean_radius_t2a, &m.mean_radius_a2t};
    for (std::size_t i = 0; i < std::size(dst); ++i) *dst[i] = parse_double(f[8 + i]);
    out.push_back(m);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<StepTrace>& rows) {
  write_header(out, trace_columns());
  for (const auto& t : rows) {
    std::vector<std::string> f{std::to_string(t.step), std::to_string(t.epoch)};
    for (auto& s : loss_fields(t.loss)) f.push_back(std::move(s));
    for (double v : {t.drift_cos_t2a, t.drift_cos_a2t, t.perp_fraction_t2a, t.perp_fraction_a2t, t.mean_radius_t2a,
                     t.mean_radius_a2t, t.radius_out_of_band}) {
      f.push_back(format_double(v));
    }
    write_row(out, f);
  }
}

std::vector<StepTrace> parse_trace_csv(std::istream& in) {
  std::vector<StepTrace> out;
  for (const auto& f : read_records(in, trace_columns())) {
    StepTrace t;
    t.step = parse_size(f[0]);
    t.epoch = parse_size(f[1]);
    t.loss = parse_loss(f, 2);
    double* dst[] = {&t.drift_cos_t2a,   &t.drift_cos_a2t,   &t.perp_fraction_t2a, &t.perp_fraction_a2t,
                     &t.mean_radius_t2a, &t.mean_radius_a2t, &t.radius_out_of_band};
    for (std::size_t i = 0; i < std::size(dst); ++i) *dst[i] = parse_double(f[9 + i]);
    out.push_back(t);
  }
  return out;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<StepTrace>& trace) {
  write_header(out, {"scope", "index", "epoch", "total", "drift_cos_t2a", "drift_cos_a2t", "perp_fraction_t2a",
                     "perp_fraction_a2t", "mean_radius_t2a", "mean_radius_a2t", "radius_out_of_band"});
  auto emit = [&](const char* scope, std::size_t index, std::size_t epoch, const StepTrace& t) {
    write_row(out, {scope, std::to_string(index), std::to_string(epoch), format_double(t.loss.total),
                    format_double(t.drift_cos_t2a), format_double(t.drift_cos_a2t), format_double(t.perp_fraction_t2a),
                    format_double(t.perp_fraction_a2t), format_double(t.mean_radius_t2a),
                    format_double(t.mean_radius_a2t), format_double(t.radius_out_of_band)});
  };
  for (const auto& t : trace) emit("step", t.step, t.epoch, t);

  std::map<std::size_t, std::pair<StepTrace, std::size_t>> per_epoch;
  for (const auto& t : trace) {
    auto& [acc, n] = per_epoch[t.epoch];
    acc.loss.total += t.loss.total;
    acc.drift_cos_t2a += t.drift_cos_t2a;
    acc.drift_cos_a2t += t.drift_cos_a2t;
    acc.perp_fraction_t2a += t.perp_fraction_t2a;
    acc.perp_fraction_a2t += t.perp_fraction_a2t;
    acc.mean_radius_t2a += t.mean_radius_t2a;
    acc.mean_radius_a2t += t.mean_radius_a2t;
    acc.radius_out_of_band += t.radius_out_of_band;
    ++n;
  }
  for (auto& [epoch, entry] : per_epoch) {
    auto& [acc, n] = entry;
    const double inv = 1.0 / static_cast<double>(n);
    acc.loss.total *= inv;
    acc.drift_cos_t2a *= inv;
    acc.drift_cos_a2t *= inv;
    acc.perp_fraction_t2a *= inv;
    acc.perp_fraction_a2t *= inv;
    acc.mean_radius_t2a *= inv;
    acc.mean_radius_a2t *= inv;
    acc.radius_out_of_band *= inv;
    emit("epoch", epoch, epoch, acc);
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json to_json(const MetricsRecord& m) {
  return {{"epoch", m.epoch},
          {"loss",
           {{"orig_t2a", m.loss.orig_t2a},
            {"orig_a2t", m.loss.orig_a2t},
            {"svr_t2a", m.loss.svr_t2a},
            {"svr_a2t", m.loss.svr_a2t},
            {"cons_t2a", m.loss.cons_t2a},
            {"cons_a2t", m.loss.cons_a2t},
            {"total", m.loss.total}}},
          {"t2a", {{"r1", m.r1_t2a}, {"r5", m.r5_t2a}, {"r10", m.r10_t2a}, {"map10", m.map10_t2a}}},
          {"a2t", {{"r1", m.r1_a2t}, {"r5", m.r5_a2t}, {"r10", m.r10_a2t}, {"map10", m.map10_a2t}}},
          {"drift_cos_t2a", m.drift_cos_t2a},
          {"drift_cos_a2t", m.drift_cos_a2t},
          {"mean_radius_t2a", m.mean_radius_t2a},
          {"mean_radius_a2t", m.mean_radius_a2t}};
}

}  // namespace svrlab
