/* Copyright 2026 The serforge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "serforge/error.hpp"
#include "serforge/experiment.hpp"
#include "serforge/format.hpp"
#include "serforge/json_io.hpp"

namespace serforge {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

struct SummaryRow {
  std::string dataset_tag, noise_kind, defense;
  double epsilon = 0.0, mix_fraction = 0.0;
  int n = 0;
  double error_mean = 0.0, error_std = 0.0, ua_mean = 0.0, ua_std = 0.0, asr_mean = 0.0, asr_std = 0.0;
};

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  double sum = 0.0;
  for (double x : v) sum += x;
  mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  sd = std::sqrt(sq / static_cast<double>(v.size()));
}

// Groups rows by every key column except the seed, in first-appearance order.
std::vector<SummaryRow> summarize(const ExperimentReport& report) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<const ExperimentRow*>> groups;
  for (const auto& r : report.rows) {
    std::size_t g = 0;
    for (; g < out.size(); ++g) {
      const auto& s = out[g];
      if (s.dataset_tag == r.dataset_tag && s.noise_kind == r.noise_kind && s.defense == r.defense &&
          s.epsilon == r.epsilon && s.mix_fraction == r.mix_fraction) {
        break;
      }
    }
    if (g == out.size()) {
      SummaryRow s;
      s.dataset_tag = r.dataset_tag;
      s.noise_kind = r.noise_kind;
      s.defense = r.defense;
      s.epsilon = r.epsilon;
      s.mix_fraction = r.mix_fraction;
      out.push_back(s);
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> e, u, a;
    for (const ExperimentRow* r : groups[g]) {
      e.push_back(r->error_rate);
      u.push_back(r->ua);
      a.push_back(r->attack_success_rate);
    }
    out[g].n = static_cast<int>(e.size());
    mean_std(e, out[g].error_mean, out[g].error_std);
    mean_std(u, out[g].ua_mean, out[g].ua_std);
    mean_std(a, out[g].asr_mean, out[g].asr_std);
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

struct Plot {
  double left = 70, top = 40, width = 520, height = 300;
  double x_min = 0, x_max = 1, y_max = 100;
  double x(double v) const { return left + (x_max > x_min ? (v - x_min) / (x_max - x_min) : 0.5) * width; }
  double y(double v) const { return top + height - v / y_max * height; }
};

void axes(std::ostringstream& o, const Plot& p, const std::string& x_label, const std::vector<double>& x_ticks) {
  o << "<line x1=\"" << fixed(p.left) << "\" y1=\"" << fixed(p.top + p.height) << "\" x2=\""
    << fixed(p.left + p.width) << "\" y2=\"" << fixed(p.top + p.height) << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << fixed(p.left) << "\" y1=\"" << fixed(p.top) << "\" x2=\"" << fixed(p.left)
    << "\" y2=\"" << fixed(p.top + p.height) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = p.y_max * k / 4.0;
    o << "<text class=\"tick\" x=\"" << fixed(p.left - 8) << "\" y=\"" << fixed(p.y(v) + 4)
      << "\" text-anchor=\"end\">" << fixed(v) << "</text>\n";
  }
  for (double t : x_ticks) {
    o << "<text class=\"tick\" x=\"" << fixed(p.x(t)) << "\" y=\"" << fixed(p.top + p.height + 16)
      << "\" text-anchor=\"middle\">" << format_double(t) << "</text>\n";
  }
  o << "<text x=\"" << fixed(p.left + p.width / 2) << "\" y=\"" << fixed(p.top + p.height + 36)
    << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << fixed(p.top + p.height / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << fixed(p.top + p.height / 2) << ")\">error rate (%)</text>\n";
}

std::string line_chart(const std::vector<SummaryRow>& rows, bool by_fraction, const std::string& title) {
  std::vector<std::string> series;
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (std::find(series.begin(), series.end(), r.noise_kind) == series.end()) series.push_back(r.noise_kind);
    const double xv = by_fraction ? r.mix_fraction : r.epsilon;
    if (std::find(xs.begin(), xs.end(), xv) == xs.end()) xs.push_back(xv);
  }
  std::sort(xs.begin(), xs.end());
  Plot p;
  p.x_min = xs.front();
  p.x_max = xs.back();
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"400\" viewBox=\"0 0 720 400\">\n"
    << "<style>text{font-family:sans-serif;font-size:12px}.tick{font-size:10px}.value{font-size:9px}</style>\n"
    << "<rect width=\"720\" height=\"400\" fill=\"white\"/>\n"
    << "<text x=\"360\" y=\"22\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  axes(o, p, by_fraction ? "adversarial fraction of training data" : "perturbation factor epsilon", xs);
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<const SummaryRow*> pts;
    for (const auto& r : rows) {
      if (r.noise_kind == series[s]) pts.push_back(&r);
    }
    std::sort(pts.begin(), pts.end(), [&](const SummaryRow* a, const SummaryRow* b) {
      return (by_fraction ? a->mix_fraction : a->epsilon) < (by_fraction ? b->mix_fraction : b->epsilon);
    });
    const char* color = kPalette[s % std::size(kPalette)];
    o << "<polyline data-series=\"" << xml_escape(series[s]) << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double xv = by_fraction ? pts[i]->mix_fraction : pts[i]->epsilon;
      o << (i ? " " : "") << fixed(p.x(xv)) << "," << fixed(p.y(pts[i]->error_mean));
    }
    o << "\"/>\n";
    for (const SummaryRow* r : pts) {
      const double xv = by_fraction ? r->mix_fraction : r->epsilon;
      o << "<circle cx=\"" << fixed(p.x(xv)) << "\" cy=\"" << fixed(p.y(r->error_mean)) << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
      o << "<text class=\"value\" x=\"" << fixed(p.x(xv)) << "\" y=\"" << fixed(p.y(r->error_mean) - 6)
        << "\" text-anchor=\"middle\" fill=\"" << color << "\">" << format_double(r->error_mean) << "</text>\n";
    }
    o << "<text x=\"610\" y=\"" << 60 + 18 * s << "\" fill=\"" << color << "\">" << xml_escape(series[s])
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string bar_chart(const std::vector<SummaryRow>& rows, const std::string& title) {
  std::vector<std::string> groups, defenses;
  for (const auto& r : rows) {
    if (std::find(groups.begin(), groups.end(), r.noise_kind) == groups.end()) groups.push_back(r.noise_kind);
    if (std::find(defenses.begin(), defenses.end(), r.defense) == defenses.end()) defenses.push_back(r.defense);
  }
  Plot p;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"400\" viewBox=\"0 0 720 400\">\n"
    << "<style>text{font-family:sans-serif;font-size:12px}.tick{font-size:10px}.value{font-size:9px}</style>\n"
    << "<rect width=\"720\" height=\"400\" fill=\"white\"/>\n"
    << "<text x=\"360\" y=\"22\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  axes(o, p, "noise kind", {});
  const double group_w = p.width / static_cast<double>(groups.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(defenses.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = p.left + g * group_w + group_w * 0.1;
    o << "<text x=\"" << fixed(gx + group_w * 0.4) << "\" y=\"" << fixed(p.top + p.height + 16)
      << "\" text-anchor=\"middle\">" << xml_escape(groups[g]) << "</text>\n";
    for (std::size_t d = 0; d < defenses.size(); ++d) {
      const SummaryRow* r = nullptr;
      for (const auto& row : rows) {
        if (row.noise_kind == groups[g] && row.defense == defenses[d]) r = &row;
      }
      if (!r) continue;
      const double x0 = gx + d * bar_w;
      const double y0 = p.y(r->error_mean);
      o << "<rect data-defense=\"" << xml_escape(defenses[d]) << "\" x=\"" << fixed(x0) << "\" y=\"" << fixed(y0)
        << "\" width=\"" << fixed(bar_w * 0.9) << "\" height=\"" << fixed(p.top + p.height - y0) << "\" fill=\""
        << kPalette[d % std::size(kPalette)] << "\"/>\n";
      o << "<text class=\"value\" x=\"" << fixed(x0 + bar_w * 0.45) << "\" y=\"" << fixed(y0 - 4)
        << "\" text-anchor=\"middle\">" << format_double(r->error_mean) << "</text>\n";
    }
  }
  for (std::size_t d = 0; d < defenses.size(); ++d) {
    o << "<text x=\"610\" y=\"" << 60 + 18 * d << "\" fill=\"" << kPalette[d % std::size(kPalette)] << "\">"
      << xml_escape(defenses[d]) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::string out = join(kReportColumns) + "\n";
  for (const auto& r : report.rows) {
    out += join({r.dataset_tag, r.noise_kind, format_double(r.epsilon), r.defense, format_double(r.mix_fraction),
                 std::to_string(r.seed), format_double(r.error_rate), format_double(r.ua),
                 format_double(r.attack_success_rate)});
    out += "\n";
  }
  return out;
}

std::vector<ExperimentRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_line(line) != kReportColumns) {
    throw Error(ErrorCode::kCorruptHeader, "report CSV header does not match the expected columns");
  }
  std::vector<ExperimentRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != kReportColumns.size()) {
      throw Error(ErrorCode::kCorruptHeader, "report CSV line " + std::to_string(line_no) + " has " +
                                                 std::to_string(f.size()) + " fields");
    }
    ExperimentRow r;
    r.dataset_tag = f[0];
    r.noise_kind = f[1];
    r.epsilon = parse_double(f[2]);
    r.defense = f[3];
    r.mix_fraction = parse_double(f[4]);
    try {
      std::size_t used = 0;
      r.seed = std::stoull(f[5], &used);
      if (used != f[5].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad seed '" + f[5] + "' on line " + std::to_string(line_no));
    }
    r.error_rate = parse_double(f[6]);
    r.ua = parse_double(f[7]);
    r.attack_success_rate = parse_double(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary_csv(const ExperimentReport& report) {
  std::string out =
      "dataset_tag,noise_kind,epsilon,defense,mix_fraction,n_seeds,error_mean,error_std,ua_mean,ua_std,"
      "attack_success_mean,attack_success_std\n";
  for (const auto& s : summarize(report)) {
    out += join({s.dataset_tag, s.noise_kind, format_double(s.epsilon), s.defense, format_double(s.mix_fraction),
                 std::to_string(s.n), format_double(s.error_mean), format_double(s.error_std),
                 format_double(s.ua_mean), format_double(s.ua_std), format_double(s.asr_mean),
                 format_double(s.asr_std)});
    out += "\n";
  }
  return out;
}

std::string report_svg(const ExperimentReport& report) {
  if (report.rows.empty()) throw Error(ErrorCode::kEmptySet, "report has no rows");
  const auto rows = summarize(report);
  if (report.experiment == "adversarial_training") {
    return line_chart(rows, true, "Attacked-test error vs adversarial training fraction");
  }
  if (report.experiment == "defense_comparison") return bar_chart(rows, "Attacked-test error by defense");
  return line_chart(rows, false, "Error rate vs perturbation factor");
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, ReportFormat format,
                                               const std::filesystem::path& dir) {
  if (report.rows.empty()) throw Error(ErrorCode::kEmptySet, "report has no rows");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  if (format == ReportFormat::kCsv) {
    written.push_back(dir / (report.experiment + ".csv"));
    write_text(written.back(), report_csv(report));
    written.push_back(dir / (report.experiment + "_summary.csv"));
    write_text(written.back(), summary_csv(report));
  } else {
    written.push_back(dir / (report.experiment + ".svg"));
    write_text(written.back(), report_svg(report));
  }
  return written;
}

std::filesystem::path write_report_metadata(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / (report.experiment + "_metadata.json");
  write_json_file(report.metadata, path.string());
  return path;
}

ExperimentReport read_report(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + csv.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentReport report;
  report.experiment = csv.stem().string();
  report.rows = parse_report_csv(buf.str());
  const auto meta = csv.parent_path() / (report.experiment + "_metadata.json");
  if (std::filesystem::exists(meta)) report.metadata = read_json_file(meta.string());
  return report;
}

}  // namespace serforge
