#include "creditgrid/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "creditgrid/record.hpp"
#include "creditgrid/rng.hpp"

namespace creditgrid {

void to_json(nlohmann::json& j, const Manifest& m) {
  j = nlohmann::json{{"version", m.version},
                     {"config_set_hash", m.config_set_hash},
                     {"command_line", m.command_line},
                     {"base_seed", m.base_seed},
                     {"started_at", m.started_at},
                     {"finished_at", m.finished_at}};
}

void from_json(const nlohmann::json& j, Manifest& m) {
  j.at("version").get_to(m.version);
  j.at("config_set_hash").get_to(m.config_set_hash);
  j.at("command_line").get_to(m.command_line);
  j.at("base_seed").get_to(m.base_seed);
  j.at("started_at").get_to(m.started_at);
  j.at("finished_at").get_to(m.finished_at);
}

std::string config_set_hash(std::span<const GridConfig> configs) {
  std::vector<std::string> docs;
  docs.reserve(configs.size());
  for (const GridConfig& c : configs) docs.push_back(nlohmann::json(c).dump());
  std::sort(docs.begin(), docs.end());
  std::uint64_t h = fnv1a("");
  for (const std::string& d : docs) h = mix64(h ^ fnv1a(d));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join_command_line(int argc, const char* const* argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    std::string arg = argv[i];
    if (!arg.empty() && arg.find_first_of(" \t'\"\\$") == std::string::npos) {
      out += arg;
      continue;
    }
    // POSIX single-quoting; embedded quotes become '\''.
    out += '\'';
    for (char ch : arg) out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
    out += '\'';
  }
  return out;
}

void write_manifest(const std::string& dir, const Manifest& m) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / kManifestFile, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << nlohmann::json(m).dump(2) << "\n";
}

Manifest read_manifest(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / kManifestFile);
  if (!in) throw std::runtime_error("no manifest in " + dir);
  return nlohmann::json::parse(in).get<Manifest>();
}

void write_curves_csv(std::ostream& out, std::span<const Curve> curves) {
  out << kCurvesCsvHeader << "\n";
  for (const Curve& c : curves) {
    for (std::size_t i = 0; i < c.by_episode.size(); ++i)
      out << c.group << "," << c.metric << "," << i + 1 << "," << format_double(c.by_episode[i]) << "\n";
  }
}

std::vector<Curve> read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCurvesCsvHeader) throw std::invalid_argument("bad curves header");
  std::vector<Curve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) throw std::invalid_argument("bad curves row: " + line);
    if (curves.empty() || curves.back().group != f[0] || curves.back().metric != f[1]) {
      curves.push_back({f[0], f[1], {}, 0.0});
    }
    Curve& c = curves.back();
    if (std::stoi(f[2]) != static_cast<int>(c.by_episode.size()) + 1)
      throw std::invalid_argument("curve episodes out of order: " + line);
    c.by_episode.push_back(std::stod(f[3]));
  }
  for (Curve& c : curves) {
    double sum = 0.0;
    for (double v : c.by_episode) sum += v;
    c.overall = c.by_episode.empty() ? 0.0 : sum / static_cast<double>(c.by_episode.size());
  }
  return curves;
}

void write_metric_rows_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << "group,config_id,run,episode";
  for (const std::string& m : metric_names()) out << "," << m;
  out << "\n";
  for (const MetricRow& r : rows) {
    out << r.group << "," << r.config_id << "," << r.run << "," << r.episode;
    for (const std::string& m : metric_names()) out << "," << format_double(metric_value(r.metrics, m));
    out << "\n";
  }
}

std::pair<std::string, std::string> split_group(const std::string& group) {
  auto slash = group.rfind('/');
  if (slash == std::string::npos) return {group, ""};
  return {group.substr(0, slash), group.substr(slash + 1)};
}

void write_summary_csv(std::ostream& out, std::span<const Curve> curves,
                       const std::optional<std::string>& reference_label) {
  std::map<std::string, std::map<std::string, double>> by_group;
  for (const Curve& c : curves) {
    if (c.metric == "pmax" || c.metric == "poptimal") by_group[c.group][c.metric] = c.overall;
  }
  out << kSummaryCsvHeader << "\n";
  for (const auto& [group, values] : by_group) {
    double pm = values.count("pmax") ? values.at("pmax") : std::nan("");
    double po = values.count("poptimal") ? values.at("poptimal") : std::nan("");
    out << group << "," << format_double(pm) << "," << format_double(po) << ",";
    std::string ref_group;
    if (reference_label) ref_group = *reference_label + "/" + split_group(group).second;
    auto ref = by_group.find(ref_group);
    if (reference_label && ref != by_group.end() && ref->second.count("pmax") && ref->second.count("poptimal")) {
      out << format_double(pm - ref->second.at("pmax")) << "," << format_double(po - ref->second.at("poptimal"));
    } else {
      out << ",";
    }
    out << "\n";
  }
}

namespace {

const char* const kPalette[] = {"#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#d62728", "#8c564b", "#e377c2",
                                "#7f7f7f"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
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

}  // namespace

std::string render_line_plot(const std::string& title, std::span<const PlotSeries> series) {
  const double width = 640, height = 400, left = 60, right = 160, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  std::size_t n = 0;
  double ymax = 1.0;
  for (const PlotSeries& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values)
      if (std::isfinite(v)) ymax = std::max(ymax, v);
  }
  auto x_of = [&](std::size_t i) { return left + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
  auto y_of = [&](double v) { return top + ph * (1.0 - v / ymax); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double v = ymax * k / 4.0;
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fixed(y_of(v) + 4) << "\" font-family=\"sans-serif\" font-size=\"11\" "
        << "text-anchor=\"end\">" << fixed(v) << "</text>\n";
  }
  for (std::size_t ep = 1; ep <= n; ++ep) {
    if (n > 10 && ep != 1 && ep % 5 != 0) continue;
    svg << "<text x=\"" << fixed(x_of(ep - 1)) << "\" y=\"" << top + ph + 18
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << ep << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">episode</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      if (!std::isfinite(series[s].values[i])) continue;
      if (!first) svg << ' ';
      svg << fixed(x_of(i)) << ',' << fixed(y_of(series[s].values[i]));
      first = false;
    }
    svg << "\"/>\n";
    double ly = top + 16.0 * static_cast<double>(s);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape_xml(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> emit_plots(std::span<const Curve> curves, const std::string& out_dir) {
  std::vector<std::string> written;
  if (curves.empty()) {
    std::cerr << "warning: no curves to plot\n";
    return written;
  }
  // (metric, condition) -> series in first-seen order
  std::map<std::pair<std::string, std::string>, std::vector<PlotSeries>> plots;
  for (const Curve& c : curves) {
    auto [label, condition] = split_group(c.group);
    plots[{c.metric, condition}].push_back({label, c.by_episode});
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& [key, series] : plots) {
    const auto& [metric, condition] = key;
    std::string name = metric + (condition.empty() ? "" : "_" + condition) + ".svg";
    auto path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << render_line_plot(condition.empty() ? metric : metric + " (" + condition + ")", series);
    written.push_back(path);
  }
  return written;
}

}  // namespace creditgrid
