#include "gpath/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gpath/error.hpp"
#include "json.hpp"

namespace gpath {
namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kTrajectoryHeader =
    "family_id,kind,comparison,position,base_piece,manhattan,cosine,surprisal_diff,is_trigger";

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson summary_json(const MetricSummary& s) {
  return {{"count", s.count}, {"mean", s.count ? ojson(s.mean) : ojson(nullptr)},
          {"variance", optional_json(s.variance)}, {"cv", optional_json(s.cv)}};
}

std::string dump(const ojson& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw Error("invalid number in CSV: '" + s + "'");
  return v;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string format_number(const std::optional<double>& value) { return value ? format_number(*value) : std::string(); }

std::string csv_escape(std::string_view field) {
  const bool edge_space = !field.empty() && (field.front() == ' ' || field.back() == ' ');
  if (field.find_first_of(",\"\r\n") == std::string_view::npos && !edge_space) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error("CSV ends inside a quoted field");
  if (field_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string trajectories_csv(const std::vector<TrajectoryRecord>& records) {
  std::string out = kTrajectoryHeader;
  out += '\n';
  for (const auto& r : records) {
    if (!r.ok()) continue;
    for (std::size_t k = 0; k < r.series.size(); ++k) {
      out += csv_escape(r.family_id) + ',' + std::string(to_string(r.kind)) + ',' + csv_escape(r.comparison) + ',' +
             std::to_string(k) + ',' + csv_escape(r.series.base_pieces[k]) + ',' +
             format_number(r.series.manhattan[k]) + ',' + format_number(r.series.cosine[k]) + ',' +
             format_number(r.series.surprisal_diff[k]) + ',' + (r.trigger_pair == k ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::string trajectories_json(const std::vector<TrajectoryRecord>& records,
                              const std::map<std::string, std::string>& header) {
  ojson j;
  j["header"] = header;
  j["records"] = ojson::array();
  for (const auto& r : records) {
    ojson rec;
    rec["family_id"] = r.family_id;
    rec["kind"] = to_string(r.kind);
    rec["comparison"] = r.comparison;
    rec["base_text"] = r.base_text;
    rec["variant_text"] = r.variant_text;
    rec["layer"] = r.layer;
    if (r.error) {
      rec["error"] = *r.error;
      j["records"].push_back(std::move(rec));
      continue;
    }
    rec["trigger_pair"] = r.trigger_pair ? ojson(*r.trigger_pair) : ojson(nullptr);
    rec["alignment"] = ojson::parse(pair_map_json(r.pairs));
    auto& rows = rec["series"] = ojson::array();
    for (std::size_t k = 0; k < r.series.size(); ++k)
      rows.push_back({{"position", k},
                      {"base_piece", r.series.base_pieces[k]},
                      {"manhattan", r.series.manhattan[k]},
                      {"cosine", optional_json(r.series.cosine[k])},
                      {"surprisal_diff", optional_json(r.series.surprisal_diff[k])},
                      {"is_trigger", r.trigger_pair == k}});
    j["records"].push_back(std::move(rec));
  }
  return dump(j);
}

std::vector<TrajectoryRecord> parse_trajectories_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error("trajectories CSV is empty");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != kTrajectoryHeader) throw Error("unexpected trajectories CSV header: " + header);

  std::vector<TrajectoryRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 9) throw Error("trajectories CSV row " + std::to_string(i + 1) + ": expected 9 fields");
    const auto kind = parse_sentence_kind(row[1]);
    if (!kind) throw Error("trajectories CSV row " + std::to_string(i + 1) + ": bad kind '" + row[1] + "'");
    if (records.empty() || records.back().family_id != row[0] || records.back().comparison != row[2]) {
      TrajectoryRecord r;
      r.family_id = row[0];
      r.kind = *kind;
      r.comparison = row[2];
      records.push_back(std::move(r));
    }
    auto& r = records.back();
    if (std::to_string(r.series.size()) != row[3])
      throw Error("trajectories CSV row " + std::to_string(i + 1) + ": positions out of order");
    r.series.base_pieces.push_back(row[4]);
    const auto m = parse_optional(row[5]);
    if (!m) throw Error("trajectories CSV row " + std::to_string(i + 1) + ": manhattan missing");
    r.series.manhattan.push_back(*m);
    r.series.cosine.push_back(parse_optional(row[6]));
    r.series.surprisal_diff.push_back(parse_optional(row[7]));
    if (row[8] == "1") r.trigger_pair = r.series.size() - 1;
  }
  return records;
}

std::string aggregates_csv(const std::vector<AggregateRecord>& aggregates) {
  std::string out = "kind,comparison,mode,records,metric,count,mean,variance,cv\n";
  for (const auto& a : aggregates) {
    const std::pair<const char*, const MetricSummary*> metrics[] = {
        {"manhattan", &a.manhattan},
        {"cosine", &a.cosine},
        {"cosine_distance", &a.cosine_distance},
        {"surprisal_diff", &a.surprisal_diff}};
    for (const auto& [name, s] : metrics) {
      out += std::string(to_string(a.kind)) + ',' + csv_escape(a.comparison) + ',' + std::string(to_string(a.mode)) +
             ',' + std::to_string(a.count) + ',' + name + ',' + std::to_string(s->count) + ',' +
             (s->count ? format_number(s->mean) : std::string()) + ',' + format_number(s->variance) + ',' +
             format_number(s->cv) + '\n';
    }
  }
  return out;
}

std::string aggregates_json(const std::vector<AggregateRecord>& aggregates,
                            const std::map<std::string, std::string>& header) {
  ojson j;
  j["header"] = header;
  j["cells"] = ojson::array();
  for (const auto& a : aggregates) {
    j["cells"].push_back({{"kind", to_string(a.kind)},
                          {"comparison", a.comparison},
                          {"mode", to_string(a.mode)},
                          {"records", a.count},
                          {"manhattan", summary_json(a.manhattan)},
                          {"cosine", summary_json(a.cosine)},
                          {"cosine_distance", summary_json(a.cosine_distance)},
                          {"surprisal_diff", summary_json(a.surprisal_diff)}});
  }
  return dump(j);
}

std::string aggregates_table(const std::vector<AggregateRecord>& aggregates) {
  std::ostringstream out;
  const auto cell = [](const MetricSummary& s) {
    char buf[64];
    if (!s.count) return std::string("            -");
    std::snprintf(buf, sizeof buf, "%9.4f", s.mean);
    std::string text = buf;
    if (s.cv) {
      std::snprintf(buf, sizeof buf, " (cv %.2f)", *s.cv);
      text += buf;
    }
    return text;
  };
  char line[256];
  std::snprintf(line, sizeof line, "%-5s %-28s %-11s %3s  %-22s %-22s %-22s\n", "kind", "comparison", "mode", "n",
                "manhattan", "cosine", "surprisal_diff");
  out << line;
  for (const auto& a : aggregates) {
    std::snprintf(line, sizeof line, "%-5s %-28s %-11s %3zu  %-22s %-22s %-22s\n", std::string(to_string(a.kind)).c_str(),
                  a.comparison.c_str(), std::string(to_string(a.mode)).c_str(), a.count, cell(a.manhattan).c_str(),
                  cell(a.cosine).c_str(), cell(a.surprisal_diff).c_str());
    out << line;
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write on " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string plot_file_name(const std::string& family_id, const std::string& comparison, const std::string& metric) {
  return family_id + "." + comparison + "." + metric + ".svg";
}

std::vector<std::filesystem::path> emit_record_plots(const std::vector<TrajectoryRecord>& records,
                                                     const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& r : records) {
    if (!r.ok() || r.series.size() == 0) continue;
    std::vector<std::optional<double>> manhattan(r.series.manhattan.begin(), r.series.manhattan.end());
    const std::tuple<const char*, const char*, const std::vector<std::optional<double>>*> metrics[] = {
        {"cosine", "cosine similarity (centered)", &r.series.cosine},
        {"manhattan", "Manhattan distance", &manhattan},
        {"surprisal_diff", "surprisal difference", &r.series.surprisal_diff}};
    for (const auto& [metric, y_label, values] : metrics) {
      PlotSpec spec;
      spec.title = r.family_id + " " + r.comparison + ": " + y_label;
      spec.y_label = y_label;
      spec.x_labels = r.series.base_pieces;
      spec.lines.push_back({r.comparison, *values});
      spec.trigger = r.trigger_pair;
      const auto path = out_dir / plot_file_name(r.family_id, r.comparison, metric);
      emit_plot(spec, path);
      written.push_back(path);
    }
  }

  // Garden and unambiguous comparisons of one family on shared axes, when
  // their pair counts agree (x labels come from the garden-path sentence).
  std::map<std::string, std::pair<const TrajectoryRecord*, const TrajectoryRecord*>> overlays;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    if (r.comparison == "garden_vs_negated") overlays[r.family_id].first = &r;
    if (r.comparison == "unambiguous_vs_negated") overlays[r.family_id].second = &r;
  }
  for (const auto& [family, pair] : overlays) {
    const auto* garden = pair.first;
    const auto* plain = pair.second;
    if (!garden || !plain || garden->series.size() != plain->series.size() || garden->series.size() == 0) continue;
    const auto as_optional = [](const std::vector<double>& v) {
      return std::vector<std::optional<double>>(v.begin(), v.end());
    };
    const std::tuple<const char*, const char*, std::vector<std::optional<double>>, std::vector<std::optional<double>>>
        metrics[] = {{"cosine", "cosine similarity (centered)", garden->series.cosine, plain->series.cosine},
                     {"manhattan", "Manhattan distance", as_optional(garden->series.manhattan),
                      as_optional(plain->series.manhattan)},
                     {"surprisal_diff", "surprisal difference", garden->series.surprisal_diff,
                      plain->series.surprisal_diff}};
    for (const auto& [metric, y_label, g, u] : metrics) {
      PlotSpec spec;
      spec.title = family + ": " + y_label + " vs negated form";
      spec.y_label = y_label;
      spec.x_labels = garden->series.base_pieces;
      spec.lines.push_back({"garden path", g});
      spec.lines.push_back({"unambiguous", u});
      spec.trigger = garden->trigger_pair;
      const auto path = out_dir / plot_file_name(family, "overlay", metric);
      emit_plot(spec, path);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace gpath
