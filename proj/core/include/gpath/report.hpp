#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpath/analyze.hpp"

namespace gpath {

// Shortest round-trip decimal form; empty string for absent values.
std::string format_number(double value);
std::string format_number(const std::optional<double>& value);

// RFC 4180 style: quote fields containing separators, quotes, line breaks
// or edge whitespace.
std::string csv_escape(std::string_view field);
// Parses CSV text into rows of fields (LF or CRLF line endings).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// One row per (record, pair): family_id, kind, comparison, position,
// base_piece, manhattan, cosine, surprisal_diff, is_trigger.
std::string trajectories_csv(const std::vector<TrajectoryRecord>& records);
std::string trajectories_json(const std::vector<TrajectoryRecord>& records,
                              const std::map<std::string, std::string>& header);

// Rebuilds records (series, kind, trigger) from trajectories_csv output.
std::vector<TrajectoryRecord> parse_trajectories_csv(std::string_view text);

// One row per (cell, metric).
std::string aggregates_csv(const std::vector<AggregateRecord>& aggregates);
std::string aggregates_json(const std::vector<AggregateRecord>& aggregates,
                            const std::map<std::string, std::string>& header);
// Fixed-width summary table for terminals.
std::string aggregates_table(const std::vector<AggregateRecord>& aggregates);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

struct PlotLine {
  std::string label;
  std::vector<std::optional<double>> values;
};

struct PlotSpec {
  std::string title;
  std::string y_label;
  std::vector<std::string> x_labels;  // base-sentence token pieces
  std::vector<PlotLine> lines;
  std::optional<std::size_t> trigger;  // x index of the trigger token
  int width = 760;
  int height = 340;
};

// Static SVG: one polyline per line (gaps where values are absent), rotated
// token labels, a dashed rule at the trigger and a legend. Throws Error when
// a line's length differs from the number of x labels.
std::string render_svg(const PlotSpec& spec);
void emit_plot(const PlotSpec& spec, const std::filesystem::path& path);

// "<family_id>.<comparison>.<metric>.svg"
std::string plot_file_name(const std::string& family_id, const std::string& comparison, const std::string& metric);

// Plots for every ok record (cosine, manhattan, surprisal_diff) into out_dir.
// Returns the paths written, in a deterministic order.
std::vector<std::filesystem::path> emit_record_plots(const std::vector<TrajectoryRecord>& records,
                                                     const std::filesystem::path& out_dir);

}  // namespace gpath
