#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpath/align.hpp"

namespace gpath {

struct CenteringStats {
  std::vector<double> mean;
  std::size_t count = 0;
  std::string layer;
};

// Arithmetic mean of the vectors in the given order (double accumulation).
// Throws Error on empty input or mismatched lengths.
CenteringStats compute_centering(std::span<const std::span<const float>> vectors, std::string layer = {});

// L1 distance. Throws Error on length mismatch.
double manhattan(std::span<const float> a, std::span<const float> b);

// Cosine similarity of (a - mean) and (b - mean), clamped to [-1, 1].
// Throws DegenerateVectorError if either centered vector has zero norm.
double cosine_centered(std::span<const float> a, std::span<const float> b, const CenteringStats& stats);

// base[i] - variant[j] for every pair; absent where either side is undefined.
std::vector<std::optional<double>> surprisal_difference(const std::vector<std::optional<double>>& base,
                                                        const std::vector<std::optional<double>>& variant,
                                                        const PairMap& pairs);

struct MetricSeries {
  std::vector<double> manhattan;
  std::vector<std::optional<double>> cosine;  // absent where a centered vector was degenerate
  std::vector<std::optional<double>> surprisal_diff;
  std::vector<std::string> base_pieces;

  [[nodiscard]] std::size_t size() const { return manhattan.size(); }
};

// Per-dimension statistics over a collection of hidden states, with rogue
// candidates (highest variance) and their influence on each metric.
struct DimensionStat {
  std::size_t dimension = 0;
  double mean = 0;
  double variance = 0;
  double max_abs = 0;
};

struct DimensionDiagnostics {
  std::size_t count = 0;
  std::size_t dimensions = 0;
  std::vector<DimensionStat> per_dimension;  // in dimension order
  std::vector<std::size_t> ranking;          // dimensions by descending variance
  std::vector<std::size_t> rogue;            // first top_k of the ranking
  double top_variance_share = 0;             // variance(rogue) / total variance
  double dominance_ratio = 0;                // variance of top dim / mean variance
  bool dominated = false;                    // dominance_ratio above threshold

  // Metric influence over the supplied comparison pairs.
  std::size_t pair_count = 0;
  double mean_manhattan = 0;
  double mean_manhattan_zeroed = 0;
  double rogue_share_of_l1 = 0;  // fraction of total |delta| on rogue dims
  double mean_cosine = 0;
  double mean_cosine_zeroed = 0;
  double mean_abs_cosine_change = 0;
};

struct DiagnosticsOptions {
  std::size_t top_k = 3;
  double dominance_threshold = 5.0;
};

// `pairs` index into `vectors`; the cosine runs are centered on the
// collection mean (with the rogue dimensions zeroed for the second run).
DimensionDiagnostics dimension_diagnostics(std::span<const std::span<const float>> vectors,
                                           std::span<const std::pair<std::size_t, std::size_t>> pairs = {},
                                           const DiagnosticsOptions& options = {});

std::string diagnostics_json(const DimensionDiagnostics& d);

}  // namespace gpath
