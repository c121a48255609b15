#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gpath/align.hpp"
#include "gpath/config.hpp"
#include "gpath/corpus.hpp"
#include "gpath/metrics.hpp"
#include "gpath/model.hpp"
#include "gpath/trace_dump.hpp"

namespace gpath {

// Where hidden states come from: the built-in model or external dumps.
class TraceSource {
 public:
  virtual ~TraceSource() = default;
  [[nodiscard]] virtual ForwardTrace trace(const TokenSequence& tokens, const std::string& text) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
};

class ModelTraceSource final : public TraceSource {
 public:
  explicit ModelTraceSource(const Model& model) : model_(model) {}
  [[nodiscard]] ForwardTrace trace(const TokenSequence& tokens, const std::string& text) const override;
  [[nodiscard]] std::string describe() const override { return "built-in forward pass"; }

 private:
  const Model& model_;
};

// Looks sentences up in a dump directory and checks the dumped ids against
// our own tokenization.
class DumpTraceSource final : public TraceSource {
 public:
  explicit DumpTraceSource(TraceDumpDirectory dumps) : dumps_(std::move(dumps)) {}
  [[nodiscard]] ForwardTrace trace(const TokenSequence& tokens, const std::string& text) const override;
  [[nodiscard]] std::string describe() const override { return "trace dumps"; }

 private:
  TraceDumpDirectory dumps_;
};

// Resolves "last" / "final", bare block numbers and boundary names against
// the layers a trace carries.
std::string resolve_layer(const std::vector<std::string>& layers, const std::string& requested);

struct TrajectoryRecord {
  std::string family_id;
  SentenceKind kind = SentenceKind::NPZ;
  std::string comparison;  // e.g. "garden_vs_negated", "blocked+ext_vs_negated"
  std::string base_text;
  std::string variant_text;
  std::string layer;
  PairMap pairs;
  MetricSeries series;
  std::optional<std::size_t> trigger_pair;  // index into series; absent = flagged
  std::optional<std::string> error;

  [[nodiscard]] bool ok() const { return !error.has_value(); }
  [[nodiscard]] bool flagged() const { return !trigger_pair.has_value(); }
};

// Per rendered sentence, what the metrics were computed from.
struct FormResult {
  std::string text;
  TokenSequence tokens;
  std::vector<float> hidden;  // positions x d_model at the analyzed layer
  std::vector<std::optional<double>> surprisal;
  std::optional<std::string> error;
};

struct PipelineOptions {
  std::string layer = "last";
  LogBase log_base = LogBase::Nats;
  int threads = 1;
};

struct PipelineResult {
  std::vector<TrajectoryRecord> records;  // sorted by (family_id, comparison)
  std::vector<FormResult> forms;          // distinct rendered sentences, first-use order
  CenteringStats centering;
  std::size_t d_model = 0;
  std::vector<std::string> warnings;
};

// Renders every non-negated form with its negated counterpart, runs both
// through the trace source, aligns them and computes the metric series.
// Per-sentence failures are recorded on the record; throws only when the
// corpus is empty or every comparison failed.
PipelineResult run_pipeline(const std::vector<SentenceFamily>& corpus, const Vocabulary& vocab,
                            const TraceSource& source, const PipelineOptions& options = {});

std::string comparison_label(const FormSpec& non_negated);

struct ScalarSet {
  std::optional<double> manhattan;
  std::optional<double> cosine;
  std::optional<double> surprisal_diff;
};

// mean_all averages every paired position; pre_trigger takes the pair just
// before the trigger pair; at_trigger takes the trigger pair.
// Throws Error for trigger-anchored modes on flagged records.
ScalarSet scalarize(const TrajectoryRecord& record, ScalarMode mode);

struct MetricSummary {
  std::size_t count = 0;
  double mean = 0;
  std::optional<double> variance;  // unbiased; absent for a single sample
  std::optional<double> cv;        // sqrt(variance) / |mean|
};

struct AggregateRecord {
  SentenceKind kind = SentenceKind::NPZ;
  std::string comparison;
  ScalarMode mode = ScalarMode::AtTrigger;
  std::size_t count = 0;  // unflagged records in the cell
  MetricSummary manhattan;
  MetricSummary cosine;
  MetricSummary cosine_distance;  // 1 - cosine
  MetricSummary surprisal_diff;
};

MetricSummary summarize(const std::vector<double>& values);

// Groups ok, unflagged records by (kind, comparison), kinds in NPZ, NPS,
// MVRR order and comparisons sorted.
std::vector<AggregateRecord> aggregate(const std::vector<TrajectoryRecord>& records, ScalarMode mode);

}  // namespace gpath
