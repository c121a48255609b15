#include "gpath/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "gpath/error.hpp"
#include "parallel.hpp"

namespace gpath {

ForwardTrace ModelTraceSource::trace(const TokenSequence& tokens, const std::string&) const {
  return model_.forward(tokens.ids);
}

ForwardTrace DumpTraceSource::trace(const TokenSequence& tokens, const std::string& text) const {
  auto t = dumps_.load(text);
  if (t.ids != tokens.ids) throw ModelError("dumped token ids for \"" + text + "\" differ from the tokenizer's");
  return t;
}

std::string resolve_layer(const std::vector<std::string>& layers, const std::string& requested) {
  const auto has = [&](const std::string& name) {
    return std::find(layers.begin(), layers.end(), name) != layers.end();
  };
  if (requested == "last" || requested == "final") {
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
      if (it->starts_with("block.")) return *it;
    throw ModelError("trace has no block outputs");
  }
  if (!requested.empty() && std::all_of(requested.begin(), requested.end(), ::isdigit)) {
    const std::string name = "block." + requested;
    if (has(name)) return name;
  }
  if (has(requested)) return requested;
  throw ModelError("unknown layer '" + requested + "'");
}

std::string comparison_label(const FormSpec& non_negated) {
  FormSpec f = non_negated;
  f.negated = false;
  return form_label(f) + "_vs_negated";
}

PipelineResult run_pipeline(const std::vector<SentenceFamily>& corpus, const Vocabulary& vocab,
                            const TraceSource& source, const PipelineOptions& options) {
  if (corpus.empty()) throw Error("empty corpus");

  struct Comparison {
    const SentenceFamily* family;
    std::string label;
    RenderedSentence base, variant;
    std::size_t base_form = 0, variant_form = 0;
  };
  PipelineResult result;
  std::vector<Comparison> comparisons;
  std::map<std::string, std::size_t> form_index;
  const auto intern = [&](const std::string& text) {
    const auto [it, inserted] = form_index.emplace(text, result.forms.size());
    if (inserted) result.forms.push_back({text, {}, {}, {}, {}});
    return it->second;
  };
  for (const auto& family : corpus) {
    for (const auto& form : enumerate_forms(family)) {
      if (form.negated) continue;
      FormSpec negated = form;
      negated.negated = true;
      Comparison c{&family, comparison_label(form), render(family, form), render(family, negated)};
      c.base_form = intern(c.base.text);
      c.variant_form = intern(c.variant.text);
      comparisons.push_back(std::move(c));
    }
  }

  // Traces: independent per sentence, written into fixed slots.
  std::vector<std::string> layer_used(result.forms.size());
  std::vector<std::string> form_warning(result.forms.size());
  detail::parallel_for(result.forms.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& f = result.forms[i];
      try {
        f.tokens = encode(f.text, vocab);
        const auto trace = source.trace(f.tokens, f.text);
        layer_used[i] = resolve_layer(trace.layers, options.layer);
        f.hidden = trace.hidden[trace.layer_index(layer_used[i])];
        if (trace.logits && trace.positions() >= 2) {
          f.surprisal = surprisal_series(trace, options.log_base);
        } else {
          f.surprisal.assign(trace.positions(), std::nullopt);
          form_warning[i] = "no surprisal for \"" + f.text + "\" (logits absent or single token)";
        }
      } catch (const std::exception& e) {
        f.error = e.what();
      }
    }
  });
  for (const auto& w : form_warning)
    if (!w.empty()) result.warnings.push_back(w);

  std::string layer;
  std::size_t d_model = 0;
  for (std::size_t i = 0; i < result.forms.size(); ++i) {
    if (result.forms[i].error) continue;
    if (layer.empty()) {
      layer = layer_used[i];
      d_model = result.forms[i].hidden.size() / result.forms[i].tokens.size();
    }
  }
  result.d_model = d_model;

  // Centering: sequential fold in form order.
  std::vector<std::span<const float>> vectors;
  for (const auto& f : result.forms) {
    if (f.error) continue;
    for (std::size_t p = 0; p < f.tokens.size(); ++p)
      vectors.push_back(std::span<const float>(f.hidden).subspan(p * d_model, d_model));
  }
  if (!vectors.empty()) result.centering = compute_centering(vectors, layer);

  for (const auto& c : comparisons) {
    TrajectoryRecord r;
    r.family_id = c.family->id;
    r.kind = c.family->kind;
    r.comparison = c.label;
    r.base_text = c.base.text;
    r.variant_text = c.variant.text;
    r.layer = layer;
    const auto& bf = result.forms[c.base_form];
    const auto& vf = result.forms[c.variant_form];
    try {
      if (bf.error) throw Error(*bf.error);
      if (vf.error) throw Error(*vf.error);
      r.pairs = align(c.base, bf.tokens, c.variant, vf.tokens);
      const auto diff = surprisal_difference(bf.surprisal, vf.surprisal, r.pairs);
      for (std::size_t k = 0; k < r.pairs.pairs.size(); ++k) {
        const auto [i, j] = r.pairs.pairs[k];
        const auto a = std::span<const float>(bf.hidden).subspan(i * d_model, d_model);
        const auto b = std::span<const float>(vf.hidden).subspan(j * d_model, d_model);
        r.series.manhattan.push_back(manhattan(a, b));
        try {
          r.series.cosine.emplace_back(cosine_centered(a, b, result.centering));
        } catch (const DegenerateVectorError&) {
          r.series.cosine.emplace_back(std::nullopt);
          result.warnings.push_back(r.family_id + " " + r.comparison + ": degenerate centered vector at pair " +
                                    std::to_string(k) + "; cosine dropped");
        }
        r.series.surprisal_diff.push_back(diff[k]);
        r.series.base_pieces.push_back(bf.tokens.pieces[i]);
      }
      r.trigger_pair = trigger_pair_index(r.pairs, bf.tokens, c.base.trigger_span);
      if (!r.trigger_pair)
        result.warnings.push_back(r.family_id + " " + r.comparison +
                                  ": trigger token was boundary-excluded; dropped from trigger-anchored aggregates");
    } catch (const std::exception& e) {
      r.error = e.what();
      r.series = {};
      r.trigger_pair.reset();
    }
    result.records.push_back(std::move(r));
  }

  std::stable_sort(result.records.begin(), result.records.end(), [](const auto& x, const auto& y) {
    return std::tie(x.family_id, x.comparison) < std::tie(y.family_id, y.comparison);
  });
  if (std::none_of(result.records.begin(), result.records.end(), [](const auto& r) { return r.ok(); }))
    throw Error("every sentence failed; first error: " + result.records.front().error.value_or("?"));
  return result;
}

namespace {

std::optional<double> value_of(double v) { return v; }
std::optional<double> value_of(const std::optional<double>& v) { return v; }

template <typename Series>
std::optional<double> pick(const Series& s, ScalarMode mode, const std::optional<std::size_t>& trigger) {
  switch (mode) {
    case ScalarMode::MeanAll: {
      double sum = 0;
      std::size_t n = 0;
      for (const auto& v : s) {
        const auto x = value_of(v);
        if (x) {
          sum += *x;
          ++n;
        }
      }
      if (n == 0) return std::nullopt;
      return sum / static_cast<double>(n);
    }
    case ScalarMode::PreTrigger: return value_of(s[*trigger - 1]);
    case ScalarMode::AtTrigger: return value_of(s[*trigger]);
  }
  return std::nullopt;
}

}  // namespace

ScalarSet scalarize(const TrajectoryRecord& record, ScalarMode mode) {
  if (!record.ok()) throw Error("cannot scalarize a failed record (" + record.family_id + ")");
  if (mode != ScalarMode::MeanAll) {
    if (record.flagged())
      throw Error(record.family_id + " " + record.comparison + ": trigger pair missing; " +
                  std::string(to_string(mode)) + " undefined");
    if (mode == ScalarMode::PreTrigger && *record.trigger_pair == 0)
      throw Error(record.family_id + " " + record.comparison + ": no pair precedes the trigger");
  }
  if (record.series.size() == 0) return {};
  return {pick(record.series.manhattan, mode, record.trigger_pair),
          pick(record.series.cosine, mode, record.trigger_pair),
          pick(record.series.surprisal_diff, mode, record.trigger_pair)};
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(values.size() - 1);
    if (s.mean != 0.0) s.cv = std::sqrt(*s.variance) / std::fabs(s.mean);
  }
  return s;
}

std::vector<AggregateRecord> aggregate(const std::vector<TrajectoryRecord>& records, ScalarMode mode) {
  struct Cell {
    std::size_t count = 0;
    std::vector<double> manhattan, cosine, cosine_distance, surprisal;
  };
  std::map<std::pair<SentenceKind, std::string>, Cell> cells;
  for (const auto& r : records) {
    if (!r.ok() || r.flagged()) continue;
    if (mode == ScalarMode::PreTrigger && *r.trigger_pair == 0) continue;
    const auto s = scalarize(r, mode);
    auto& cell = cells[{r.kind, r.comparison}];
    ++cell.count;
    if (s.manhattan) cell.manhattan.push_back(*s.manhattan);
    if (s.cosine) {
      cell.cosine.push_back(*s.cosine);
      cell.cosine_distance.push_back(1.0 - *s.cosine);
    }
    if (s.surprisal_diff) cell.surprisal.push_back(*s.surprisal_diff);
  }
  std::vector<AggregateRecord> out;
  for (const auto& [key, cell] : cells) {
    AggregateRecord a;
    a.kind = key.first;
    a.comparison = key.second;
    a.mode = mode;
    a.count = cell.count;
    a.manhattan = summarize(cell.manhattan);
    a.cosine = summarize(cell.cosine);
    a.cosine_distance = summarize(cell.cosine_distance);
    a.surprisal_diff = summarize(cell.surprisal);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace gpath
