#include <cmath>

#include "doctest.h"
#include "gpath/analyze.hpp"
#include "gpath/error.hpp"
#include "gpath/trace_dump.hpp"
#include "helpers.hpp"

using namespace gpath;

namespace {

std::vector<SentenceFamily> families(std::initializer_list<std::string> ids) {
  std::vector<SentenceFamily> out;
  for (const auto& f : test::seed_corpus())
    if (std::find(ids.begin(), ids.end(), f.id) != ids.end()) out.push_back(f);
  return out;
}

TrajectoryRecord series_record(std::vector<double> values, std::optional<std::size_t> trigger) {
  TrajectoryRecord r;
  r.family_id = "x";
  r.comparison = "garden_vs_negated";
  r.series.manhattan = values;
  for (const auto v : values) {
    r.series.cosine.emplace_back(v / 10);
    r.series.surprisal_diff.emplace_back(-v);
    r.series.base_pieces.push_back("t");
  }
  r.trigger_pair = trigger;
  return r;
}

}  // namespace

TEST_CASE("empty corpus") {
  const ModelTraceSource source(test::small_gpt2_model());
  try {
    (void)run_pipeline({}, test::gpt2_vocab(), source);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "empty corpus");
  }
}

TEST_CASE("comparisons per family") {
  const ModelTraceSource source(test::small_gpt2_model());
  const auto result = run_pipeline(families({"npz01", "nps01", "mvrr01"}), test::gpt2_vocab(), source);
  std::vector<std::string> labels;
  for (const auto& r : result.records) labels.push_back(r.family_id + ":" + r.comparison);
  CHECK(labels == std::vector<std::string>{
                      "mvrr01:garden+ext_vs_negated", "mvrr01:garden_vs_negated",
                      "mvrr01:unambiguous+ext_vs_negated", "mvrr01:unambiguous_vs_negated",
                      "nps01:garden_vs_negated", "nps01:unambiguous_vs_negated", "npz01:blocked_vs_negated",
                      "npz01:garden_vs_negated", "npz01:unambiguous_vs_negated"});
  for (const auto& r : result.records) {
    CHECK(r.ok());
    CHECK(r.layer == "block.1");
    CHECK(r.series.size() == r.pairs.pairs.size());
    REQUIRE(r.trigger_pair);
    CHECK(r.series.manhattan.size() == r.series.cosine.size());
  }
  const auto& fell = result.records[1];
  CHECK(fell.series.base_pieces[*fell.trigger_pair] == " fell");

  // Centering runs over every position of every distinct form.
  std::size_t positions = 0;
  for (const auto& f : result.forms) positions += f.tokens.size();
  CHECK(result.centering.count == positions);
  CHECK(result.centering.layer == "block.1");
  CHECK(result.d_model == 16);
}

TEST_CASE("pipeline is deterministic across runs and threads") {
  const ModelTraceSource source(test::small_gpt2_model());
  const auto corpus = families({"nps02"});
  const auto a = run_pipeline(corpus, test::gpt2_vocab(), source, {"last", LogBase::Nats, 1});
  const auto b = run_pipeline(corpus, test::gpt2_vocab(), source, {"last", LogBase::Nats, 1});
  const auto c = run_pipeline(corpus, test::gpt2_vocab(), source, {"last", LogBase::Nats, 4});
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].series.manhattan == b.records[i].series.manhattan);
    CHECK(a.records[i].series.cosine == b.records[i].series.cosine);
    CHECK(a.records[i].series.surprisal_diff == b.records[i].series.surprisal_diff);
    CHECK(a.records[i].series.manhattan == c.records[i].series.manhattan);
    CHECK(a.records[i].series.cosine == c.records[i].series.cosine);
  }
}

TEST_CASE("layer selection and log base") {
  const ModelTraceSource source(test::small_gpt2_model());
  const auto corpus = families({"npz01"});
  const auto ln = run_pipeline(corpus, test::gpt2_vocab(), source, {"ln_f", LogBase::Nats, 1});
  CHECK(ln.records.front().layer == "ln_f");
  const auto zero = run_pipeline(corpus, test::gpt2_vocab(), source, {"0", LogBase::Nats, 1});
  CHECK(zero.records.front().layer == "block.0");
  CHECK_FALSE(ln.records.front().series.manhattan == zero.records.front().series.manhattan);

  const auto nats = run_pipeline(corpus, test::gpt2_vocab(), source, {"last", LogBase::Nats, 1});
  const auto bits = run_pipeline(corpus, test::gpt2_vocab(), source, {"last", LogBase::Bits, 1});
  const auto& sn = nats.records.front().series.surprisal_diff;
  const auto& sb = bits.records.front().series.surprisal_diff;
  for (std::size_t i = 0; i < sn.size(); ++i)
    if (sn[i]) CHECK(*sb[i] == doctest::Approx(*sn[i] / std::log(2.0)));

  CHECK(resolve_layer({"embed", "block.0", "block.1", "ln_f"}, "final") == "block.1");
  CHECK_THROWS_AS(resolve_layer({"embed", "block.0"}, "block.7"), ModelError);
}

TEST_CASE("dump source reproduces the model source") {
  const auto dir = test::scratch_dir("analyze-dumps");
  const auto corpus = families({"mvrr03"});
  std::map<std::string, std::string> index;
  for (const auto& f : corpus)
    for (const auto& form : enumerate_forms(f)) {
      const auto text = render(f, form).text;
      if (index.contains(text)) continue;
      const auto name = std::to_string(index.size()) + ".safetensors";
      write_trace_dump(test::small_gpt2_model().forward(encode(text, test::gpt2_vocab()).ids), dir / name);
      index[text] = name;
    }
  TraceDumpDirectory::write_index(dir, index);
  const ModelTraceSource model(test::small_gpt2_model());
  const DumpTraceSource dumps{TraceDumpDirectory(dir)};
  const auto a = run_pipeline(corpus, test::gpt2_vocab(), model);
  const auto b = run_pipeline(corpus, test::gpt2_vocab(), dumps);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].series.manhattan == b.records[i].series.manhattan);
    CHECK(a.records[i].series.surprisal_diff == b.records[i].series.surprisal_diff);
  }
}

TEST_CASE("per-sentence failures are recorded and the run continues") {
  auto corpus = families({"npz01", "nps01"});
  const auto dir = test::scratch_dir("analyze-partial");
  // Dumps only for the NP/S family.
  std::map<std::string, std::string> index;
  for (const auto& form : enumerate_forms(corpus[1])) {
    const auto text = render(corpus[1], form).text;
    const auto name = std::to_string(index.size()) + ".safetensors";
    write_trace_dump(test::small_gpt2_model().forward(encode(text, test::gpt2_vocab()).ids), dir / name);
    index[text] = name;
  }
  TraceDumpDirectory::write_index(dir, index);
  const DumpTraceSource dumps{TraceDumpDirectory(dir)};
  const auto r = run_pipeline(corpus, test::gpt2_vocab(), dumps);
  std::size_t failed = 0;
  for (const auto& rec : r.records) failed += rec.ok() ? 0 : 1;
  CHECK(failed == 3);
  CHECK(r.records.size() == 5);

  const auto agg = aggregate(r.records, ScalarMode::AtTrigger);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].kind == SentenceKind::NPS);

  corpus.pop_back();
  CHECK_THROWS_AS(run_pipeline(corpus, test::gpt2_vocab(), dumps), Error);
}

TEST_CASE("scalarize") {
  const auto r = series_record({1, 2, 3}, 2);
  const auto all = scalarize(r, ScalarMode::MeanAll);
  CHECK(*all.manhattan == 2);
  CHECK(*scalarize(r, ScalarMode::PreTrigger).manhattan == 2);
  CHECK(*scalarize(r, ScalarMode::AtTrigger).manhattan == 3);
  CHECK(*scalarize(r, ScalarMode::AtTrigger).surprisal_diff == -3);

  const auto flat = series_record({4, 4, 4, 4}, 1);
  for (const auto mode : {ScalarMode::MeanAll, ScalarMode::PreTrigger, ScalarMode::AtTrigger})
    CHECK(*scalarize(flat, mode).manhattan == 4);

  const auto flagged = series_record({1, 2}, std::nullopt);
  CHECK(*scalarize(flagged, ScalarMode::MeanAll).manhattan == 1.5);
  CHECK_THROWS_AS(scalarize(flagged, ScalarMode::AtTrigger), Error);
  CHECK_THROWS_AS(scalarize(series_record({1, 2}, 0), ScalarMode::PreTrigger), Error);
}

TEST_CASE("aggregate") {
  auto a = series_record({2}, 0);
  auto b = series_record({4}, 0);
  auto flagged = series_record({100}, std::nullopt);
  const auto cells = aggregate({a, b, flagged}, ScalarMode::AtTrigger);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].count == 2);
  CHECK(cells[0].manhattan.mean == 3);
  CHECK(*cells[0].manhattan.variance == 2);
  CHECK(*cells[0].manhattan.cv == doctest::Approx(std::sqrt(2.0) / 3));
  CHECK(cells[0].cosine_distance.mean == doctest::Approx(0.7));

  const auto single = aggregate({a}, ScalarMode::AtTrigger);
  CHECK(single[0].manhattan.mean == 2);
  CHECK_FALSE(single[0].manhattan.variance);
  CHECK_FALSE(single[0].manhattan.cv);

  // flagged records stay out of every mode
  CHECK(aggregate({a, b, flagged}, ScalarMode::MeanAll)[0].count == 2);
}
