#include <benchmark/benchmark.h>

#include <gpath/align.hpp>
#include <gpath/corpus.hpp>
#include <gpath/model.hpp>
#include <gpath/tensor_archive.hpp>
#include <gpath/tokenizer.hpp>

#include <filesystem>
#include <vector>

namespace {

const std::filesystem::path kData = GPATH_BENCH_DATA_DIR;

const gpath::Vocabulary& vocab() {
  static const auto v = gpath::Vocabulary::from_files(kData / "gpt2/vocab.json", kData / "gpt2/merges.txt");
  return v;
}

const std::vector<gpath::SentenceFamily>& corpus() {
  static const auto c = gpath::load_corpus(kData / "corpus/seed.tsv");
  return c;
}

std::vector<gpath::RenderedSentence> rendered() {
  std::vector<gpath::RenderedSentence> out;
  for (const auto& family : corpus())
    for (const auto& form : gpath::enumerate_forms(family)) out.push_back(gpath::render(family, form));
  return out;
}

void BM_EncodeCorpus(benchmark::State& state) {
  const auto sentences = rendered();
  const auto& v = vocab();
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& s : sentences) {
      benchmark::DoNotOptimize(gpath::encode(s.text, v));
      bytes += s.text.size();
    }
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_EncodeCorpus);

void BM_AlignCorpus(benchmark::State& state) {
  const auto& v = vocab();
  struct Pair {
    gpath::RenderedSentence base, variant;
    gpath::TokenSequence base_tokens, variant_tokens;
  };
  std::vector<Pair> pairs;
  for (const auto& family : corpus()) {
    std::vector<gpath::RenderedSentence> forms;
    for (const auto& form : gpath::enumerate_forms(family)) forms.push_back(gpath::render(family, form));
    for (const auto& a : forms)
      for (const auto& b : forms)
        if (a.inserted_spans.empty() && !b.inserted_spans.empty() && a.form.verb == b.form.verb &&
            a.form.extended == b.form.extended)
          pairs.push_back({a, b, gpath::encode(a.text, v), gpath::encode(b.text, v)});
  }
  for (auto _ : state)
    for (const auto& p : pairs)
      benchmark::DoNotOptimize(gpath::align(p.base, p.base_tokens, p.variant, p.variant_tokens));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pairs.size()));
}
BENCHMARK(BM_AlignCorpus);

void BM_Forward(benchmark::State& state) {
  gpath::ModelConfig config;
  config.n_layer = 2;
  config.n_head = 4;
  config.d_model = static_cast<int>(state.range(0));
  config.n_ctx = 64;
  const auto model =
      gpath::Model::load(gpath::TensorArchive::parse(gpath::synthetic_archive(config, 7).serialize()), config);
  const auto ids = gpath::encode("The old man the boat while the children watched from the shore.", vocab()).ids;
  gpath::ForwardOptions options;
  options.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(ids, options));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * ids.size()));
}
BENCHMARK(BM_Forward)->Args({64, 1})->Args({256, 1})->Args({256, 4})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
