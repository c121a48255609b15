#pragma once

#include <filesystem>
#include <string>

#include "gpath/corpus.hpp"
#include "gpath/model.hpp"
#include "gpath/tokenizer.hpp"
#include "oracles.hpp"

namespace gpath::test {

inline std::filesystem::path data_dir() { return GPATH_TEST_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return GPATH_TEST_FIXTURE_DIR; }

inline const Vocabulary& gpt2_vocab() {
  static const Vocabulary vocab =
      Vocabulary::from_files(data_dir() / "gpt2" / "vocab.json", data_dir() / "gpt2" / "merges.txt");
  return vocab;
}

inline const std::vector<SentenceFamily>& seed_corpus() {
  static const auto corpus = load_corpus(data_dir() / "corpus" / "seed.tsv");
  return corpus;
}

inline ModelConfig tiny_config(int vocab = 16) {
  ModelConfig c;
  c.n_layer = 2;
  c.n_head = 2;
  c.d_model = 8;
  c.vocab_size = vocab;
  c.n_ctx = 32;
  return c;
}

// Random weights over the real GPT-2 vocabulary, small enough for unit tests.
inline ModelConfig small_gpt2_config() {
  ModelConfig c;
  c.n_layer = 2;
  c.n_head = 2;
  c.d_model = 16;
  c.n_ctx = 64;
  return c;
}

inline const Model& small_gpt2_model() {
  static const auto model =
      Model::load(TensorArchive::parse(synthetic_archive(small_gpt2_config(), 42).serialize()), small_gpt2_config());
  return model;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gpath-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline oracle::AlignInput align_input(const RenderedSentence& s, const TokenSequence& t) {
  oracle::AlignInput in;
  in.text = s.text;
  for (const auto& r : s.inserted_spans) in.inserted.push_back({r.begin, r.end});
  for (const auto& r : t.spans) in.token_spans.push_back({r.begin, r.end});
  in.pieces = t.pieces;
  return in;
}

}  // namespace gpath::test
