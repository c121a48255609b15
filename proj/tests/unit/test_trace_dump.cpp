#include "doctest.h"
#include "gpath/error.hpp"
#include "gpath/trace_dump.hpp"
#include "helpers.hpp"

using namespace gpath;

namespace {

const Model& tiny_model() {
  static const auto model =
      Model::load(TensorArchive::parse(synthetic_archive(test::tiny_config(), 9).serialize()), test::tiny_config());
  return model;
}

}  // namespace

TEST_CASE("dump round trip is bit-identical") {
  const auto dir = test::scratch_dir("dump");
  const auto trace = tiny_model().forward(std::vector<TokenId>{1, 2, 3, 4, 5});
  write_trace_dump(trace, dir / "t.safetensors", test::tiny_config());
  CHECK(load_trace_dump(dir / "t.safetensors") == trace);
  CHECK(load_trace_dump(dir / "t.safetensors", test::tiny_config()) == trace);
  auto other = test::tiny_config();
  other.d_model = 16;
  CHECK_THROWS_AS(load_trace_dump(dir / "t.safetensors", other), ModelError);
}

TEST_CASE("dump without logits") {
  const auto dir = test::scratch_dir("dump-nologits");
  const auto trace = tiny_model().forward(std::vector<TokenId>{1, 2, 3}, {false, 1});
  write_trace_dump(trace, dir / "t.safetensors");
  const auto back = load_trace_dump(dir / "t.safetensors");
  CHECK_FALSE(back.logits);
  CHECK(back.hidden == trace.hidden);
  CHECK_THROWS_AS(surprisal_series(back), ModelError);
}

TEST_CASE("dump directory index") {
  const auto dir = test::scratch_dir("dump-dir");
  const auto trace = tiny_model().forward(std::vector<TokenId>{6, 7});
  write_trace_dump(trace, dir / "a.safetensors");
  TraceDumpDirectory::write_index(dir, {{"hello world", "a.safetensors"}});
  const TraceDumpDirectory dumps(dir);
  CHECK(dumps.size() == 1);
  CHECK(dumps.contains("hello world"));
  CHECK(dumps.load("hello world") == trace);
  CHECK_THROWS_AS((void)dumps.load("missing"), Error);
}

TEST_CASE("inconsistent dumps are rejected") {
  const auto dir = test::scratch_dir("dump-bad");
  TensorArchiveWriter w;
  w.set_metadata("format", "gpath-trace/1");
  w.set_metadata("ids", "[1,2]");
  w.set_metadata("layers", "[\"embed\"]");
  const std::vector<float> three(3 * 4, 0.0f);
  w.add("hidden.embed", {3, 4}, three);
  w.write(dir / "bad.safetensors");
  CHECK_THROWS_AS(load_trace_dump(dir / "bad.safetensors"), ModelError);
}
