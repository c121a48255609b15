#include <cstring>
#include <fstream>

#include "doctest.h"
#include "gpath/error.hpp"
#include "gpath/tensor_archive.hpp"
#include "helpers.hpp"

using namespace gpath;

namespace {

std::vector<std::uint8_t> frame(const std::string& header, std::size_t payload) {
  std::vector<std::uint8_t> out(8 + header.size() + payload, 0);
  std::uint64_t n = header.size();
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(n >> (8 * i));
  std::memcpy(out.data() + 8, header.data(), header.size());
  return out;
}

}  // namespace

TEST_CASE("writer and reader round trip") {
  TensorArchiveWriter w;
  const std::vector<float> a{1, 2, 3, 4, 5, 6};
  const std::vector<float> b{-0.5f};
  w.add("a", {2, 3}, a);
  w.add("b", {1}, b);
  w.set_metadata("note", "hello");
  const auto ar = TensorArchive::parse(w.serialize());
  CHECK(ar.info("a").shape == std::vector<std::int64_t>{2, 3});
  CHECK(ar.to_f32("a") == a);
  CHECK(ar.to_f32("b") == b);
  CHECK(ar.metadata().at("note") == "hello");
  CHECK(ar.tensors().size() == 2);
  CHECK(w.serialize() == w.serialize());
}

TEST_CASE("other dtypes widen to float") {
  // F16 1.0 = 0x3C00, BF16 -2.0 = 0xC000, F64 0.25
  const std::string header =
      R"({"h":{"dtype":"F16","shape":[1],"data_offsets":[0,2]},)"
      R"("g":{"dtype":"BF16","shape":[1],"data_offsets":[2,4]},)"
      R"("d":{"dtype":"F64","shape":[1],"data_offsets":[8,16]}})";
  auto bytes = frame(header, 16);
  auto* p = bytes.data() + 8 + header.size();
  p[0] = 0x00; p[1] = 0x3C;
  p[2] = 0x00; p[3] = 0xC0;
  const double q = 0.25;
  std::memcpy(p + 8, &q, 8);
  const auto ar = TensorArchive::parse(bytes);
  CHECK(ar.to_f32("h")[0] == 1.0f);
  CHECK(ar.to_f32("g")[0] == -2.0f);
  CHECK(ar.to_f32("d")[0] == 0.25f);
}

TEST_CASE("malformed archives are rejected") {
  CHECK_THROWS_AS(TensorArchive::parse({1, 2, 3}), Error);
  CHECK_THROWS_AS(TensorArchive::parse(frame("{", 0)), Error);
  // byte length disagrees with shape
  CHECK_THROWS_AS(TensorArchive::parse(frame(R"({"x":{"dtype":"F32","shape":[2],"data_offsets":[0,4]}})", 4)), Error);
  // out of bounds
  CHECK_THROWS_AS(TensorArchive::parse(frame(R"({"x":{"dtype":"F32","shape":[2],"data_offsets":[0,8]}})", 4)), Error);
  // overlapping
  CHECK_THROWS_AS(TensorArchive::parse(frame(R"({"x":{"dtype":"F32","shape":[2],"data_offsets":[0,8]},)"
                                             R"("y":{"dtype":"F32","shape":[1],"data_offsets":[4,8]}})",
                                             8)),
                  Error);
  CHECK_THROWS_AS(TensorArchive::parse(frame(R"({"x":{"dtype":"I8","shape":[1],"data_offsets":[0,1]}})", 1)), Error);
  const auto ok = TensorArchive::parse(frame(R"({"x":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}})", 4));
  CHECK_THROWS_AS((void)ok.info("missing"), Error);
}

TEST_CASE("missing file names the path") {
  try {
    (void)TensorArchive::read("/nonexistent/weights.safetensors");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/weights.safetensors") != std::string::npos);
  }
}
