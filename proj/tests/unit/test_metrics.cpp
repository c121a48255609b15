#include <cmath>
#include <random>

#include "doctest.h"
#include "gpath/align.hpp"
#include "gpath/error.hpp"
#include "gpath/metrics.hpp"
#include "helpers.hpp"

using namespace gpath;

namespace {

using Vec = std::vector<float>;

CenteringStats center_at(std::vector<double> mean) {
  CenteringStats s;
  s.mean = std::move(mean);
  s.count = 1;
  return s;
}

Vec random_vec(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<float> dist(0.0f, 3.0f);
  Vec v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("centering") {
  const Vec a{1, 3}, b{3, 1};
  const std::vector<std::span<const float>> two{a, b};
  const auto s = compute_centering(two, "block.11");
  CHECK(s.mean == std::vector<double>{2, 2});
  CHECK(s.count == 2);
  CHECK(s.layer == "block.11");

  const std::vector<std::span<const float>> one{a};
  const auto single = compute_centering(one);
  CHECK(single.mean == std::vector<double>{1, 3});
  CHECK_THROWS_AS(cosine_centered(a, b, single), DegenerateVectorError);

  CHECK_THROWS_AS(compute_centering(std::span<const std::span<const float>>{}), Error);
  const Vec short_vec{1};
  const std::vector<std::span<const float>> ragged{a, short_vec};
  CHECK_THROWS_AS(compute_centering(ragged), Error);
}

TEST_CASE("centering matches a streaming oracle") {
  std::mt19937 rng(3);
  std::vector<Vec> rows;
  for (int i = 0; i < 500; ++i) rows.push_back(random_vec(rng, 24));
  std::vector<std::span<const float>> spans(rows.begin(), rows.end());
  const auto s = compute_centering(spans);
  const auto expected = oracle::streaming_mean(rows);
  for (std::size_t k = 0; k < 24; ++k) CHECK(std::abs(s.mean[k] - expected[k]) < 1e-6);
}

TEST_CASE("manhattan examples") {
  const Vec v{1.5f, -2, 7};
  CHECK(manhattan(v, v) == 0);
  CHECK(manhattan(Vec{1, 2}, Vec{4, 0}) == 5);
  CHECK_THROWS_AS(manhattan(Vec{1}, Vec{1, 2}), Error);
}

TEST_CASE("manhattan properties on random triples") {
  std::mt19937 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_vec(rng, 16), b = random_vec(rng, 16), c = random_vec(rng, 16);
    const double ab = manhattan(a, b), ba = manhattan(b, a);
    CHECK(ab == ba);
    CHECK(ab <= manhattan(a, c) + manhattan(c, b) + 1e-9);
    CHECK(ab >= 0);
    CHECK((ab == 0) == (a == b));
    // translation by c; float rounding of the shifted inputs bounds the error
    Vec ac(16), bc(16);
    for (int k = 0; k < 16; ++k) {
      ac[k] = a[k] + c[k];
      bc[k] = b[k] + c[k];
    }
    CHECK(std::abs(manhattan(ac, bc) - ab) <= 1e-4 * (1 + ab));
  }
}

TEST_CASE("centering leaves manhattan unchanged") {
  std::mt19937 rng(8);
  std::vector<Vec> rows;
  for (int i = 0; i < 20; ++i) rows.push_back(random_vec(rng, 10));
  std::vector<std::span<const float>> spans(rows.begin(), rows.end());
  const auto s = compute_centering(spans);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    Vec a(10), b(10);
    for (int k = 0; k < 10; ++k) {
      a[k] = static_cast<float>(rows[i - 1][k] - s.mean[k]);
      b[k] = static_cast<float>(rows[i][k] - s.mean[k]);
    }
    CHECK(std::abs(manhattan(a, b) - manhattan(rows[i - 1], rows[i])) < 1e-4);
  }
}

TEST_CASE("cosine examples") {
  const auto zero = center_at({0, 0});
  CHECK(cosine_centered(Vec{1, 0}, Vec{0, 1}, zero) == doctest::Approx(0.0));
  CHECK(cosine_centered(Vec{2, 1}, Vec{0, 1}, center_at({1, 1})) == doctest::Approx(-1.0));
  CHECK(cosine_centered(Vec{3, 4}, Vec{3, 4}, zero) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine_centered(Vec{1, 1}, Vec{0, 1}, center_at({1, 1})), DegenerateVectorError);
}

TEST_CASE("cosine bounds and self-similarity") {
  std::mt19937 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_vec(rng, 12), b = random_vec(rng, 12), m = random_vec(rng, 12);
    const auto stats = center_at(std::vector<double>(m.begin(), m.end()));
    const double c = cosine_centered(a, b, stats);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(cosine_centered(a, a, stats) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_centered(a, b, stats) == cosine_centered(b, a, stats));
  }
}

TEST_CASE("surprisal difference") {
  PairMap map;
  map.pairs = {{0, 0}, {1, 2}, {2, 3}};
  const std::vector<std::optional<double>> base{std::nullopt, 5.0, 2.0};
  const std::vector<std::optional<double>> variant{std::nullopt, 1.0, 4.0, 2.5};
  const auto d = surprisal_difference(base, variant, map);
  REQUIRE(d.size() == 3);
  CHECK_FALSE(d[0]);
  CHECK(*d[1] == 1.0);
  CHECK(*d[2] == -0.5);

  const auto swapped = surprisal_difference(variant, base, transpose(map));
  for (std::size_t k = 0; k < d.size(); ++k) {
    CHECK(d[k].has_value() == swapped[k].has_value());
    if (d[k]) CHECK(*d[k] == -*swapped[k]);
  }

  PairMap identity;
  identity.pairs = {{0, 0}, {1, 1}, {2, 2}};
  for (const auto& v : surprisal_difference(base, base, identity))
    if (v) CHECK(*v == 0.0);
}

TEST_CASE("uniform vs one-hot gives ln V at the defined pair") {
  const std::size_t vocab = 16;
  const auto trace = [&](float peak) {
    ForwardTrace t;
    t.ids = {1, 2};
    t.vocab_size = vocab;
    t.d_model = 1;
    t.layers = {"embed"};
    t.hidden = {Vec{0, 0}};
    t.logits = Vec(2 * vocab, 0.0f);
    (*t.logits)[2] = peak;
    return t;
  };
  const auto uniform = surprisal_series(trace(0.0f));
  const auto peaked = surprisal_series(trace(1000.0f));
  PairMap map;
  map.pairs = {{0, 0}, {1, 1}};
  const auto d = surprisal_difference(uniform, peaked, map);
  CHECK_FALSE(d[0]);
  CHECK(std::abs(*d[1] - std::log(16.0)) < 1e-6);
}
