#include <random>

#include "doctest.h"
#include "gpath/align.hpp"
#include "gpath/error.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace gpath;

namespace {

struct Side {
  RenderedSentence sentence;
  TokenSequence tokens;
};

Side side(const SentenceFamily& f, FormSpec form) {
  Side s{render(f, form), {}};
  s.tokens = encode(s.sentence.text, test::gpt2_vocab());
  return s;
}

// Tokens cut at the given byte offsets; pieces are the raw bytes.
TokenSequence cut(const std::string& text, std::vector<std::size_t> cuts) {
  TokenSequence t;
  cuts.push_back(text.size());
  std::size_t at = 0;
  for (const auto c : cuts) {
    if (c <= at) continue;
    t.ids.push_back(0);
    t.spans.push_back({at, c});
    t.pieces.push_back(text.substr(at, c - at));
    at = c;
  }
  return t;
}

RenderedSentence sentence(std::string text, std::vector<ByteRange> inserted = {}) {
  RenderedSentence r;
  r.text = std::move(text);
  r.inserted_spans = std::move(inserted);
  return r;
}

void check_classification(const PairMap& m, std::size_t n_base, std::size_t n_variant) {
  std::vector<int> base(n_base, 0), variant(n_variant, 0);
  for (const auto& [i, j] : m.pairs) {
    ++base.at(i);
    ++variant.at(j);
  }
  for (const auto j : m.excluded_variant) ++variant.at(j);
  for (const auto i : m.excluded_base) ++base.at(i);
  for (const auto& e : m.excluded_boundary) ++(e.side == AlignSide::Base ? base : variant).at(e.index);
  for (const auto c : base) CHECK(c == 1);
  for (const auto c : variant) CHECK(c == 1);
  for (std::size_t k = 1; k < m.pairs.size(); ++k) {
    CHECK(m.pairs[k].first > m.pairs[k - 1].first);
    CHECK(m.pairs[k].second > m.pairs[k - 1].second);
  }
}

void check_against_oracle(const Side& a, const Side& b) {
  const auto map = align(a.sentence, a.tokens, b.sentence, b.tokens);
  check_classification(map, a.tokens.size(), b.tokens.size());
  const auto ia = test::align_input(a.sentence, a.tokens), ib = test::align_input(b.sentence, b.tokens);
  bool allowed = false;
  const auto got = oracle::score_pairs(ia, ib, map.pairs, allowed);
  CHECK(allowed);
  const auto best = oracle::best_monotone_matching(ia, ib);
  CHECK_MESSAGE(got == best, a.sentence.text << " | " << b.sentence.text);
  CHECK(align(b.sentence, b.tokens, a.sentence, a.tokens) == transpose(map));
}

std::vector<std::pair<Side, Side>> corpus_pairs() {
  std::vector<std::pair<Side, Side>> out;
  for (const auto& f : test::seed_corpus())
    for (const auto& form : enumerate_forms(f)) {
      if (form.negated) continue;
      auto neg = form;
      neg.negated = true;
      out.emplace_back(side(f, form), side(f, neg));
    }
  return out;
}

}  // namespace

TEST_CASE("identical sentences pair one to one") {
  const auto& f = test::seed_corpus().front();
  const auto s = side(f, {});
  const auto m = align(s.sentence, s.tokens, s.sentence, s.tokens);
  REQUIRE(m.pairs.size() == s.tokens.size());
  for (std::size_t i = 0; i < m.pairs.size(); ++i) CHECK(m.pairs[i] == std::pair{i, i});
  CHECK(m.excluded_variant.empty());
  CHECK(m.excluded_boundary.empty());
}

TEST_CASE("NP/S negation excludes exactly the that token") {
  std::size_t checked = 0;
  for (const auto& f : test::seed_corpus()) {
    if (f.kind != SentenceKind::NPS) continue;
    for (const auto& form : enumerate_forms(f)) {
      if (form.negated) continue;
      auto neg = form;
      neg.negated = true;
      const auto a = side(f, form), b = side(f, neg);
      const auto m = align(a.sentence, a.tokens, b.sentence, b.tokens);
      if (!m.excluded_boundary.empty()) continue;
      REQUIRE(m.excluded_variant.size() == 1);
      CHECK(b.tokens.pieces[m.excluded_variant[0]] == " that");
      CHECK(m.pairs.size() == a.tokens.size());
      CHECK(m.excluded_base.empty());
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("MV/RR and NP/Z insertions") {
  const auto* mvrr = &test::seed_corpus().front();
  for (const auto& f : test::seed_corpus())
    if (f.id == "mvrr01") mvrr = &f;
  const auto a = side(*mvrr, {}), b = side(*mvrr, {VerbChoice::Ambiguous, true, false});
  const auto m = align(a.sentence, a.tokens, b.sentence, b.tokens);
  std::vector<std::string> dropped;
  for (const auto j : m.excluded_variant) dropped.push_back(b.tokens.pieces[j]);
  CHECK(dropped == std::vector<std::string>{" that", " were"});
  CHECK(m.pairs.size() == a.tokens.size());

  const auto& npz = test::seed_corpus().front();
  const auto c = side(npz, {}), d = side(npz, {VerbChoice::Ambiguous, true, false});
  const auto n = align(c.sentence, c.tokens, d.sentence, d.tokens);
  REQUIRE(n.excluded_variant.size() == 1);
  CHECK(d.tokens.pieces[n.excluded_variant[0]] == ",");
}

TEST_CASE("fused comma is excluded on both sides") {
  const auto base = sentence("When the dog scratched the vet left.");
  const auto variant = sentence("When the dog scratched, the vet left.", {{22, 23}});
  // "scratched," as one token on the variant side
  const auto bt = cut(base.text, {4, 8, 12, 22, 26, 30, 35});
  const auto vt = cut(variant.text, {4, 8, 12, 23, 27, 31, 36});
  const auto m = align(base, bt, variant, vt);
  REQUIRE(m.excluded_boundary.size() == 2);
  CHECK(m.excluded_boundary[0].side == AlignSide::Base);
  CHECK(m.excluded_boundary[0].index == 3);
  CHECK(m.excluded_boundary[1].side == AlignSide::Variant);
  CHECK(m.excluded_boundary[1].index == 3);
  CHECK(m.excluded_boundary[1].reason.find("straddles") != std::string::npos);
  CHECK(m.pairs.size() == bt.size() - 1);
  CHECK(m.excluded_variant.empty());
  const auto best = oracle::best_monotone_matching(test::align_input(base, bt), test::align_input(variant, vt));
  CHECK(best.total == m.pairs.size());
  CHECK(trigger_pair_index(m, bt, {23, 26}) == std::optional<std::size_t>(3));
  CHECK_FALSE(trigger_pair_index(m, bt, {13, 22}));
}

TEST_CASE("retokenized boundary falls back to piece matching") {
  // Base splits "barn" differently; identical pieces elsewhere still pair.
  const auto base = sentence("past the barn fell");
  const auto variant = sentence("past the big barn fell", {{8, 12}});
  const auto bt = cut(base.text, {4, 8, 11, 13});
  const auto vt = cut(variant.text, {4, 8, 12, 17});
  const auto m = align(base, bt, variant, vt);
  check_classification(m, bt.size(), vt.size());
  bool allowed = false;
  const auto ia = test::align_input(base, bt), ib = test::align_input(variant, vt);
  CHECK(oracle::score_pairs(ia, ib, m.pairs, allowed) == oracle::best_monotone_matching(ia, ib));
  CHECK(allowed);
}

TEST_CASE("align matches the exhaustive oracle on corpus pairs") {
  const auto pairs = corpus_pairs();
  CHECK(pairs.size() >= 50);
  for (const auto& [a, b] : pairs) {
    check_against_oracle(a, b);
    check_against_oracle(b, a);
  }
}

TEST_CASE("align matches the oracle under random segmentations") {
  const auto pairs = corpus_pairs();
  std::mt19937 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto [a, b] = pairs[std::uniform_int_distribution<std::size_t>(0, pairs.size() - 1)(rng)];
    for (auto* s : {&a, &b}) {
      std::vector<std::size_t> cuts;
      for (std::size_t i = 1; i < s->sentence.text.size(); ++i)
        if (std::bernoulli_distribution(0.3)(rng)) cuts.push_back(i);
      s->tokens = cut(s->sentence.text, cuts);
    }
    check_against_oracle(a, b);
  }
}

TEST_CASE("texts that differ outside insertions are rejected") {
  const auto a = sentence("the cat sat");
  const auto b = sentence("the dog sat");
  CHECK_THROWS_AS(align(a, cut(a.text, {3, 7}), b, cut(b.text, {3, 7})), AlignError);
}

TEST_CASE("canonical insertions slide left") {
  const std::string text = "discovered that the player";
  const auto spans = canonical_insertions(text, {{11, 16}});  // "that "
  REQUIRE(spans.size() == 1);
  CHECK(text.substr(spans[0].begin, spans[0].size()) == " that");
  CHECK(canonical_insertions("scratched, the", {{9, 10}})[0].begin == 9);
}

TEST_CASE("pair map json") {
  const auto& npz = test::seed_corpus().front();
  const auto c = side(npz, {}), d = side(npz, {VerbChoice::Ambiguous, true, false});
  const auto j = nlohmann::json::parse(pair_map_json(align(c.sentence, c.tokens, d.sentence, d.tokens)));
  CHECK(j.at("pairs").size() == c.tokens.size());
  CHECK(j.at("excluded_variant").size() == 1);
  CHECK(j.at("excluded_boundary").empty());
}
