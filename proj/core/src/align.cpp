#include "gpath/align.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "gpath/error.hpp"
#include "json.hpp"

namespace gpath {
namespace {

constexpr std::size_t kRemoved = static_cast<std::size_t>(-1);

struct SideView {
  const TokenSequence* tokens = nullptr;
  std::vector<std::size_t> reduced;  // byte offset -> offset in the shared text, or kRemoved
  std::string shared_text;

  enum class Kind { Pure, Mixed, Inserted };
  struct TokenInfo {
    Kind kind = Kind::Pure;
    std::size_t begin = 0;  // reduced offsets of first/last kept byte (+1)
    std::size_t end = 0;
  };
  std::vector<TokenInfo> info;
};

SideView make_view(const RenderedSentence& s, const TokenSequence& tokens) {
  SideView v;
  v.tokens = &tokens;
  const auto spans = canonical_insertions(s.text, s.inserted_spans);
  v.reduced.assign(s.text.size(), 0);
  std::vector<bool> removed(s.text.size(), false);
  for (const auto& r : spans)
    for (std::size_t i = r.begin; i < r.end; ++i) removed[i] = true;
  std::size_t next = 0;
  for (std::size_t i = 0; i < s.text.size(); ++i) {
    if (removed[i]) {
      v.reduced[i] = kRemoved;
    } else {
      v.reduced[i] = next++;
      v.shared_text += s.text[i];
    }
  }

  if (!tokens.spans.empty() && tokens.spans.back().end != s.text.size())
    throw AlignError("token spans do not cover sentence \"" + s.text + "\"");
  for (const auto& span : tokens.spans) {
    SideView::TokenInfo t;
    std::size_t kept = 0;
    bool first = true;
    for (std::size_t i = span.begin; i < span.end; ++i) {
      if (v.reduced[i] == kRemoved) continue;
      if (first) t.begin = v.reduced[i];
      first = false;
      t.end = v.reduced[i] + 1;
      ++kept;
    }
    if (kept == 0) {
      t.kind = SideView::Kind::Inserted;
    } else if (kept != span.size()) {
      t.kind = SideView::Kind::Mixed;
    }
    v.info.push_back(t);
  }
  return v;
}

// Side-independent ordering used to break LCS ties, so swapping base and
// variant yields the transposed result.
auto tie_key(const SideView& v, std::size_t i) {
  return std::make_tuple(v.info[i].begin, v.info[i].end, std::string_view(v.tokens->pieces[i]));
}

void lcs_pair(const SideView& a, const std::vector<std::size_t>& ia, const SideView& b,
              const std::vector<std::size_t>& ib, std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const std::size_t n = ia.size(), m = ib.size();
  if (n == 0 || m == 0) return;
  // suffix table: dp[i][j] = LCS length of ia[i..], ib[j..]
  std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
  const auto same = [&](std::size_t i, std::size_t j) {
    return a.tokens->pieces[ia[i]] == b.tokens->pieces[ib[j]];
  };
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      dp[i][j] = same(i, j) ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);

  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (same(i, j)) {
      out.emplace_back(ia[i], ib[j]);
      ++i;
      ++j;
    } else if (dp[i + 1][j] > dp[i][j + 1]) {
      ++i;
    } else if (dp[i + 1][j] < dp[i][j + 1]) {
      ++j;
    } else if (tie_key(a, ia[i]) <= tie_key(b, ib[j])) {
      ++i;
    } else {
      ++j;
    }
  }
}

}  // namespace

std::optional<std::size_t> PairMap::pair_of_base(std::size_t base_index) const {
  const auto it = std::lower_bound(pairs.begin(), pairs.end(), base_index,
                                   [](const auto& p, std::size_t b) { return p.first < b; });
  if (it == pairs.end() || it->first != base_index) return std::nullopt;
  return static_cast<std::size_t>(it - pairs.begin());
}

std::vector<ByteRange> canonical_insertions(std::string_view text, std::vector<ByteRange> spans) {
  std::sort(spans.begin(), spans.end(), [](const auto& x, const auto& y) { return x.begin < y.begin; });
  std::size_t floor = 0;
  for (auto& r : spans) {
    if (r.begin < floor || r.end > text.size() || r.begin > r.end)
      throw AlignError("inserted spans overlap or fall outside the sentence");
    while (!r.empty() && r.begin > floor && text[r.begin - 1] == text[r.end - 1]) {
      --r.begin;
      --r.end;
    }
    floor = r.end;
  }
  return spans;
}

PairMap align(const RenderedSentence& base, const TokenSequence& base_tokens, const RenderedSentence& variant,
              const TokenSequence& variant_tokens) {
  const auto a = make_view(base, base_tokens);
  const auto b = make_view(variant, variant_tokens);
  if (a.shared_text != b.shared_text)
    throw AlignError("sentences differ outside inserted spans: \"" + base.text + "\" vs \"" + variant.text + "\"");

  PairMap map;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> base_by_span;
  for (std::size_t i = 0; i < a.info.size(); ++i) {
    if (a.info[i].kind == SideView::Kind::Inserted) map.excluded_base.push_back(i);
    if (a.info[i].kind == SideView::Kind::Pure) base_by_span[{a.info[i].begin, a.info[i].end}] = i;
  }
  std::vector<std::pair<std::size_t, std::size_t>> exact;
  for (std::size_t j = 0; j < b.info.size(); ++j) {
    if (b.info[j].kind == SideView::Kind::Inserted) map.excluded_variant.push_back(j);
    if (b.info[j].kind != SideView::Kind::Pure) continue;
    if (const auto it = base_by_span.find({b.info[j].begin, b.info[j].end}); it != base_by_span.end())
      exact.emplace_back(it->second, j);
  }

  // Walk the gaps between exact pairs; leftovers get an LCS second chance.
  std::vector<bool> base_paired(a.info.size(), false), variant_paired(b.info.size(), false);
  std::size_t next_a = 0, next_b = 0;
  const auto close_gap = [&](std::size_t end_a, std::size_t end_b) {
    std::vector<std::size_t> ga, gb;
    for (std::size_t i = next_a; i < end_a; ++i)
      if (a.info[i].kind != SideView::Kind::Inserted) ga.push_back(i);
    for (std::size_t j = next_b; j < end_b; ++j)
      if (b.info[j].kind != SideView::Kind::Inserted) gb.push_back(j);
    lcs_pair(a, ga, b, gb, map.pairs);
  };
  for (const auto& [i, j] : exact) {
    close_gap(i, j);
    map.pairs.emplace_back(i, j);
    next_a = i + 1;
    next_b = j + 1;
  }
  close_gap(a.info.size(), b.info.size());

  for (const auto& [i, j] : map.pairs) {
    base_paired[i] = true;
    variant_paired[j] = true;
  }
  const auto reason = [](const SideView& v, std::size_t i) {
    return v.info[i].kind == SideView::Kind::Mixed ? std::string("token straddles inserted material")
                                                   : std::string("no counterpart after retokenization");
  };
  for (std::size_t i = 0; i < a.info.size(); ++i)
    if (!base_paired[i] && a.info[i].kind != SideView::Kind::Inserted)
      map.excluded_boundary.push_back({AlignSide::Base, i, reason(a, i)});
  for (std::size_t j = 0; j < b.info.size(); ++j)
    if (!variant_paired[j] && b.info[j].kind != SideView::Kind::Inserted)
      map.excluded_boundary.push_back({AlignSide::Variant, j, reason(b, j)});
  return map;
}

PairMap transpose(const PairMap& map) {
  PairMap t;
  for (const auto& [i, j] : map.pairs) t.pairs.emplace_back(j, i);
  t.excluded_base = map.excluded_variant;
  t.excluded_variant = map.excluded_base;
  for (const auto& e : map.excluded_boundary)
    t.excluded_boundary.push_back({e.side == AlignSide::Base ? AlignSide::Variant : AlignSide::Base, e.index, e.reason});
  std::stable_sort(t.excluded_boundary.begin(), t.excluded_boundary.end(),
                   [](const auto& x, const auto& y) { return x.side < y.side; });
  return t;
}

std::optional<std::size_t> trigger_pair_index(const PairMap& map, const TokenSequence& base_tokens,
                                              const ByteRange& trigger) {
  for (std::size_t i = 0; i < base_tokens.spans.size(); ++i)
    if (base_tokens.spans[i].contains(trigger.begin)) return map.pair_of_base(i);
  return std::nullopt;
}

std::string pair_map_json(const PairMap& map) {
  nlohmann::ordered_json j;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& [b, v] : map.pairs) j["pairs"].push_back({b, v});
  j["excluded_variant"] = map.excluded_variant;
  j["excluded_base"] = map.excluded_base;
  j["excluded_boundary"] = nlohmann::ordered_json::array();
  for (const auto& e : map.excluded_boundary)
    j["excluded_boundary"].push_back(
        {{"side", e.side == AlignSide::Base ? "base" : "variant"}, {"index", e.index}, {"reason", e.reason}});
  return j.dump();
}

}  // namespace gpath
