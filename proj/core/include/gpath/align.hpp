#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpath/corpus.hpp"
#include "gpath/tokenizer.hpp"

namespace gpath {

enum class AlignSide { Base, Variant };

struct BoundaryExclusion {
  AlignSide side = AlignSide::Base;
  std::size_t index = 0;
  std::string reason;

  friend bool operator==(const BoundaryExclusion&, const BoundaryExclusion&) = default;
};

// Token correspondence between a sentence and a perturbed copy of it.
// Every token on each side is exactly one of: paired, inserted-excluded, or
// boundary-excluded.
struct PairMap {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (base, variant), increasing
  std::vector<std::size_t> excluded_variant;  // variant tokens made of inserted material
  std::vector<std::size_t> excluded_base;     // same for the base side (empty when base is un-negated)
  std::vector<BoundaryExclusion> excluded_boundary;

  [[nodiscard]] std::optional<std::size_t> pair_of_base(std::size_t base_index) const;

  friend bool operator==(const PairMap&, const PairMap&) = default;
};

// Pairs tokens whose byte spans coincide once inserted spans are removed,
// then re-pairs leftovers between consecutive exact pairs by longest common
// subsequence over piece strings. Whatever remains is boundary-excluded.
// Throws AlignError when the two texts differ outside their inserted spans.
PairMap align(const RenderedSentence& base, const TokenSequence& base_tokens,
              const RenderedSentence& variant, const TokenSequence& variant_tokens);

// Swaps the roles of base and variant.
PairMap transpose(const PairMap& map);

// Shifts each inserted range left while the byte before it equals its last
// byte: removing "that " or " that" from "x that y" yields the same text, and
// the left-most choice keeps GPT-2's leading-space tokens intact.
std::vector<ByteRange> canonical_insertions(std::string_view text, std::vector<ByteRange> spans);

// Index into map.pairs of the pair whose base token contains the first byte
// of `trigger`, if that token was paired.
std::optional<std::size_t> trigger_pair_index(const PairMap& map, const TokenSequence& base_tokens,
                                              const ByteRange& trigger);

// Debug dump: {"pairs": [[b, v], ...], "excluded_variant": [...], ...}.
std::string pair_map_json(const PairMap& map);

}  // namespace gpath
