#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gpath/byte_range.hpp"

namespace gpath {

using TokenId = std::int32_t;

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::string> pieces;  // raw bytes of each token (may split a UTF-8 char)
  std::vector<ByteRange> spans;     // contiguous, covering the input exactly

  [[nodiscard]] std::size_t size() const { return ids.size(); }
  [[nodiscard]] bool empty() const { return ids.empty(); }
};

// Byte-level BPE vocabulary in the GPT-2 format: a JSON token->id map plus a
// ranked merge list. Immutable once constructed.
class Vocabulary {
 public:
  // `merges` holds "left right" lines; a leading "#version" line is skipped.
  static Vocabulary from_files(const std::filesystem::path& vocab_json,
                               const std::filesystem::path& merges_txt);
  static Vocabulary from_strings(std::string_view vocab_json, std::string_view merges_txt);

  [[nodiscard]] std::size_t size() const { return id_to_token_.size(); }
  [[nodiscard]] std::size_t merge_count() const { return merge_count_; }

  // Token strings are in the byte->unicode surrogate alphabet ("Ġtook").
  [[nodiscard]] const std::string& token(TokenId id) const;
  [[nodiscard]] std::optional<TokenId> find(std::string_view token) const;
  // Merge rank of the pair, or -1 when the pair is not mergeable.
  [[nodiscard]] int merge_rank(std::string_view left, std::string_view right) const;

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> merge_ranks_;  // key: left + ' ' + right
  std::size_t merge_count_ = 0;
};

// Surrogate character (UTF-8 encoded) used for each raw byte in vocab strings.
const std::string& byte_to_surrogate(std::uint8_t byte);
// Inverse mapping; returns -1 for code points outside the surrogate alphabet.
int surrogate_to_byte(char32_t code_point);

// Splits text into pre-tokens following the GPT-2 pattern:
// contractions | ?letters | ?digits | ?other | whitespace runs.
std::vector<ByteRange> pretokenize(std::string_view text);

TokenSequence encode(std::string_view text, const Vocabulary& vocab);
std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab);

}  // namespace gpath
