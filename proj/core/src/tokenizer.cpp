#include "gpath/tokenizer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <array>
#include <fstream>
#include <limits>
#include <sstream>

#include "gpath/error.hpp"
#include "json.hpp"

namespace gpath {
namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// GPT-2's bytes_to_unicode(): printable Latin-1 bytes map to themselves, the
// rest are shifted to 256 + n so every byte has a visible stand-in.
struct SurrogateTable {
  std::array<std::string, 256> encoded;
  std::array<char32_t, 256> code_points{};

  SurrogateTable() {
    const auto printable = [](int b) {
      return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
    };
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      code_points[b] = printable(b) ? static_cast<char32_t>(b) : next++;
      append_utf8(encoded[b], code_points[b]);
    }
  }
};

const SurrogateTable& surrogates() {
  static const SurrogateTable table;
  return table;
}

enum class CharClass { Letter, Number, Space, Other };

struct CodePoint {
  std::size_t offset;
  std::size_t length;
  CharClass cls;
  bool is_ascii_space;  // exactly U+0020
  char32_t value;
};

CharClass classify(UChar32 c) {
  if (c < 0) return CharClass::Other;
  const auto mask = U_GET_GC_MASK(c);
  if (mask & U_GC_L_MASK) return CharClass::Letter;
  if (mask & U_GC_N_MASK) return CharClass::Number;
  if (u_isUWhiteSpace(c)) return CharClass::Space;
  return CharClass::Other;
}

std::vector<CodePoint> decode_code_points(std::string_view text) {
  std::vector<CodePoint> cps;
  cps.reserve(text.size());
  const auto* s = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  while (i < length) {
    const std::int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(s, i, length, c);
    cps.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(i - start),
                   classify(c), c == 0x20, static_cast<char32_t>(c < 0 ? 0xFFFD : c)});
  }
  return cps;
}

std::size_t match_contraction(const std::vector<CodePoint>& cps, std::size_t i) {
  if (cps[i].value != U'\'' || i + 1 >= cps.size()) return 0;
  const char32_t a = cps[i + 1].value;
  if (a == U's' || a == U't' || a == U'm' || a == U'd') return 2;
  if (i + 2 < cps.size()) {
    const char32_t b = cps[i + 2].value;
    if ((a == U'r' && b == U'e') || (a == U'v' && b == U'e') || (a == U'l' && b == U'l')) return 3;
  }
  return 0;
}

// " ?<cls>+" starting at i; returns number of code points consumed.
std::size_t match_run(const std::vector<CodePoint>& cps, std::size_t i, CharClass cls) {
  std::size_t j = i;
  if (cps[j].is_ascii_space && j + 1 < cps.size() && cps[j + 1].cls == cls) ++j;
  if (cps[j].cls != cls) return 0;
  while (j < cps.size() && cps[j].cls == cls) ++j;
  return j - i;
}

std::size_t match_whitespace(const std::vector<CodePoint>& cps, std::size_t i) {
  if (cps[i].cls != CharClass::Space) return 0;
  std::size_t end = i;
  while (end < cps.size() && cps[end].cls == CharClass::Space) ++end;
  // \s+(?!\S): leave the last space for the following word when one follows.
  if (end == cps.size()) return end - i;
  if (end - i > 1) return end - i - 1;
  return 1;  // \s+
}

std::vector<std::string> split_utf8(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto lead = static_cast<std::uint8_t>(s[i]);
    std::size_t n = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
    n = std::min(n, s.size() - i);
    out.emplace_back(s.substr(i, n));
    i += n;
  }
  return out;
}

}  // namespace

const std::string& byte_to_surrogate(std::uint8_t byte) { return surrogates().encoded[byte]; }

int surrogate_to_byte(char32_t code_point) {
  static const auto inverse = [] {
    std::array<int, 512> inv{};
    inv.fill(-1);
    const auto& t = surrogates();
    for (int b = 0; b < 256; ++b) inv[t.code_points[b]] = b;
    return inv;
  }();
  return code_point < inverse.size() ? inverse[code_point] : -1;
}

Vocabulary Vocabulary::from_files(const std::filesystem::path& vocab_json,
                                  const std::filesystem::path& merges_txt) {
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  return from_strings(slurp(vocab_json), slurp(merges_txt));
}

Vocabulary Vocabulary::from_strings(std::string_view vocab_json, std::string_view merges_txt) {
  Vocabulary v;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(vocab_json);
  } catch (const nlohmann::json::exception& e) {
    throw TokenizerError(std::string("vocab json: ") + e.what());
  }
  if (!doc.is_object()) throw TokenizerError("vocab json must be an object of token -> id");

  v.id_to_token_.resize(doc.size());
  std::vector<bool> filled(doc.size(), false);
  for (const auto& [token, id_json] : doc.items()) {
    if (!id_json.is_number_integer()) throw TokenizerError("vocab id for '" + token + "' is not an integer");
    const auto id = id_json.get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= doc.size())
      throw TokenizerError("vocab ids must be dense in [0, size); got " + std::to_string(id));
    if (filled[id]) throw TokenizerError("duplicate vocab id " + std::to_string(id));
    filled[id] = true;
    v.id_to_token_[id] = token;
    v.token_to_id_.emplace(token, static_cast<TokenId>(id));
  }

  std::size_t line_no = 0;
  std::size_t pos = 0;
  int rank = 0;
  while (pos < merges_txt.size()) {
    auto nl = merges_txt.find('\n', pos);
    if (nl == std::string_view::npos) nl = merges_txt.size();
    std::string_view line = merges_txt.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1 && line.starts_with("#")) continue;
    const auto space = line.find(' ');
    if (space == std::string_view::npos || space == 0 || space + 1 == line.size() ||
        line.find(' ', space + 1) != std::string_view::npos)
      throw TokenizerError("merges line " + std::to_string(line_no) + ": expected 'left right'");
    if (!v.merge_ranks_.emplace(std::string(line), rank).second)
      throw TokenizerError("merges line " + std::to_string(line_no) + ": duplicate pair");
    ++rank;
  }
  v.merge_count_ = static_cast<std::size_t>(rank);
  return v;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw TokenizerError("token id " + std::to_string(id) + " out of range [0, " +
                         std::to_string(id_to_token_.size()) + ")");
  return id_to_token_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::merge_rank(std::string_view left, std::string_view right) const {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left).append(" ").append(right);
  const auto it = merge_ranks_.find(key);
  return it == merge_ranks_.end() ? -1 : it->second;
}

std::vector<ByteRange> pretokenize(std::string_view text) {
  const auto cps = decode_code_points(text);
  std::vector<ByteRange> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t n = match_contraction(cps, i);
    if (!n) n = match_run(cps, i, CharClass::Letter);
    if (!n) n = match_run(cps, i, CharClass::Number);
    if (!n) n = match_run(cps, i, CharClass::Other);
    if (!n) n = match_whitespace(cps, i);
    if (!n) n = 1;  // unreachable for classified input; keeps progress guaranteed
    const auto& last = cps[i + n - 1];
    out.push_back({cps[i].offset, last.offset + last.length});
    i += n;
  }
  return out;
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab) {
  TokenSequence seq;
  struct Symbol {
    std::string surrogate;  // concatenated surrogate chars
    std::size_t bytes;
  };
  std::vector<Symbol> word;

  for (const auto& pre : pretokenize(text)) {
    word.clear();
    for (std::size_t b = pre.begin; b < pre.end; ++b)
      word.push_back({byte_to_surrogate(static_cast<std::uint8_t>(text[b])), 1});

    while (word.size() > 1) {
      int best_rank = std::numeric_limits<int>::max();
      std::size_t best = 0;
      for (std::size_t k = 0; k + 1 < word.size(); ++k) {
        const int r = vocab.merge_rank(word[k].surrogate, word[k + 1].surrogate);
        if (r >= 0 && r < best_rank) {
          best_rank = r;
          best = k;
        }
      }
      if (best_rank == std::numeric_limits<int>::max()) break;

      // Merge every occurrence of the winning pair, left to right.
      const std::string left = word[best].surrogate;
      const std::string right = word[best + 1].surrogate;
      std::vector<Symbol> merged;
      merged.reserve(word.size());
      for (std::size_t k = 0; k < word.size(); ++k) {
        if (k + 1 < word.size() && word[k].surrogate == left && word[k + 1].surrogate == right) {
          merged.push_back({left + right, word[k].bytes + word[k + 1].bytes});
          ++k;
        } else {
          merged.push_back(std::move(word[k]));
        }
      }
      word = std::move(merged);
    }

    std::size_t offset = pre.begin;
    for (const auto& sym : word) {
      const auto id = vocab.find(sym.surrogate);
      if (!id) throw TokenizerError("token piece '" + sym.surrogate + "' missing from vocabulary");
      seq.ids.push_back(*id);
      seq.pieces.emplace_back(text.substr(offset, sym.bytes));
      seq.spans.push_back({offset, offset + sym.bytes});
      offset += sym.bytes;
    }
  }
  return seq;
}

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (const auto id : ids) {
    const auto& token = vocab.token(id);
    for (const auto& ch : split_utf8(token)) {
      const auto* s = reinterpret_cast<const std::uint8_t*>(ch.data());
      std::int32_t i = 0;
      UChar32 c = 0;
      U8_NEXT(s, i, static_cast<std::int32_t>(ch.size()), c);
      const int byte = c < 0 ? -1 : surrogate_to_byte(static_cast<char32_t>(c));
      if (byte < 0) throw TokenizerError("token " + std::to_string(id) + " contains a non-byte character");
      out += static_cast<char>(byte);
    }
  }
  return out;
}

}  // namespace gpath
