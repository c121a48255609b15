#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpath/byte_range.hpp"

namespace gpath {

enum class SentenceKind { NPZ, NPS, MVRR };

std::string_view to_string(SentenceKind kind);
std::optional<SentenceKind> parse_sentence_kind(std::string_view text);

// Components of one garden-path item. Rendering glues the slots together with
// single spaces according to a per-kind template.
struct SentenceFamily {
  std::string id;
  SentenceKind kind = SentenceKind::NPZ;
  std::string preamble;
  std::string ambiguous_verb;
  std::string unambiguous_verb;
  std::optional<std::string> blocked_object;  // NPZ only
  std::string post_region;
  std::optional<std::string> extension;
  std::string negation_insert;
  std::string trigger;
  std::string continuation;
};

// Throws CorpusError describing the first violated constraint.
void validate(const SentenceFamily& family);

enum class VerbChoice { Ambiguous, Unambiguous, Blocked };

std::string_view to_string(VerbChoice choice);

struct FormSpec {
  VerbChoice verb = VerbChoice::Ambiguous;
  bool negated = false;
  bool extended = false;

  friend bool operator==(const FormSpec&, const FormSpec&) = default;
};

// "garden", "unambiguous", "blocked", with "+ext" / "+neg" suffixes.
std::string form_label(const FormSpec& form);

struct RenderedSentence {
  std::string family_id;
  FormSpec form;
  std::string text;
  std::vector<ByteRange> inserted_spans;  // negation material, sorted
  ByteRange trigger_span;
  ByteRange ambiguous_verb_span;  // span of whichever verb the form uses
};

// Parses the tab-separated corpus format. Row numbers in error messages are
// 1-based physical line numbers (the header is line 1).
std::vector<SentenceFamily> parse_corpus(std::istream& in);
std::vector<SentenceFamily> load_corpus(const std::filesystem::path& path);

// Serializes families back to the TSV format (header included).
std::string write_corpus(const std::vector<SentenceFamily>& families);

// Cross product of valid verb choices x {plain, negated} x {plain, extended}.
// Ordered verb-major, then extended, then negated.
std::vector<FormSpec> enumerate_forms(const SentenceFamily& family);

bool is_valid_form(const SentenceFamily& family, const FormSpec& form);

RenderedSentence render(const SentenceFamily& family, const FormSpec& form);

// Returns `text` with the given (sorted, disjoint) ranges removed.
std::string excise(std::string_view text, const std::vector<ByteRange>& ranges);

}  // namespace gpath
