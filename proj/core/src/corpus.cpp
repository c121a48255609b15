#include "gpath/corpus.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "gpath/error.hpp"

namespace gpath {
namespace {

constexpr std::array<std::string_view, 11> kColumns = {
    "id",          "kind",           "preamble",        "ambiguous_verb",
    "unambiguous_verb", "blocked_object", "post_region", "extension",
    "negation_insert", "trigger",      "continuation"};

constexpr std::string_view kEmptyCell = "-";

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool is_allowed_mvrr_insert(std::string_view s) {
  return s == "that were" || s == "who were" || s == "that was" || s == "who was";
}

// Accumulates slots separated by single spaces, recording where each landed.
class SentenceBuilder {
 public:
  ByteRange append(std::string_view piece, bool attach_left = false) {
    if (!text_.empty() && !attach_left) text_ += ' ';
    const std::size_t begin = text_.size();
    text_ += piece;
    return {begin, text_.size()};
  }
  std::string take() { return std::move(text_); }

 private:
  std::string text_;
};

}  // namespace

std::string_view to_string(SentenceKind kind) {
  switch (kind) {
    case SentenceKind::NPZ: return "NPZ";
    case SentenceKind::NPS: return "NPS";
    case SentenceKind::MVRR: return "MVRR";
  }
  return "?";
}

std::optional<SentenceKind> parse_sentence_kind(std::string_view text) {
  if (text == "NPZ") return SentenceKind::NPZ;
  if (text == "NPS") return SentenceKind::NPS;
  if (text == "MVRR") return SentenceKind::MVRR;
  return std::nullopt;
}

std::string_view to_string(VerbChoice choice) {
  switch (choice) {
    case VerbChoice::Ambiguous: return "garden";
    case VerbChoice::Unambiguous: return "unambiguous";
    case VerbChoice::Blocked: return "blocked";
  }
  return "?";
}

std::string form_label(const FormSpec& form) {
  std::string label(to_string(form.verb));
  if (form.extended) label += "+ext";
  if (form.negated) label += "+neg";
  return label;
}

void validate(const SentenceFamily& f) {
  const auto require = [&](const std::string& value, std::string_view column) {
    if (value.empty()) throw CorpusError("empty required slot '" + std::string(column) + "'");
  };
  require(f.id, "id");
  require(f.preamble, "preamble");
  require(f.ambiguous_verb, "ambiguous_verb");
  require(f.unambiguous_verb, "unambiguous_verb");
  require(f.post_region, "post_region");
  require(f.negation_insert, "negation_insert");
  require(f.trigger, "trigger");
  require(f.continuation, "continuation");
  if (f.blocked_object && f.blocked_object->empty())
    throw CorpusError("blocked_object present but empty");
  if (f.extension && f.extension->empty()) throw CorpusError("extension present but empty");

  if (f.blocked_object && f.kind != SentenceKind::NPZ)
    throw CorpusError("blocked_object is only allowed for NPZ families (kind is " +
                      std::string(to_string(f.kind)) + ")");

  switch (f.kind) {
    case SentenceKind::NPZ:
      if (f.negation_insert != ",")
        throw CorpusError("NPZ negation_insert must be \",\", got \"" + f.negation_insert + "\"");
      break;
    case SentenceKind::NPS:
      if (f.negation_insert != "that")
        throw CorpusError("NPS negation_insert must be \"that\", got \"" + f.negation_insert + "\"");
      break;
    case SentenceKind::MVRR:
      if (!is_allowed_mvrr_insert(f.negation_insert))
        throw CorpusError("MVRR negation_insert must be \"that were\", \"who were\", \"that was\" or "
                          "\"who was\", got \"" + f.negation_insert + "\"");
      break;
  }
}

std::vector<SentenceFamily> parse_corpus(std::istream& in) {
  std::vector<SentenceFamily> families;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_tabs(line);
    const auto fail = [&](const std::string& what) -> CorpusError {
      return CorpusError("corpus row " + std::to_string(line_no) + ": " + what);
    };

    if (!have_header) {
      if (cells.size() != kColumns.size()) throw fail("header must have 11 tab-separated columns");
      for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (trim(cells[i]) != kColumns[i])
          throw fail("header column " + std::to_string(i + 1) + " must be '" +
                     std::string(kColumns[i]) + "'");
      }
      have_header = true;
      continue;
    }

    if (cells.size() != kColumns.size())
      throw fail("expected 11 columns, found " + std::to_string(cells.size()));

    const auto cell = [&](std::size_t i) { return std::string(trim(cells[i])); };
    const auto required = [&](std::size_t i) {
      auto value = cell(i);
      if (value.empty() || value == kEmptyCell)
        throw fail("empty required slot '" + std::string(kColumns[i]) + "'");
      return value;
    };
    const auto optional = [&](std::size_t i) -> std::optional<std::string> {
      auto value = cell(i);
      if (value.empty() || value == kEmptyCell) return std::nullopt;
      return value;
    };

    SentenceFamily f;
    f.id = required(0);
    const auto kind = parse_sentence_kind(cell(1));
    if (!kind) throw fail("invalid kind '" + cell(1) + "' (expected NPZ, NPS or MVRR)");
    f.kind = *kind;
    f.preamble = required(2);
    f.ambiguous_verb = required(3);
    f.unambiguous_verb = required(4);
    f.blocked_object = optional(5);
    f.post_region = required(6);
    f.extension = optional(7);
    f.negation_insert = required(8);
    f.trigger = required(9);
    f.continuation = required(10);

    try {
      validate(f);
    } catch (const CorpusError& e) {
      throw fail(e.what());
    }
    if (!seen.insert(f.id).second) throw fail("duplicate id '" + f.id + "'");
    families.push_back(std::move(f));
  }
  if (!have_header) throw CorpusError("corpus is missing its header row");
  return families;
}

std::vector<SentenceFamily> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  try {
    return parse_corpus(in);
  } catch (const CorpusError& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
}

std::string write_corpus(const std::vector<SentenceFamily>& families) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "\t" : "") << kColumns[i];
  out << '\n';
  const auto opt = [](const std::optional<std::string>& v) {
    return v ? *v : std::string(kEmptyCell);
  };
  for (const auto& f : families) {
    out << f.id << '\t' << to_string(f.kind) << '\t' << f.preamble << '\t' << f.ambiguous_verb
        << '\t' << f.unambiguous_verb << '\t' << opt(f.blocked_object) << '\t' << f.post_region
        << '\t' << opt(f.extension) << '\t' << f.negation_insert << '\t' << f.trigger << '\t'
        << f.continuation << '\n';
  }
  return out.str();
}

std::vector<FormSpec> enumerate_forms(const SentenceFamily& family) {
  std::vector<VerbChoice> verbs = {VerbChoice::Ambiguous, VerbChoice::Unambiguous};
  if (family.kind == SentenceKind::NPZ && family.blocked_object) verbs.push_back(VerbChoice::Blocked);
  std::vector<bool> extended = {false};
  if (family.extension) extended.push_back(true);

  std::vector<FormSpec> forms;
  for (const auto verb : verbs)
    for (const bool ext : extended)
      for (const bool neg : {false, true}) forms.push_back({verb, neg, ext});
  return forms;
}

bool is_valid_form(const SentenceFamily& family, const FormSpec& form) {
  if (form.verb == VerbChoice::Blocked &&
      (family.kind != SentenceKind::NPZ || !family.blocked_object))
    return false;
  if (form.extended && !family.extension) return false;
  return true;
}

RenderedSentence render(const SentenceFamily& family, const FormSpec& form) {
  if (form.verb == VerbChoice::Blocked && !family.blocked_object)
    throw CorpusError("family '" + family.id + "' has no blocked_object; blocked form unavailable");
  if (!is_valid_form(family, form))
    throw CorpusError("form " + form_label(form) + " is not valid for family '" + family.id + "'");

  RenderedSentence out;
  out.family_id = family.id;
  out.form = form;

  const std::string& verb =
      form.verb == VerbChoice::Unambiguous ? family.unambiguous_verb : family.ambiguous_verb;

  SentenceBuilder b;
  b.append(family.preamble);

  // Inserted material covers the insert plus the space that separates it from
  // the next slot, so excising it leaves single spacing intact.
  const auto insert_before_next = [&] {
    const auto r = b.append(family.negation_insert);
    out.inserted_spans.push_back({r.begin, r.end + 1});
  };

  switch (family.kind) {
    case SentenceKind::NPZ:
      out.ambiguous_verb_span = b.append(verb);
      if (form.verb == VerbChoice::Blocked) b.append(*family.blocked_object);
      if (form.negated) out.inserted_spans.push_back(b.append(family.negation_insert, true));
      break;
    case SentenceKind::NPS:
      out.ambiguous_verb_span = b.append(verb);
      if (form.negated) insert_before_next();
      break;
    case SentenceKind::MVRR:
      if (form.negated) insert_before_next();
      out.ambiguous_verb_span = b.append(verb);
      break;
  }
  b.append(family.post_region);
  if (form.extended) b.append(*family.extension);
  out.trigger_span = b.append(family.trigger);
  b.append(family.continuation);
  out.text = b.take();
  return out;
}

std::string excise(std::string_view text, const std::vector<ByteRange>& ranges) {
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto& r : ranges) {
    if (r.begin < cursor || r.end > text.size()) throw Error("excise: ranges unsorted or out of bounds");
    out.append(text.substr(cursor, r.begin - cursor));
    cursor = r.end;
  }
  out.append(text.substr(cursor));
  return out;
}

}  // namespace gpath
