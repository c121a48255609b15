#include "gpath/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gpath/error.hpp"

namespace gpath {
namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) return base / p;
  return p;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError("invalid number for '" + key + "': " + value);
  return out;
}

}  // namespace

std::string_view to_string(ScalarMode mode) {
  switch (mode) {
    case ScalarMode::MeanAll: return "mean_all";
    case ScalarMode::PreTrigger: return "pre_trigger";
    case ScalarMode::AtTrigger: return "at_trigger";
  }
  return "?";
}

std::optional<ScalarMode> parse_scalar_mode(std::string_view text) {
  if (text == "mean_all") return ScalarMode::MeanAll;
  if (text == "pre_trigger") return ScalarMode::PreTrigger;
  if (text == "at_trigger") return ScalarMode::AtTrigger;
  return std::nullopt;
}

void RunConfig::set(const std::string& key, const std::string& value, const std::filesystem::path& base) {
  if (key == "corpus") {
    corpus = resolve(value, base);
  } else if (key == "weights") {
    weights = resolve(value, base);
  } else if (key == "model_config") {
    model_config = resolve(value, base);
  } else if (key == "dump_dir") {
    dump_dir = resolve(value, base);
  } else if (key == "vocab") {
    vocab = resolve(value, base);
  } else if (key == "merges") {
    merges = resolve(value, base);
  } else if (key == "out_dir") {
    out_dir = resolve(value, base);
  } else if (key == "layer") {
    if (value.empty()) throw ConfigError("layer must not be empty");
    layer = value;
  } else if (key == "log_base") {
    const auto b = parse_log_base(value);
    if (!b) throw ConfigError("log_base must be 'nats' or 'bits', got '" + value + "'");
    log_base = *b;
  } else if (key == "mode") {
    const auto m = parse_scalar_mode(value);
    if (!m) throw ConfigError("mode must be mean_all, pre_trigger or at_trigger, got '" + value + "'");
    mode = *m;
  } else if (key == "threads") {
    threads = parse_number<int>(key, value);
    if (threads < 1) throw ConfigError("threads must be >= 1");
  } else if (key == "top_k") {
    top_k = parse_number<std::size_t>(key, value);
  } else if (key == "plots") {
    if (value == "true" || value == "1" || value == "yes") plots = true;
    else if (value == "false" || value == "0" || value == "no") plots = false;
    else throw ConfigError("plots must be true or false");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    try {
      cfg.set(trim(std::string_view(stripped).substr(0, eq)), trim(std::string_view(stripped).substr(eq + 1)), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::map<std::string, std::string> RunConfig::header() const {
  return {{"layer", layer},
          {"log_base", std::string(to_string(log_base))},
          {"mode", std::string(to_string(mode))},
          {"centering", "per-run mean over every token of every rendered form at the analyzed layer"},
          {"surprisal_diff_sign", "non-negated minus negated"}};
}

}  // namespace gpath
