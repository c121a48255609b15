#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gpath/model.hpp"

namespace gpath {

enum class ScalarMode { MeanAll, PreTrigger, AtTrigger };

std::string_view to_string(ScalarMode mode);
std::optional<ScalarMode> parse_scalar_mode(std::string_view text);

// Settings for one analysis run. Loaded from a `key = value` text file;
// '#' starts a comment. Relative paths resolve against the file's directory.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path weights;       // tensor archive; empty when using dumps
  std::filesystem::path model_config;  // optional JSON; otherwise inferred
  std::filesystem::path dump_dir;      // trace dumps with index.json
  std::filesystem::path vocab;
  std::filesystem::path merges;
  std::string layer = "last";  // "last", "embed", "ln_f", "block.<i>" or "<i>"
  LogBase log_base = LogBase::Nats;
  ScalarMode mode = ScalarMode::AtTrigger;
  std::filesystem::path out_dir = "gpath-out";
  int threads = 1;
  std::size_t top_k = 3;
  bool plots = true;

  // Unknown keys and malformed values raise ConfigError naming the line.
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  // Applies one key/value (also used for command-line overrides).
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base_dir = {});

  // Report header: the choices that change numbers.
  [[nodiscard]] std::map<std::string, std::string> header() const;
};

}  // namespace gpath
