#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gpath/model.hpp"

namespace gpath {

// Trace dumps use the tensor-archive framing. Tensors:
//   hidden.<layer>  F32 [positions, d_model]   one per captured boundary
//   logits          F32 [positions, vocab]     optional
// __metadata__:
//   format = gpath-trace/1, plus JSON text in ids = [..], layers = [..] and
//   config = {..} (optional)
void write_trace_dump(const ForwardTrace& trace, const std::filesystem::path& path,
                      const std::optional<ModelConfig>& config = std::nullopt);

// Throws ModelError on schema or shape mismatch (including a mismatch with
// the config embedded in the dump, or with `expected` when given).
ForwardTrace load_trace_dump(const std::filesystem::path& path,
                             const std::optional<ModelConfig>& expected = std::nullopt);

// A directory of dumps with an index.json of the form
//   {"entries": [{"text": "<sentence>", "file": "<relative path>"}, ...]}
class TraceDumpDirectory {
 public:
  explicit TraceDumpDirectory(std::filesystem::path dir);

  [[nodiscard]] bool contains(const std::string& text) const { return files_.contains(text); }
  [[nodiscard]] ForwardTrace load(const std::string& text) const;
  [[nodiscard]] std::size_t size() const { return files_.size(); }

  static void write_index(const std::filesystem::path& dir, const std::map<std::string, std::string>& text_to_file);

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

}  // namespace gpath
