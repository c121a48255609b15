#include "gpath/trace_dump.hpp"

#include <fstream>
#include <sstream>

#include "gpath/error.hpp"
#include "json.hpp"

namespace gpath {

namespace {
constexpr const char* kFormat = "gpath-trace/1";
}

void write_trace_dump(const ForwardTrace& trace, const std::filesystem::path& path,
                      const std::optional<ModelConfig>& config) {
  TensorArchiveWriter w;
  const auto n = static_cast<std::int64_t>(trace.positions());
  w.set_metadata("format", kFormat);
  w.set_metadata("ids", nlohmann::json(trace.ids).dump());
  w.set_metadata("layers", nlohmann::json(trace.layers).dump());
  if (config) w.set_metadata("config", config->to_json());
  for (std::size_t l = 0; l < trace.layers.size(); ++l)
    w.add("hidden." + trace.layers[l], {n, static_cast<std::int64_t>(trace.d_model)}, trace.hidden[l]);
  if (trace.logits) w.add("logits", {n, static_cast<std::int64_t>(trace.vocab_size)}, *trace.logits);
  w.write(path);
}

ForwardTrace load_trace_dump(const std::filesystem::path& path, const std::optional<ModelConfig>& expected) {
  const auto archive = TensorArchive::read(path);
  const auto fail = [&](const std::string& what) { return ModelError(path.string() + ": " + what); };
  const auto& meta = archive.metadata();
  const auto get_meta = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw fail(std::string("trace dump metadata lacks '") + key + "'");
    return it->second;
  };
  if (const auto it = meta.find("format"); it != meta.end() && it->second != kFormat)
    throw fail("unsupported trace dump format '" + it->second + "'");

  ForwardTrace trace;
  try {
    trace.ids = nlohmann::json::parse(get_meta("ids")).get<std::vector<TokenId>>();
    trace.layers = nlohmann::json::parse(get_meta("layers")).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed trace metadata: ") + e.what());
  }
  if (trace.ids.empty()) throw fail("trace dump has no token ids");
  if (trace.layers.empty()) throw fail("trace dump lists no layers");

  std::optional<ModelConfig> declared;
  if (meta.contains("config")) declared = ModelConfig::from_json(meta.at("config"));
  if (expected && declared && !(*expected == *declared)) throw fail("dump config differs from the expected model config");
  if (!declared) declared = expected;

  const auto n = static_cast<std::int64_t>(trace.ids.size());
  for (const auto& layer : trace.layers) {
    const std::string name = "hidden." + layer;
    if (!archive.contains(name)) throw fail("missing tensor " + name);
    const auto& info = archive.info(name);
    if (info.shape.size() != 2 || info.shape[0] != n)
      throw fail("tensor " + name + " must have shape [" + std::to_string(n) + ", d_model]");
    if (trace.d_model == 0) trace.d_model = static_cast<std::size_t>(info.shape[1]);
    if (static_cast<std::size_t>(info.shape[1]) != trace.d_model)
      throw fail("tensor " + name + " has inconsistent hidden size");
    trace.hidden.push_back(archive.to_f32(name));
  }
  if (declared) {
    if (trace.d_model != static_cast<std::size_t>(declared->d_model))
      throw fail("hidden size " + std::to_string(trace.d_model) + " does not match config n_embd " +
                 std::to_string(declared->d_model));
    if (trace.layers.size() != static_cast<std::size_t>(declared->n_layer) + 2)
      throw fail("layer count does not match config n_layer");
    if (n > declared->n_ctx) throw fail("more positions than the config's context length");
  }

  if (archive.contains("logits")) {
    const auto& info = archive.info("logits");
    if (info.shape.size() != 2 || info.shape[0] != n)
      throw fail("tensor logits must have shape [" + std::to_string(n) + ", vocab]");
    trace.vocab_size = static_cast<std::size_t>(info.shape[1]);
    if (declared && trace.vocab_size != static_cast<std::size_t>(declared->vocab_size))
      throw fail("logits width does not match config vocab_size");
    trace.logits = archive.to_f32("logits");
  } else if (declared) {
    trace.vocab_size = static_cast<std::size_t>(declared->vocab_size);
  }
  for (const auto id : trace.ids)
    if (id < 0 || (trace.vocab_size && static_cast<std::size_t>(id) >= trace.vocab_size))
      throw fail("token id " + std::to_string(id) + " out of range");
  return trace;
}

TraceDumpDirectory::TraceDumpDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {
  const auto index_path = dir_ / "index.json";
  std::ifstream in(index_path);
  if (!in) throw IoError("cannot open trace index " + index_path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& e : j.at("entries")) files_[e.at("text").get<std::string>()] = e.at("file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(index_path.string() + ": " + e.what());
  }
}

ForwardTrace TraceDumpDirectory::load(const std::string& text) const {
  const auto it = files_.find(text);
  if (it == files_.end()) throw ModelError("no trace dump for sentence \"" + text + "\"");
  return load_trace_dump(dir_ / it->second);
}

void TraceDumpDirectory::write_index(const std::filesystem::path& dir,
                                     const std::map<std::string, std::string>& text_to_file) {
  nlohmann::ordered_json j;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& [text, file] : text_to_file) j["entries"].push_back({{"text", text}, {"file", file}});
  std::ofstream out(dir / "index.json");
  if (!out) throw IoError("cannot write " + (dir / "index.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace gpath
