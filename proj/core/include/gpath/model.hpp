#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpath/tensor_archive.hpp"
#include "gpath/tokenizer.hpp"

namespace gpath {

struct ModelConfig {
  int n_layer = 12;
  int n_head = 12;
  int d_model = 768;
  int vocab_size = 50257;
  int n_ctx = 1024;
  float layernorm_epsilon = 1e-5f;

  // Throws ModelError when counts are non-positive or d_model % n_head != 0.
  void validate() const;

  // Accepts GPT-2 style keys (n_layer, n_head, n_embd, vocab_size,
  // n_positions/n_ctx, layer_norm_epsilon) as well as d_model/n_ctx.
  static ModelConfig from_json(std::string_view json);
  static ModelConfig from_file(const std::filesystem::path& path);
  [[nodiscard]] std::string to_json() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Reads the config from archive metadata ("config" key holding JSON, or the
// individual keys) and fills any gaps from tensor shapes. n_head falls back to
// d_model / 64 when nothing records it.
ModelConfig infer_config(const TensorArchive& archive);

// Hidden-state boundaries captured by forward(): "embed", "block.0" ..
// "block.<n_layer-1>", "ln_f".
std::vector<std::string> layer_names(const ModelConfig& config);

struct ForwardTrace {
  std::vector<TokenId> ids;
  std::vector<std::string> layers;
  std::size_t d_model = 0;
  std::size_t vocab_size = 0;
  std::vector<std::vector<float>> hidden;  // per layer, positions x d_model row-major
  std::optional<std::vector<float>> logits;  // positions x vocab_size

  [[nodiscard]] std::size_t positions() const { return ids.size(); }
  // Throws ModelError for unknown names.
  [[nodiscard]] std::size_t layer_index(std::string_view name) const;
  [[nodiscard]] std::span<const float> hidden_state(std::size_t layer, std::size_t position) const;
  [[nodiscard]] std::span<const float> logits_at(std::size_t position) const;

  friend bool operator==(const ForwardTrace&, const ForwardTrace&) = default;
};

struct ForwardOptions {
  bool compute_logits = true;
  // Worker threads for the matrix products; results are bit-identical for any value.
  int threads = 1;
};

// Pre-layernorm GPT-2 decoder with a tied LM head. Weights are held as
// float32; reductions accumulate in double.
class Model {
 public:
  static Model load(const TensorArchive& archive, const ModelConfig& config);
  static Model load(const std::filesystem::path& archive_path);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] ForwardTrace forward(std::span<const TokenId> ids, const ForwardOptions& options = {}) const;

 private:
  struct Block {
    std::vector<float> ln1_gain, ln1_bias;
    std::vector<float> qkv_weight, qkv_bias;    // [3d][d]
    std::vector<float> proj_weight, proj_bias;  // [d][d]
    std::vector<float> ln2_gain, ln2_bias;
    std::vector<float> fc_weight, fc_bias;          // [4d][d]
    std::vector<float> fc_proj_weight, fc_proj_bias;  // [d][4d]
  };

  ModelConfig config_;
  std::vector<float> token_embedding_;     // [vocab][d]
  std::vector<float> position_embedding_;  // [ctx][d]
  std::vector<Block> blocks_;
  std::vector<float> final_gain_, final_bias_;
};

// Randomly initialized weights in the GPT-2 tensor layout, with the config
// recorded in the archive metadata. Weights are uniform with standard
// deviation `scale`; layernorm gains are drawn around 1. Same seed, same bytes.
TensorArchiveWriter synthetic_archive(const ModelConfig& config, std::uint64_t seed, float scale = 0.1f);

enum class LogBase { Nats, Bits };

std::string_view to_string(LogBase base);
std::optional<LogBase> parse_log_base(std::string_view text);

// surprisal[i] = -log p(ids[i] | ids[<i]) for i >= 1; position 0 is absent.
// Throws ModelError when the trace has no logits or fewer than two positions.
std::vector<std::optional<double>> surprisal_series(const ForwardTrace& trace, LogBase base = LogBase::Nats);

}  // namespace gpath
