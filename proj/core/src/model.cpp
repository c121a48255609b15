#include "gpath/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gpath/error.hpp"
#include "json.hpp"
#include "parallel.hpp"

namespace gpath {
namespace {

// Dot product with float inputs and double accumulation. Eight independent
// lanes summed in a fixed order keep the result deterministic while letting
// the compiler vectorize.
double dot(const float* a, const float* b, std::size_t n) {
  double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t k = 0; k < 8; ++k)
      lane[k] += static_cast<double>(a[i + k]) * static_cast<double>(b[i + k]);
  double tail = 0;
  for (; i < n; ++i) tail += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7])) + tail;
}

// out[p][o] = bias[o] + x[p] . weight[o]; weight is [out][in].
void linear(const std::vector<float>& x, std::size_t rows, std::size_t in_dim,
            const std::vector<float>& weight, const std::vector<float>& bias, std::size_t out_dim,
            std::vector<float>& out, int threads) {
  out.assign(rows * out_dim, 0.0f);
  detail::parallel_for(out_dim, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = 0; p < rows; ++p) {
      const float* xp = x.data() + p * in_dim;
      for (std::size_t o = begin; o < end; ++o)
        out[p * out_dim + o] =
            static_cast<float>(static_cast<double>(bias[o]) + dot(xp, weight.data() + o * in_dim, in_dim));
    }
  });
}

void layer_norm(const std::vector<float>& x, std::size_t rows, std::size_t d, const std::vector<float>& gain,
                const std::vector<float>& bias, float eps, std::vector<float>& out) {
  out.resize(rows * d);
  for (std::size_t p = 0; p < rows; ++p) {
    const float* row = x.data() + p * d;
    double mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<double>(d);
    double var = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = row[i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    for (std::size_t i = 0; i < d; ++i)
      out[p * d + i] = static_cast<float>((row[i] - mean) * inv * gain[i] + bias[i]);
  }
}

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
float gelu(float x) {
  constexpr double kSqrt2OverPi = 0.79788456080286535588;
  const double v = x;
  return static_cast<float>(0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + 0.044715 * v * v * v))));
}

// Conv1D weights are stored [in][out]; the kernels want [out][in].
std::vector<float> transpose(const std::vector<float>& w, std::size_t in_dim, std::size_t out_dim) {
  std::vector<float> t(w.size());
  for (std::size_t i = 0; i < in_dim; ++i)
    for (std::size_t o = 0; o < out_dim; ++o) t[o * in_dim + i] = w[i * out_dim + o];
  return t;
}

class TensorLoader {
 public:
  explicit TensorLoader(const TensorArchive& archive) : archive_(archive) {
    for (const auto& [name, info] : archive.tensors())
      if (name.starts_with("transformer.")) prefix_ = "transformer.";
  }

  std::vector<float> get(const std::string& name, std::vector<std::int64_t> shape) const {
    const std::string full = prefix_ + name;
    if (!archive_.contains(full)) throw ModelError("missing tensor " + name);
    const auto& info = archive_.info(full);
    if (info.shape != shape) {
      std::string want, got;
      for (auto d : shape) want += (want.empty() ? "" : ",") + std::to_string(d);
      for (auto d : info.shape) got += (got.empty() ? "" : ",") + std::to_string(d);
      throw ModelError("tensor " + name + " has shape [" + got + "], expected [" + want + "]");
    }
    return archive_.to_f32(full);
  }

  const TensorInfo* find(const std::string& name) const {
    const std::string full = prefix_ + name;
    return archive_.contains(full) ? &archive_.info(full) : nullptr;
  }

 private:
  const TensorArchive& archive_;
  std::string prefix_;
};

}  // namespace

void ModelConfig::validate() const {
  if (n_layer <= 0 || n_head <= 0 || d_model <= 0 || vocab_size <= 0 || n_ctx <= 0)
    throw ModelError("model config counts must be positive");
  if (d_model % n_head != 0)
    throw ModelError("d_model (" + std::to_string(d_model) + ") must be divisible by n_head (" +
                     std::to_string(n_head) + ")");
  if (!(layernorm_epsilon > 0.0f)) throw ModelError("layernorm_epsilon must be positive");
}

ModelConfig ModelConfig::from_json(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model config: ") + e.what());
  }
  const auto pick = [&](std::initializer_list<const char*> keys) -> std::optional<nlohmann::json> {
    for (const char* k : keys)
      if (j.contains(k)) return j[k];
    return std::nullopt;
  };
  ModelConfig c;
  const auto need_int = [&](std::initializer_list<const char*> keys, int& field) {
    const auto v = pick(keys);
    if (!v) throw ModelError(std::string("model config: missing ") + *keys.begin());
    field = v->get<int>();
  };
  need_int({"n_layer"}, c.n_layer);
  need_int({"n_head"}, c.n_head);
  need_int({"n_embd", "d_model"}, c.d_model);
  need_int({"vocab_size"}, c.vocab_size);
  need_int({"n_positions", "n_ctx"}, c.n_ctx);
  if (const auto eps = pick({"layer_norm_epsilon", "layernorm_epsilon"})) c.layernorm_epsilon = eps->get<float>();
  c.validate();
  return c;
}

ModelConfig ModelConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(ss.str());
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["n_layer"] = n_layer;
  j["n_head"] = n_head;
  j["n_embd"] = d_model;
  j["vocab_size"] = vocab_size;
  j["n_positions"] = n_ctx;
  j["layer_norm_epsilon"] = layernorm_epsilon;
  return j.dump();
}

ModelConfig infer_config(const TensorArchive& archive) {
  const auto& meta = archive.metadata();
  if (const auto it = meta.find("config"); it != meta.end()) return ModelConfig::from_json(it->second);

  TensorLoader loader(archive);
  ModelConfig c;
  const auto* wte = loader.find("wte.weight");
  const auto* wpe = loader.find("wpe.weight");
  if (!wte || wte->shape.size() != 2) throw ModelError("missing tensor wte.weight");
  if (!wpe || wpe->shape.size() != 2) throw ModelError("missing tensor wpe.weight");
  c.vocab_size = static_cast<int>(wte->shape[0]);
  c.d_model = static_cast<int>(wte->shape[1]);
  c.n_ctx = static_cast<int>(wpe->shape[0]);
  c.n_layer = 0;
  while (loader.find("h." + std::to_string(c.n_layer) + ".ln_1.weight")) ++c.n_layer;
  c.n_head = std::max(1, c.d_model / 64);
  const auto meta_int = [&](const char* key, int& field) {
    if (const auto m = meta.find(key); m != meta.end()) field = std::stoi(m->second);
  };
  meta_int("n_head", c.n_head);
  meta_int("n_layer", c.n_layer);
  if (const auto m = meta.find("layer_norm_epsilon"); m != meta.end()) c.layernorm_epsilon = std::stof(m->second);
  c.validate();
  return c;
}

std::vector<std::string> layer_names(const ModelConfig& config) {
  std::vector<std::string> names{"embed"};
  for (int i = 0; i < config.n_layer; ++i) names.push_back("block." + std::to_string(i));
  names.emplace_back("ln_f");
  return names;
}

std::size_t ForwardTrace::layer_index(std::string_view name) const {
  const auto it = std::find(layers.begin(), layers.end(), name);
  if (it == layers.end()) throw ModelError("trace has no layer '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - layers.begin());
}

std::span<const float> ForwardTrace::hidden_state(std::size_t layer, std::size_t position) const {
  return std::span<const float>(hidden.at(layer)).subspan(position * d_model, d_model);
}

std::span<const float> ForwardTrace::logits_at(std::size_t position) const {
  if (!logits) throw ModelError("trace carries no logits");
  return std::span<const float>(*logits).subspan(position * vocab_size, vocab_size);
}

Model Model::load(const std::filesystem::path& archive_path) {
  const auto archive = TensorArchive::read(archive_path);
  return load(archive, infer_config(archive));
}

Model Model::load(const TensorArchive& archive, const ModelConfig& config) {
  config.validate();
  Model m;
  m.config_ = config;
  const std::int64_t d = config.d_model;
  const TensorLoader t(archive);

  m.token_embedding_ = t.get("wte.weight", {config.vocab_size, d});
  m.position_embedding_ = t.get("wpe.weight", {config.n_ctx, d});
  for (int i = 0; i < config.n_layer; ++i) {
    const std::string p = "h." + std::to_string(i) + ".";
    Block b;
    b.ln1_gain = t.get(p + "ln_1.weight", {d});
    b.ln1_bias = t.get(p + "ln_1.bias", {d});
    b.qkv_weight = transpose(t.get(p + "attn.c_attn.weight", {d, 3 * d}), d, 3 * d);
    b.qkv_bias = t.get(p + "attn.c_attn.bias", {3 * d});
    b.proj_weight = transpose(t.get(p + "attn.c_proj.weight", {d, d}), d, d);
    b.proj_bias = t.get(p + "attn.c_proj.bias", {d});
    b.ln2_gain = t.get(p + "ln_2.weight", {d});
    b.ln2_bias = t.get(p + "ln_2.bias", {d});
    b.fc_weight = transpose(t.get(p + "mlp.c_fc.weight", {d, 4 * d}), d, 4 * d);
    b.fc_bias = t.get(p + "mlp.c_fc.bias", {4 * d});
    b.fc_proj_weight = transpose(t.get(p + "mlp.c_proj.weight", {4 * d, d}), 4 * d, d);
    b.fc_proj_bias = t.get(p + "mlp.c_proj.bias", {d});
    m.blocks_.push_back(std::move(b));
  }
  m.final_gain_ = t.get("ln_f.weight", {d});
  m.final_bias_ = t.get("ln_f.bias", {d});
  return m;
}

ForwardTrace Model::forward(std::span<const TokenId> ids, const ForwardOptions& options) const {
  const auto n = ids.size();
  if (n == 0) throw ModelError("forward: empty input");
  if (n > static_cast<std::size_t>(config_.n_ctx))
    throw ModelError("forward: " + std::to_string(n) + " tokens exceed context length " +
                     std::to_string(config_.n_ctx));
  const auto d = static_cast<std::size_t>(config_.d_model);
  const auto heads = static_cast<std::size_t>(config_.n_head);
  const auto head_dim = d / heads;
  const auto vocab = static_cast<std::size_t>(config_.vocab_size);
  const int threads = options.threads;

  ForwardTrace trace;
  trace.ids.assign(ids.begin(), ids.end());
  trace.layers = layer_names(config_);
  trace.d_model = d;
  trace.vocab_size = vocab;

  std::vector<float> h(n * d);
  for (std::size_t p = 0; p < n; ++p) {
    const auto id = ids[p];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw ModelError("forward: token id " + std::to_string(id) + " out of range");
    for (std::size_t i = 0; i < d; ++i)
      h[p * d + i] = token_embedding_[id * d + i] + position_embedding_[p * d + i];
  }
  trace.hidden.push_back(h);

  std::vector<float> normed, qkv, attn(n * d), projected, fc, fc_out;
  std::vector<double> weights(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  for (const auto& b : blocks_) {
    layer_norm(h, n, d, b.ln1_gain, b.ln1_bias, config_.layernorm_epsilon, normed);
    linear(normed, n, d, b.qkv_weight, b.qkv_bias, 3 * d, qkv, threads);

    // Causal self-attention: position i attends to 0..i.
    for (std::size_t hd = 0; hd < heads; ++hd) {
      for (std::size_t i = 0; i < n; ++i) {
        const float* q = qkv.data() + i * 3 * d + hd * head_dim;
        double max_score = -INFINITY;
        for (std::size_t j = 0; j <= i; ++j) {
          const float* k = qkv.data() + j * 3 * d + d + hd * head_dim;
          weights[j] = dot(q, k, head_dim) * scale;
          max_score = std::max(max_score, weights[j]);
        }
        double total = 0;
        for (std::size_t j = 0; j <= i; ++j) {
          weights[j] = std::exp(weights[j] - max_score);
          total += weights[j];
        }
        for (std::size_t c = 0; c < head_dim; ++c) {
          double acc = 0;
          for (std::size_t j = 0; j <= i; ++j)
            acc += weights[j] * static_cast<double>(qkv[j * 3 * d + 2 * d + hd * head_dim + c]);
          attn[i * d + hd * head_dim + c] = static_cast<float>(acc / total);
        }
      }
    }
    linear(attn, n, d, b.proj_weight, b.proj_bias, d, projected, threads);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += projected[i];

    layer_norm(h, n, d, b.ln2_gain, b.ln2_bias, config_.layernorm_epsilon, normed);
    linear(normed, n, d, b.fc_weight, b.fc_bias, 4 * d, fc, threads);
    for (auto& v : fc) v = gelu(v);
    linear(fc, n, 4 * d, b.fc_proj_weight, b.fc_proj_bias, d, fc_out, threads);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += fc_out[i];
    trace.hidden.push_back(h);
  }

  layer_norm(h, n, d, final_gain_, final_bias_, config_.layernorm_epsilon, normed);
  trace.hidden.push_back(normed);

  if (options.compute_logits) {
    std::vector<float> logits(n * vocab);
    detail::parallel_for(vocab, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t v = begin; v < end; ++v)
          logits[p * vocab + v] = static_cast<float>(dot(normed.data() + p * d, token_embedding_.data() + v * d, d));
    });
    trace.logits = std::move(logits);
  }
  return trace;
}

TensorArchiveWriter synthetic_archive(const ModelConfig& config, std::uint64_t seed, float scale) {
  config.validate();
  std::mt19937_64 rng(seed);
  // Explicit conversion keeps the stream identical across standard libraries.
  const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  const double amplitude = static_cast<double>(scale) * std::sqrt(3.0);
  const auto random = [&](std::size_t n, double amp, double offset) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(offset + amp * uniform());
    return v;
  };
  const std::int64_t d = config.d_model;
  const auto sz = [](std::int64_t n) { return static_cast<std::size_t>(n); };

  TensorArchiveWriter w;
  w.set_metadata("config", config.to_json());
  w.add("wte.weight", {config.vocab_size, d}, random(sz(config.vocab_size * d), amplitude, 0));
  w.add("wpe.weight", {config.n_ctx, d}, random(sz(config.n_ctx * d), amplitude, 0));
  for (int i = 0; i < config.n_layer; ++i) {
    const std::string p = "h." + std::to_string(i) + ".";
    w.add(p + "ln_1.weight", {d}, random(sz(d), 0.1, 1.0));
    w.add(p + "ln_1.bias", {d}, random(sz(d), 0.1, 0.0));
    w.add(p + "attn.c_attn.weight", {d, 3 * d}, random(sz(d * 3 * d), amplitude, 0));
    w.add(p + "attn.c_attn.bias", {3 * d}, random(sz(3 * d), amplitude, 0));
    w.add(p + "attn.c_proj.weight", {d, d}, random(sz(d * d), amplitude, 0));
    w.add(p + "attn.c_proj.bias", {d}, random(sz(d), amplitude, 0));
    w.add(p + "ln_2.weight", {d}, random(sz(d), 0.1, 1.0));
    w.add(p + "ln_2.bias", {d}, random(sz(d), 0.1, 0.0));
    w.add(p + "mlp.c_fc.weight", {d, 4 * d}, random(sz(d * 4 * d), amplitude, 0));
    w.add(p + "mlp.c_fc.bias", {4 * d}, random(sz(4 * d), amplitude, 0));
    w.add(p + "mlp.c_proj.weight", {4 * d, d}, random(sz(4 * d * d), amplitude, 0));
    w.add(p + "mlp.c_proj.bias", {d}, random(sz(d), amplitude, 0));
  }
  w.add("ln_f.weight", {d}, random(sz(d), 0.1, 1.0));
  w.add("ln_f.bias", {d}, random(sz(d), 0.1, 0.0));
  return w;
}

std::string_view to_string(LogBase base) { return base == LogBase::Bits ? "bits" : "nats"; }

std::optional<LogBase> parse_log_base(std::string_view text) {
  if (text == "nats" || text == "e") return LogBase::Nats;
  if (text == "bits" || text == "2") return LogBase::Bits;
  return std::nullopt;
}

std::vector<std::optional<double>> surprisal_series(const ForwardTrace& trace, LogBase base) {
  if (trace.positions() < 2) throw ModelError("surprisal needs at least two positions");
  if (!trace.logits) throw ModelError("trace carries no logits; surprisal unavailable");
  const double unit = base == LogBase::Bits ? std::log(2.0) : 1.0;

  std::vector<std::optional<double>> out(trace.positions());
  for (std::size_t i = 1; i < trace.positions(); ++i) {
    const auto row = trace.logits_at(i - 1);
    const auto target = static_cast<std::size_t>(trace.ids[i]);
    if (target >= row.size()) throw ModelError("surprisal: token id out of logit range");
    double max_logit = -INFINITY;
    for (const float v : row) max_logit = std::max(max_logit, static_cast<double>(v));
    double sum = 0;
    for (const float v : row) sum += std::exp(static_cast<double>(v) - max_logit);
    const double log_prob = static_cast<double>(row[target]) - max_logit - std::log(sum);
    out[i] = -log_prob / unit;
  }
  return out;
}

}  // namespace gpath
