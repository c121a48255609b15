#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gpath {

enum class DType { F32, F16, BF16, F64 };

std::string_view to_string(DType dtype);
std::size_t dtype_size(DType dtype);

struct TensorInfo {
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;
  std::uint64_t begin = 0;  // offsets relative to the payload start
  std::uint64_t end = 0;

  [[nodiscard]] std::int64_t element_count() const;
};

// Named tensors in safetensors framing:
//   u64 little-endian header length | JSON header | raw little-endian payload.
// The header maps names to {dtype, shape, data_offsets}; an optional
// "__metadata__" object holds string -> string pairs.
class TensorArchive {
 public:
  static TensorArchive read(const std::filesystem::path& path);
  static TensorArchive parse(std::vector<std::uint8_t> bytes);

  [[nodiscard]] bool contains(const std::string& name) const { return tensors_.contains(name); }
  [[nodiscard]] const TensorInfo& info(const std::string& name) const;
  [[nodiscard]] const std::map<std::string, TensorInfo>& tensors() const { return tensors_; }
  [[nodiscard]] const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // Tensor contents converted to float32 (F16/BF16/F64 are widened/narrowed).
  [[nodiscard]] std::vector<float> to_f32(const std::string& name) const;
  [[nodiscard]] std::span<const std::uint8_t> raw(const std::string& name) const;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t payload_offset_ = 0;
  std::map<std::string, TensorInfo> tensors_;
  std::map<std::string, std::string> metadata_;
};

// Accumulates float32 tensors and serializes them in the same framing.
// Tensors are laid out in insertion order.
class TensorArchiveWriter {
 public:
  void add(const std::string& name, std::vector<std::int64_t> shape, std::span<const float> data);
  void set_metadata(const std::string& key, const std::string& value) { metadata_[key] = value; }

  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  void write(const std::filesystem::path& path) const;

 private:
  struct Entry {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> data;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::string> metadata_;
};

}  // namespace gpath
