#include "gpath/tensor_archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "gpath/error.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace gpath {
namespace {

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exponent = (h >> 10) & 0x1Fu;
  std::uint32_t mantissa = h & 0x3FFu;
  std::uint32_t bits = 0;
  if (exponent == 0) {
    if (mantissa == 0) {
      bits = sign;
    } else {
      // subnormal: renormalize
      exponent = 127 - 15 + 1;
      while (!(mantissa & 0x400u)) {
        mantissa <<= 1;
        --exponent;
      }
      mantissa &= 0x3FFu;
      bits = sign | (exponent << 23) | (mantissa << 13);
    }
  } else if (exponent == 0x1F) {
    bits = sign | 0x7F800000u | (mantissa << 13);
  } else {
    bits = sign | ((exponent + 127 - 15) << 23) | (mantissa << 13);
  }
  return std::bit_cast<float>(bits);
}

DType parse_dtype(const std::string& s, const std::string& tensor) {
  if (s == "F32") return DType::F32;
  if (s == "F16") return DType::F16;
  if (s == "BF16") return DType::BF16;
  if (s == "F64") return DType::F64;
  throw ModelError("tensor '" + tensor + "': unsupported dtype " + s);
}

}  // namespace

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::F32: return "F32";
    case DType::F16: return "F16";
    case DType::BF16: return "BF16";
    case DType::F64: return "F64";
  }
  return "?";
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F16:
    case DType::BF16: return 2;
    case DType::F32: return 4;
    case DType::F64: return 8;
  }
  return 0;
}

std::int64_t TensorInfo::element_count() const {
  std::int64_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

TensorArchive TensorArchive::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open tensor archive " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::uint8_t> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("short read on " + path.string());
  try {
    return parse(std::move(bytes));
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

TensorArchive TensorArchive::parse(std::vector<std::uint8_t> bytes) {
  TensorArchive a;
  if (bytes.size() < 8) throw ModelError("archive too small for its header length");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), 8);
  if (header_len > bytes.size() - 8) throw ModelError("header length exceeds file size");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed archive header: ") + e.what());
  }
  if (!header.is_object()) throw ModelError("archive header must be a JSON object");

  a.payload_offset_ = 8 + header_len;
  const std::uint64_t payload_size = bytes.size() - a.payload_offset_;

  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  for (const auto& [name, entry] : header.items()) {
    if (name == "__metadata__") {
      if (!entry.is_object()) throw ModelError("__metadata__ must be an object");
      for (const auto& [k, v] : entry.items()) {
        if (!v.is_string()) throw ModelError("__metadata__ value for '" + k + "' must be a string");
        a.metadata_[k] = v.get<std::string>();
      }
      continue;
    }
    try {
      TensorInfo info;
      info.dtype = parse_dtype(entry.at("dtype").get<std::string>(), name);
      info.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2) throw ModelError("tensor '" + name + "': data_offsets needs 2 entries");
      info.begin = offsets[0];
      info.end = offsets[1];
      for (const auto d : info.shape)
        if (d < 0) throw ModelError("tensor '" + name + "': negative dimension");
      if (info.begin > info.end || info.end > payload_size)
        throw ModelError("tensor '" + name + "': data offsets out of bounds");
      if (info.end - info.begin != static_cast<std::uint64_t>(info.element_count()) * dtype_size(info.dtype))
        throw ModelError("tensor '" + name + "': byte length does not match shape");
      ranges.emplace_back(info.begin, info.end);
      a.tensors_.emplace(name, std::move(info));
    } catch (const nlohmann::json::exception& e) {
      throw ModelError("tensor '" + name + "': " + e.what());
    }
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i)
    if (ranges[i].first < ranges[i - 1].second) throw ModelError("tensor data ranges overlap");

  a.bytes_ = std::move(bytes);
  return a;
}

const TensorInfo& TensorArchive::info(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ModelError("missing tensor " + name);
  return it->second;
}

std::span<const std::uint8_t> TensorArchive::raw(const std::string& name) const {
  const auto& t = info(name);
  return {bytes_.data() + payload_offset_ + t.begin, static_cast<std::size_t>(t.end - t.begin)};
}

std::vector<float> TensorArchive::to_f32(const std::string& name) const {
  const auto& t = info(name);
  const auto data = raw(name);
  const auto n = static_cast<std::size_t>(t.element_count());
  std::vector<float> out(n);
  switch (t.dtype) {
    case DType::F32:
      std::memcpy(out.data(), data.data(), n * 4);
      break;
    case DType::F64:
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0;
        std::memcpy(&v, data.data() + i * 8, 8);
        out[i] = static_cast<float>(v);
      }
      break;
    case DType::F16:
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t h = 0;
        std::memcpy(&h, data.data() + i * 2, 2);
        out[i] = half_to_float(h);
      }
      break;
    case DType::BF16:
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t h = 0;
        std::memcpy(&h, data.data() + i * 2, 2);
        out[i] = std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16);
      }
      break;
  }
  return out;
}

void TensorArchiveWriter::add(const std::string& name, std::vector<std::int64_t> shape,
                              std::span<const float> data) {
  std::int64_t n = 1;
  for (const auto d : shape) n *= d;
  if (n != static_cast<std::int64_t>(data.size()))
    throw ModelError("tensor '" + name + "': shape does not match data size");
  entries_.push_back({name, std::move(shape), {data.begin(), data.end()}});
}

std::vector<std::uint8_t> TensorArchiveWriter::serialize() const {
  // ordered_json keeps tensors in insertion order so output is reproducible.
  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  if (!metadata_.empty()) {
    auto& meta = header["__metadata__"];
    for (const auto& [k, v] : metadata_) meta[k] = v;
  }
  std::uint64_t offset = 0;
  for (const auto& e : entries_) {
    const std::uint64_t len = e.data.size() * 4;
    header[e.name] = {{"dtype", "F32"}, {"shape", e.shape}, {"data_offsets", {offset, offset + len}}};
    offset += len;
  }
  std::string text = header.dump();
  // Pad with spaces so the payload starts 8-byte aligned.
  while ((8 + text.size()) % 8 != 0) text += ' ';

  std::vector<std::uint8_t> out(8 + text.size() + offset);
  const std::uint64_t header_len = text.size();
  std::memcpy(out.data(), &header_len, 8);
  std::memcpy(out.data() + 8, text.data(), text.size());
  std::uint8_t* payload = out.data() + 8 + text.size();
  for (const auto& e : entries_) {
    std::memcpy(payload, e.data.data(), e.data.size() * 4);
    payload += e.data.size() * 4;
  }
  return out;
}

void TensorArchiveWriter::write(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on " + path.string());
}

}  // namespace gpath
