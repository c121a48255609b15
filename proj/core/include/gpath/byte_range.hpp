#pragma once

#include <cstddef>
#include <string_view>

namespace gpath {

// Half-open [begin, end) range of byte offsets into a UTF-8 string.
struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] constexpr std::size_t size() const { return end - begin; }
  [[nodiscard]] constexpr bool empty() const { return end == begin; }
  [[nodiscard]] constexpr bool contains(std::size_t offset) const {
    return offset >= begin && offset < end;
  }
  [[nodiscard]] std::string_view slice(std::string_view text) const {
    return text.substr(begin, end - begin);
  }
  friend constexpr bool operator==(const ByteRange&, const ByteRange&) = default;
};

}  // namespace gpath
