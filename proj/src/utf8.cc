#include "latfuse/utf8.h"

#include <cstdint>

#include "latfuse/errors.h"

namespace latfuse {

namespace {

// Returns the byte length of the scalar starting at data[i], or 0 if invalid.
int SequenceLength(const unsigned char* data, std::size_t i, std::size_t n) {
  unsigned char b = data[i];
  if (b < 0x80) return 1;
  int len;
  uint32_t cp;
  if ((b & 0xE0) == 0xC0) {
    len = 2;
    cp = b & 0x1F;
  } else if ((b & 0xF0) == 0xE0) {
    len = 3;
    cp = b & 0x0F;
  } else if ((b & 0xF8) == 0xF0) {
    len = 4;
    cp = b & 0x07;
  } else {
    return 0;
  }
  if (i + len > n) return 0;
  for (int k = 1; k < len; ++k) {
    unsigned char c = data[i + k];
    if ((c & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (c & 0x3F);
  }
  // Overlong encodings, surrogates and out-of-range values are invalid.
  static constexpr uint32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMinByLen[len]) return 0;
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

}  // namespace

std::vector<std::string> Utf8Chars(std::string_view text) {
  std::vector<std::string> out;
  const auto* data = reinterpret_cast<const unsigned char*>(text.data());
  std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    int len = SequenceLength(data, i, n);
    if (len == 0) {
      throw ParseError("invalid UTF-8 byte sequence at byte offset " +
                       std::to_string(i));
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::size_t Utf8Length(std::string_view text) {
  const auto* data = reinterpret_cast<const unsigned char*>(text.data());
  std::size_t n = text.size();
  std::size_t i = 0;
  std::size_t count = 0;
  while (i < n) {
    int len = SequenceLength(data, i, n);
    if (len == 0) {
      throw ParseError("invalid UTF-8 byte sequence at byte offset " +
                       std::to_string(i));
    }
    i += len;
    ++count;
  }
  return count;
}

bool HasUtf8Bom(std::string_view text) {
  return text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
         static_cast<unsigned char>(text[1]) == 0xBB &&
         static_cast<unsigned char>(text[2]) == 0xBF;
}

}  // namespace latfuse
