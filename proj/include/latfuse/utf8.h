#ifndef LATFUSE_UTF8_H_
#define LATFUSE_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace latfuse {

// Splits UTF-8 text into Unicode scalar values, each returned as the UTF-8
// substring encoding exactly one scalar. Throws ParseError on invalid UTF-8.
// All character positions in this library count scalar values, not bytes.
std::vector<std::string> Utf8Chars(std::string_view text);

// Number of Unicode scalar values in the text.
std::size_t Utf8Length(std::string_view text);

bool HasUtf8Bom(std::string_view text);

}  // namespace latfuse

#endif  // LATFUSE_UTF8_H_
