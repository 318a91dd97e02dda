#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Byte-level string helpers shared by every stage. All functions treat
// input as UTF-8 but only ever inspect ASCII bytes, so multi-byte sequences
// pass through untouched.
namespace relcat::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return is_upper(c) || is_lower(c); }
inline char to_lower(char c) { return is_upper(c) ? char(c - 'A' + 'a') : c; }

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Collapses every whitespace run to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// Offset of the first byte that does not begin a well-formed UTF-8 sequence.
std::optional<std::size_t> first_invalid_utf8(std::string_view s);

// Replaces every malformed byte with U+FFFD.
std::string sanitize_utf8(std::string_view s);

// Decodes to code points; malformed bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);

// Splits on '\n', dropping a trailing '\r' per line. A trailing newline does
// not produce an extra empty line, and "" yields no lines.
std::vector<std::string_view> split_lines(std::string_view s);

// Repeats `step` until the output stops changing.
template <typename Step>
std::string until_stable(std::string s, Step step, int max_rounds = 64) {
  for (int round = 0; round < max_rounds; ++round) {
    std::string next = step(s);
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

}  // namespace relcat::text
