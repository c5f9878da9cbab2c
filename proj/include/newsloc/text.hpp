#pragma once

#include <string>
#include <string_view>
#include <vector>

// Byte-level text helpers. Case folding is ASCII-only; multi-byte UTF-8
// sequences pass through untouched.
namespace newsloc::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alnum(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'z') || is_upper(c) ||
         static_cast<unsigned char>(c) >= 0x80;
}
inline char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

std::string to_lower(std::string_view s);

// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s);

// Trim, then collapse every whitespace run to one ASCII space.
std::string collapse_whitespace(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view s);

std::size_t word_count(std::string_view s);

// Lowercased, whitespace-collapsed form used for exact name/sentence identity.
std::string normalize_key(std::string_view s);

}  // namespace newsloc::text
