#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace eraclass::utf8 {

inline constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes the sequence starting at s[pos]; sets `len` to the bytes consumed.
// Malformed input yields kInvalid with len = 1.
char32_t decode_at(std::string_view s, std::size_t pos, std::size_t& len);

void append(std::string& out, char32_t cp);

std::u32string decode(std::string_view s);
std::string encode(std::u32string_view cps);

std::size_t count_codepoints(std::string_view s);

// Each codepoint as its own UTF-8 string.
std::vector<std::string> split_codepoints(std::string_view s);

bool is_space(char32_t cp);

// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace eraclass::utf8
