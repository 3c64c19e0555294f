#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag::text {

// ASCII-only classification; never consults the C locale, so bytes >= 0x80
// pass through untouched.
constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
constexpr bool is_alpha(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
constexpr char to_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

// Trims and replaces every run of whitespace with a single space.
std::string collapse_whitespace(std::string_view s);

// Splits on '\n'; a trailing '\r' is removed from each line.
std::vector<std::string_view> split_lines(std::string_view s);

std::vector<std::string> split_words(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string hex_encode(std::string_view bytes);

}  // namespace kgrag::text
