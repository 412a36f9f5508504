#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by the corpus, gazetteer and search code.
namespace mathkg::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

/// Number of code points.
std::size_t length(std::string_view s);

/// Code-point based substring, [start, end).
std::string substr(std::string_view s, std::size_t start, std::size_t end);

bool is_whitespace(char32_t c);
bool is_cjk(char32_t c);
/// ASCII letters/digits plus Latin-1 and Latin Extended-A/B letters.
bool is_latin_alnum(char32_t c);
bool is_digit(char32_t c);

/// ASCII-only lowercase; other bytes pass through unchanged.
std::string to_lower(std::string_view s);

/// Lowercase, trim and collapse whitespace runs to a single space.
std::string normalize_name(std::string_view s);

bool is_stopword(std::string_view lowered);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// Formats a double with the shortest text that parses back bit-exactly.
std::string format_double(double v);
/// Parses a double; throws mathkg::Error on trailing garbage.
double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace mathkg::text
