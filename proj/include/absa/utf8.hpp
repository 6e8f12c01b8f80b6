#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace absa::utf8 {

// Strict UTF-8. Invalid bytes, overlong encodings, surrogates and
// codepoints past U+10FFFF are ParseErrors. All offsets below count
// Unicode scalar values, not bytes.

std::vector<char32_t> decode(std::string_view s);

std::size_t length(std::string_view s);

// Byte offset of the scalar at index `cp_index`; cp_index == length(s)
// maps to s.size().
std::size_t byte_offset(std::string_view s, std::size_t cp_index);

// Substring [start, end) in scalar offsets.
std::string slice(std::string_view s, std::size_t start, std::size_t end);

void append(std::string& out, char32_t cp);

std::string encode(const std::vector<char32_t>& cps);

// ASCII-only case fold; multibyte sequences pass through untouched.
std::string lower_ascii(std::string_view s);

}  // namespace absa::utf8
