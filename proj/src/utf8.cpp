#include "absa/utf8.hpp"

#include "absa/errors.hpp"

namespace absa::utf8 {

namespace {

[[noreturn]] void bad(std::size_t byte_pos) {
  throw ParseError("invalid UTF-8 at byte " + std::to_string(byte_pos));
}

// Decodes one scalar starting at byte i; advances i past it.
char32_t decode_one(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int n;
  char32_t cp;
  if ((b0 & 0xE0) == 0xC0) {
    n = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    n = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    n = 3;
    cp = b0 & 0x07;
  } else {
    bad(i);
  }
  if (i + static_cast<std::size_t>(n) >= s.size()) bad(i);
  for (int k = 1; k <= n; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) bad(i);
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[n]) bad(i);                      // overlong
  if (cp >= 0xD800 && cp <= 0xDFFF) bad(i);      // surrogate
  if (cp > 0x10FFFF) bad(i);
  i += n + 1;
  return cp;
}

}  // namespace

std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) out.push_back(decode_one(s, i));
  return out;
}

std::size_t length(std::string_view s) {
  std::size_t i = 0, n = 0;
  while (i < s.size()) {
    decode_one(s, i);
    ++n;
  }
  return n;
}

std::size_t byte_offset(std::string_view s, std::size_t cp_index) {
  std::size_t i = 0, n = 0;
  while (n < cp_index) {
    if (i >= s.size()) throw ValidationError("scalar offset " + std::to_string(cp_index) + " past end of text");
    decode_one(s, i);
    ++n;
  }
  return i;
}

std::string slice(std::string_view s, std::size_t start, std::size_t end) {
  if (start > end) throw ValidationError("slice start past end");
  const std::size_t b0 = byte_offset(s, start);
  std::size_t i = b0, n = start;
  while (n < end) {
    if (i >= s.size()) throw ValidationError("scalar offset " + std::to_string(end) + " past end of text");
    decode_one(s, i);
    ++n;
  }
  return std::string(s.substr(b0, i - b0));
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append(out, cp);
  return out;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c += 32;
  }
  return out;
}

}  // namespace absa::utf8
