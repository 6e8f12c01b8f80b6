#include "absa/xml.hpp"

#include <cctype>

#include "absa/errors.hpp"
#include "absa/utf8.hpp"

namespace absa::xml {

const std::string* Element::attribute(std::string_view attr_name) const {
  for (const auto& [k, v] : attributes) {
    if (k == attr_name) return &v;
  }
  return nullptr;
}

namespace {

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' || c == '.';
}

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  Element parse_document() {
    skip_bom();
    skip_misc();
    if (!starts_with("<")) fail("expected root element");
    Element root = parse_element();
    skip_misc();
    if (pos_ != doc_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  std::string_view doc_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(line_) + ": " + msg);
  }

  bool eof() const { return pos_ >= doc_.size(); }
  char peek() const { return doc_[pos_]; }

  char take() {
    const char c = doc_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

  void expect(std::string_view s) {
    if (!starts_with(s)) fail("expected '" + std::string(s) + "'");
    for (std::size_t i = 0; i < s.size(); ++i) take();
  }

  void skip_bom() {
    if (starts_with("\xEF\xBB\xBF")) pos_ += 3;
  }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) take();
  }

  // Whitespace, the XML declaration and comments outside the root.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        while (!eof() && !starts_with("?>")) take();
        expect("?>");
      } else if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("<!")) {
        fail("DTD sections are not supported");
      } else {
        return;
      }
    }
  }

  void skip_comment() {
    expect("<!--");
    while (!eof() && !starts_with("-->")) take();
    expect("-->");
  }

  std::string parse_name() {
    if (eof() || !is_name_start(peek())) fail("expected a name");
    std::string name;
    name.push_back(take());
    while (!eof() && is_name_char(peek())) name.push_back(take());
    return name;
  }

  char32_t parse_reference() {
    expect("&");
    std::string ent;
    while (!eof() && peek() != ';') {
      ent.push_back(take());
      if (ent.size() > 8) fail("unterminated entity reference");
    }
    expect(";");
    if (ent == "amp") return '&';
    if (ent == "lt") return '<';
    if (ent == "gt") return '>';
    if (ent == "quot") return '"';
    if (ent == "apos") return '\'';
    if (!ent.empty() && ent[0] == '#') {
      const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      const std::string digits = ent.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference");
      char32_t cp = 0;
      for (char d : digits) {
        int v;
        if (d >= '0' && d <= '9') {
          v = d - '0';
        } else if (hex && d >= 'a' && d <= 'f') {
          v = d - 'a' + 10;
        } else if (hex && d >= 'A' && d <= 'F') {
          v = d - 'A' + 10;
        } else {
          fail("bad character reference '&" + ent + ";'");
        }
        cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
        if (cp > 0x10FFFF) fail("character reference out of range");
      }
      return cp;
    }
    fail("unknown entity '&" + ent + ";'");
  }

  std::string parse_attribute_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
    const char quote = take();
    std::string value;
    while (!eof() && peek() != quote) {
      if (peek() == '<') fail("'<' in attribute value");
      if (peek() == '&') {
        utf8::append(value, parse_reference());
      } else {
        value.push_back(take());
      }
    }
    if (eof()) fail("unterminated attribute value");
    take();  // closing quote
    return value;
  }

  Element parse_element() {
    expect("<");
    Element el;
    el.line = line_;
    el.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag for <" + el.name + ">");
      if (peek() == '/') {
        expect("/>");
        return el;
      }
      if (peek() == '>') {
        take();
        parse_content(el);
        return el;
      }
      const std::string key = parse_name();
      if (el.attribute(key) != nullptr) fail("duplicate attribute '" + key + "' on <" + el.name + ">");
      skip_ws();
      expect("=");
      skip_ws();
      el.attributes.emplace_back(key, parse_attribute_value());
    }
  }

  void parse_content(Element& el) {
    for (;;) {
      if (eof()) fail("missing end tag for <" + el.name + ">");
      if (starts_with("</")) {
        expect("</");
        const std::string name = parse_name();
        if (name != el.name) fail("mismatched end tag </" + name + "> for <" + el.name + ">");
        skip_ws();
        expect(">");
        return;
      }
      if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("<![CDATA[")) {
        expect("<![CDATA[");
        while (!eof() && !starts_with("]]>")) el.text.push_back(take());
        expect("]]>");
      } else if (starts_with("<?") || starts_with("<!")) {
        fail("unsupported markup inside <" + el.name + ">");
      } else if (peek() == '<') {
        el.children.push_back(parse_element());
      } else if (peek() == '&') {
        utf8::append(el.text, parse_reference());
      } else {
        el.text.push_back(take());
      }
    }
  }
};

void escape_into(std::string& out, std::string_view s, bool attribute) {
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out.push_back(c);
        }
        break;
      default:
        out.push_back(c);
    }
  }
}

}  // namespace

Element parse(std::string_view doc) { return Parser(doc).parse_document(); }

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  escape_into(out, s, false);
  return out;
}

std::string escape_attribute(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  escape_into(out, s, true);
  return out;
}

}  // namespace absa::xml
