#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace absa::xml {

// Small strict XML reader covering what annotated-corpus files use:
// elements, attributes, character data, CDATA, comments, the XML
// declaration, and the five named entities plus numeric references.
// DTDs and processing instructions in the body are rejected.
struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;  // document order
  std::vector<Element> children;
  std::string text;  // character data directly inside this element, concatenated
  int line = 0;

  const std::string* attribute(std::string_view attr_name) const;
};

// Parses a full document and returns the root element.
// Errors are ParseError with a 1-based line number.
Element parse(std::string_view doc);

std::string escape_text(std::string_view s);
std::string escape_attribute(std::string_view s);

}  // namespace absa::xml
