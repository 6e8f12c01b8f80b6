#pragma once

#include <stdexcept>
#include <string>

namespace absa {

// Malformed input: bad XML, bad knowledge file, bad config, bad JSON.
// Messages carry the coordinates of the offending piece (line, sentence id).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally well-formed input that violates a domain invariant
// (span out of range, duplicate id, fraction out of [0,1], ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace absa
