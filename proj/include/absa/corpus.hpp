#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace absa::knowledge {
class KnowledgeSource;
}

namespace absa::corpus {

enum class Polarity { positive, negative, neutral };

// Fixed class order; doubles as the argmax tie-break order.
inline constexpr std::array<Polarity, 3> kPolarityOrder = {Polarity::positive, Polarity::negative,
                                                           Polarity::neutral};

Polarity parse_polarity(std::string_view s);
std::string_view to_string(Polarity p);
inline int polarity_index(Polarity p) { return static_cast<int>(p); }

// ENTITY#ATTRIBUTE, both parts nonempty, uppercase ASCII letters and '_'.
struct Category {
  std::string entity;
  std::string attribute;

  static Category parse(std::string_view s);
  std::string str() const { return entity + "#" + attribute; }
  auto operator<=>(const Category&) const = default;
};

// Character-offset span into the owning sentence text. Offsets count
// Unicode scalar values; start inclusive, end exclusive.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  auto operator<=>(const Span&) const = default;

  bool overlaps(const Span& other) const { return start < other.end && other.start < end; }
};

// target/span absent <=> the SemEval target="NULL" implicit aspect.
struct Opinion {
  std::optional<std::string> target;
  std::optional<Span> span;
  Category category;
  Polarity polarity = Polarity::neutral;
  bool operator==(const Opinion&) const = default;
};

struct Sentence {
  std::string id;
  std::string text;
  std::vector<Opinion> opinions;
  bool operator==(const Sentence&) const = default;
};

struct Review {
  std::string id;
  std::vector<Sentence> sentences;
  bool operator==(const Review&) const = default;
};

struct Domain {
  std::string name;  // nonempty, conventionally lowercase

  static Domain laptop() { return {"laptop"}; }
  static Domain restaurant() { return {"restaurant"}; }
  static Domain parse(std::string_view s);
  auto operator<=>(const Domain&) const = default;
};

struct Dataset {
  Domain domain;
  std::vector<Review> reviews;
  bool operator==(const Dataset&) const = default;

  std::size_t sentence_count() const;
  std::size_t opinion_count() const;
};

struct Token {
  std::string text;  // lowercase-folded
  Span span;         // into the original sentence text
  bool operator==(const Token&) const = default;
};

// Checks every dataset invariant (unique ids, span bounds, span/target
// agreement); throws ValidationError naming the offending sentence.
void validate(const Dataset& ds);

// ---- SemEval-2015-style XML ----

Dataset parse_semeval(std::string_view xml_text, Domain domain);

// Canonical form: XML declaration, 2-space indent, attributes in the
// order target, category, polarity, from, to. parse(serialize(ds)) == ds.
std::string serialize_semeval(const Dataset& ds);

// ---- Text operations ----

// Lowercase-folded, whitespace-split tokens with punctuation characters
// isolated; spans cover every non-whitespace scalar exactly once.
std::vector<Token> tokenize(std::string_view text);

// Replaces floor(fraction * eligible) tokens per sentence with [MASK].
// Tokens overlapping a gold opinion span are eligible only when
// include_aspect_tokens is set. Opinion spans and targets are rebuilt.
Dataset mask_tokens(const Dataset& ds, double fraction, std::uint64_t seed, bool include_aspect_tokens);

// Appends min(ops_per_sentence, 3) synthetic copies of every review,
// one per strategy: context-token dropout, adjacent non-aspect token
// swap, lexicon-driven aspect substitution. Originals are untouched.
Dataset augment(const Dataset& ds, std::uint64_t seed, int ops_per_sentence,
                const knowledge::KnowledgeSource& ks);

// Seeded shuffle at review granularity; sizes ceil(n*f) and n-ceil(n*f).
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace absa::corpus
