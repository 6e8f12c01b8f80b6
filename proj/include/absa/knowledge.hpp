#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absa/corpus.hpp"

namespace absa::knowledge {

struct LexiconEntry {
  std::string term;  // lowercase, nonempty
  corpus::Domain domain;
  corpus::Category category;
  bool operator==(const LexiconEntry&) const = default;
};

// External knowledge: a term lexicon plus a cross-domain category map.
// Immutable after load; freely shareable.
class KnowledgeSource {
 public:
  KnowledgeSource() = default;

  // Sectioned line format: [lexicon] with term<TAB>domain<TAB>ENTITY#ATTR
  // lines, [category-map] with SRC#ATTR<TAB>domain<TAB>DST#ATTR lines.
  // '#' starts a comment only as the first non-space character.
  static KnowledgeSource load(std::string_view text);

  void add_lexicon_entry(LexiconEntry entry);
  void add_category_mapping(const corpus::Category& source, const corpus::Domain& target,
                            const corpus::Category& mapped);

  // Case-insensitive exact match on (term, domain).
  std::optional<corpus::Category> resolve_term(std::string_view term, const corpus::Domain& domain) const;

  // Explicit mapping entry wins; identity when the target domain already
  // uses the category; none otherwise.
  std::optional<corpus::Category> map_category(const corpus::Category& c,
                                               const corpus::Domain& target) const;

  // True when `c` belongs to the target domain's scheme, i.e. it appears
  // on a lexicon entry for that domain or as a mapping target into it.
  bool domain_has_category(const corpus::Domain& domain, const corpus::Category& c) const;

  // Lexicon terms for one domain, in file order.
  std::vector<std::string> terms_for(const corpus::Domain& domain) const;

  const std::vector<LexiconEntry>& lexicon() const { return entries_; }
  std::size_t category_map_size() const { return category_map_.size(); }

  // Copy with the explicit category map removed; the identity rule stays.
  KnowledgeSource without_category_map() const;

 private:
  std::vector<LexiconEntry> entries_;
  std::map<std::pair<std::string, std::string>, std::size_t> by_term_domain_;   // (term, domain) -> index
  std::map<std::pair<std::string, std::string>, corpus::Category> category_map_;  // (cat, domain) -> cat
};

}  // namespace absa::knowledge
