#include "absa/knowledge.hpp"

#include <sstream>

#include "absa/errors.hpp"
#include "absa/utf8.hpp"

namespace absa::knowledge {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw ParseError("knowledge line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

KnowledgeSource KnowledgeSource::load(std::string_view text) {
  KnowledgeSource ks;
  enum class Section { none, lexicon, category_map } section = Section::none;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line == "[lexicon]") {
      section = Section::lexicon;
      continue;
    }
    if (line == "[category-map]") {
      section = Section::category_map;
      continue;
    }
    if (line[0] == '[') fail(line_no, "unknown section '" + line + "'");
    if (section == Section::none) fail(line_no, "entry before any section header");
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 3) fail(line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    try {
      if (section == Section::lexicon) {
        const std::string& term = fields[0];
        if (term.empty()) fail(line_no, "empty term");
        if (term != utf8::lower_ascii(term)) fail(line_no, "term '" + term + "' must be lowercase");
        const corpus::Domain domain = corpus::Domain::parse(fields[1]);
        const corpus::Category category = corpus::Category::parse(fields[2]);
        if (ks.by_term_domain_.count({term, domain.name}) != 0) {
          fail(line_no, "duplicate lexicon entry for ('" + term + "', " + domain.name + ")");
        }
        ks.add_lexicon_entry({term, domain, category});
      } else {
        const corpus::Category source = corpus::Category::parse(fields[0]);
        const corpus::Domain target = corpus::Domain::parse(fields[1]);
        const corpus::Category mapped = corpus::Category::parse(fields[2]);
        if (ks.category_map_.count({source.str(), target.name}) != 0) {
          fail(line_no, "duplicate category mapping for (" + source.str() + ", " + target.name + ")");
        }
        ks.add_category_mapping(source, target, mapped);
      }
    } catch (const ParseError& e) {
      // Re-anchor grammar errors to the offending line.
      std::string what = e.what();
      if (what.rfind("knowledge line", 0) == 0) throw;
      fail(line_no, what);
    }
  }
  return ks;
}

void KnowledgeSource::add_lexicon_entry(LexiconEntry entry) {
  if (entry.term.empty() || entry.term != utf8::lower_ascii(entry.term)) {
    throw ValidationError("lexicon term '" + entry.term + "' must be nonempty lowercase");
  }
  if (!by_term_domain_.emplace(std::pair{entry.term, entry.domain.name}, entries_.size()).second) {
    throw ValidationError("duplicate lexicon entry for ('" + entry.term + "', " + entry.domain.name + ")");
  }
  entries_.push_back(std::move(entry));
}

void KnowledgeSource::add_category_mapping(const corpus::Category& source, const corpus::Domain& target,
                                           const corpus::Category& mapped) {
  if (!category_map_.emplace(std::pair{source.str(), target.name}, mapped).second) {
    throw ValidationError("duplicate category mapping for (" + source.str() + ", " + target.name + ")");
  }
}

std::optional<corpus::Category> KnowledgeSource::resolve_term(std::string_view term,
                                                              const corpus::Domain& domain) const {
  const auto it = by_term_domain_.find({utf8::lower_ascii(term), domain.name});
  if (it == by_term_domain_.end()) return std::nullopt;
  return entries_[it->second].category;
}

bool KnowledgeSource::domain_has_category(const corpus::Domain& domain, const corpus::Category& c) const {
  for (const auto& entry : entries_) {
    if (entry.domain == domain && entry.category == c) return true;
  }
  for (const auto& [key, mapped] : category_map_) {
    if (key.second == domain.name && mapped == c) return true;
  }
  return false;
}

std::optional<corpus::Category> KnowledgeSource::map_category(const corpus::Category& c,
                                                              const corpus::Domain& target) const {
  const auto it = category_map_.find({c.str(), target.name});
  if (it != category_map_.end()) return it->second;
  if (domain_has_category(target, c)) return c;
  return std::nullopt;
}

std::vector<std::string> KnowledgeSource::terms_for(const corpus::Domain& domain) const {
  std::vector<std::string> terms;
  for (const auto& entry : entries_) {
    if (entry.domain == domain) terms.push_back(entry.term);
  }
  return terms;
}

KnowledgeSource KnowledgeSource::without_category_map() const {
  KnowledgeSource ks;
  ks.entries_ = entries_;
  ks.by_term_domain_ = by_term_domain_;
  return ks;
}

}  // namespace absa::knowledge
