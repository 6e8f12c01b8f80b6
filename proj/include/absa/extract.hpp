#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/knowledge.hpp"
#include "absa/llm_client.hpp"

namespace absa::extract {

struct AspectPrediction {
  std::string term;
  std::optional<corpus::Span> span;  // slices the sentence to `term` (case-insensitive)
  std::optional<corpus::Category> category;
  std::optional<corpus::Polarity> polarity;
  double confidence = 1.0;
  bool operator==(const AspectPrediction&) const = default;
};

// First case-insensitive occurrence of `term` as a whole-token sequence;
// none when absent.
std::optional<corpus::Span> align_span(std::string_view sentence_text, std::string_view term);

// Scans token n-grams left to right, longest match first, non-overlapping;
// categories come from resolve_term for `domain`.
std::vector<AspectPrediction> extract_lexicon(const corpus::Sentence& sentence,
                                              const knowledge::KnowledgeSource& ks,
                                              const corpus::Domain& domain, int max_ngram = 4);

// Replay fixture keyed by sentence id; hermetic stand-in for a live model.
class MockFixture {
 public:
  MockFixture() = default;

  // JSON: {"format_version":1, "predictions": {"<sentence-id>": [{...}]}}
  static MockFixture load_json(std::string_view text);
  std::string to_json() const;

  void add(const std::string& sentence_id, std::vector<AspectPrediction> predictions);
  const std::map<std::string, std::vector<AspectPrediction>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<AspectPrediction>> entries_;
};

// Fixture entry for the sentence id, [] when absent. Entries with spans
// are validated against the sentence text.
std::vector<AspectPrediction> extract_mock(const corpus::Sentence& sentence, const MockFixture& fixture);

// UTF-8 text with {{sentence}}, {{domain}} and {{knowledge}} placeholders;
// unknown placeholders are a load-time error.
class PromptTemplate {
 public:
  static PromptTemplate load(std::string_view text);
  std::string render(std::string_view sentence, std::string_view domain, std::string_view knowledge) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct LlmSettings {
  std::string endpoint_url;
  std::string model_name;
  int max_tokens = 512;
};

// One temperature-0 chat request per sentence; expects a strict JSON array
// of {term, category, polarity}. Terms that fail alignment keep no span;
// malformed categories are dropped with a warning on stderr.
std::vector<AspectPrediction> extract_llm(const corpus::Sentence& sentence,
                                          const knowledge::KnowledgeSource& ks,
                                          const corpus::Domain& domain, const PromptTemplate& tmpl,
                                          llm::Client& client, const LlmSettings& settings);

}  // namespace absa::extract
