#include "absa/extract.hpp"

#include <iostream>
#include <sstream>

#include <json.hpp>

#include "absa/errors.hpp"
#include "absa/utf8.hpp"

namespace absa::extract {

using json = nlohmann::json;

std::optional<corpus::Span> align_span(std::string_view sentence_text, std::string_view term) {
  if (term.empty()) throw ValidationError("align_span: term must be nonempty");
  const auto tokens = corpus::tokenize(sentence_text);
  const auto term_tokens = corpus::tokenize(term);
  if (term_tokens.empty() || tokens.empty()) return std::nullopt;
  const std::string folded_term = utf8::lower_ascii(std::string(term));
  for (std::size_t i = 0; i + term_tokens.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < term_tokens.size(); ++j) {
      if (tokens[i + j].text != term_tokens[j].text) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    const corpus::Span span{tokens[i].span.start, tokens[i + term_tokens.size() - 1].span.end};
    // The slice itself must reproduce the term (inter-token gaps matter).
    if (utf8::lower_ascii(utf8::slice(sentence_text, span.start, span.end)) == folded_term) return span;
  }
  return std::nullopt;
}

std::vector<AspectPrediction> extract_lexicon(const corpus::Sentence& sentence,
                                              const knowledge::KnowledgeSource& ks,
                                              const corpus::Domain& domain, int max_ngram) {
  if (max_ngram < 1) throw ValidationError("extract_lexicon: max_ngram must be >= 1");
  const auto tokens = corpus::tokenize(sentence.text);
  std::vector<AspectPrediction> predictions;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool advanced = false;
    const std::size_t longest = std::min(static_cast<std::size_t>(max_ngram), tokens.size() - i);
    for (std::size_t n = longest; n >= 1; --n) {
      std::string key;
      for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) key += ' ';
        key += tokens[i + j].text;
      }
      const auto category = ks.resolve_term(key, domain);
      if (!category) continue;
      const corpus::Span span{tokens[i].span.start, tokens[i + n - 1].span.end};
      AspectPrediction p;
      p.term = utf8::slice(sentence.text, span.start, span.end);
      p.span = span;
      p.category = *category;
      p.confidence = 1.0;
      predictions.push_back(std::move(p));
      i += n;
      advanced = true;
      break;
    }
    if (!advanced) ++i;
  }
  return predictions;
}

// ---- mock fixture ----

namespace {

json prediction_to_json(const AspectPrediction& p) {
  json j;
  j["term"] = p.term;
  j["span"] = p.span ? json{p.span->start, p.span->end} : json(nullptr);
  j["category"] = p.category ? json(p.category->str()) : json(nullptr);
  j["polarity"] = p.polarity ? json(std::string(corpus::to_string(*p.polarity))) : json(nullptr);
  j["confidence"] = p.confidence;
  return j;
}

AspectPrediction prediction_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": prediction must be an object");
  AspectPrediction p;
  p.term = j.at("term").get<std::string>();
  if (p.term.empty()) throw ParseError(where + ": empty term");
  if (j.contains("span") && !j.at("span").is_null()) {
    const auto arr = j.at("span");
    if (!arr.is_array() || arr.size() != 2) throw ParseError(where + ": span must be [start, end]");
    p.span = corpus::Span{arr[0].get<std::size_t>(), arr[1].get<std::size_t>()};
    if (p.span->start >= p.span->end) {
      throw ParseError(where + ": invalid span (from=" + std::to_string(p.span->start) +
                       ", to=" + std::to_string(p.span->end) + ")");
    }
  }
  if (j.contains("category") && !j.at("category").is_null()) {
    p.category = corpus::Category::parse(j.at("category").get<std::string>());
  }
  if (j.contains("polarity") && !j.at("polarity").is_null()) {
    p.polarity = corpus::parse_polarity(j.at("polarity").get<std::string>());
  }
  p.confidence = j.value("confidence", 1.0);
  if (p.confidence < 0.0 || p.confidence > 1.0) throw ParseError(where + ": confidence outside [0,1]");
  return p;
}

}  // namespace

MockFixture MockFixture::load_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("mock fixture: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format_version", 0) != 1 || !doc.contains("predictions") ||
      !doc.at("predictions").is_object()) {
    throw ParseError("mock fixture: expected {format_version:1, predictions:{...}}");
  }
  MockFixture fixture;
  for (const auto& [sentence_id, items] : doc.at("predictions").items()) {
    if (!items.is_array()) throw ParseError("mock fixture: predictions for " + sentence_id + " must be an array");
    std::vector<AspectPrediction> predictions;
    for (const auto& item : items) {
      predictions.push_back(prediction_from_json(item, "mock fixture sentence " + sentence_id));
    }
    fixture.add(sentence_id, std::move(predictions));
  }
  return fixture;
}

std::string MockFixture::to_json() const {
  json doc;
  doc["format_version"] = 1;
  doc["predictions"] = json::object();
  for (const auto& [sentence_id, predictions] : entries_) {
    json arr = json::array();
    for (const auto& p : predictions) arr.push_back(prediction_to_json(p));
    doc["predictions"][sentence_id] = arr;
  }
  return doc.dump(2) + "\n";
}

void MockFixture::add(const std::string& sentence_id, std::vector<AspectPrediction> predictions) {
  entries_[sentence_id] = std::move(predictions);
}

std::vector<AspectPrediction> extract_mock(const corpus::Sentence& sentence, const MockFixture& fixture) {
  const auto it = fixture.entries().find(sentence.id);
  if (it == fixture.entries().end()) return {};
  const std::size_t len = utf8::length(sentence.text);
  for (const auto& p : it->second) {
    if (!p.span) continue;
    if (p.span->end > len ||
        utf8::lower_ascii(utf8::slice(sentence.text, p.span->start, p.span->end)) !=
            utf8::lower_ascii(p.term)) {
      throw ValidationError("mock fixture sentence " + sentence.id +
                            ": span does not slice the sentence to the term '" + p.term + "'");
    }
  }
  return it->second;
}

// ---- prompt template ----

PromptTemplate PromptTemplate::load(std::string_view text) {
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const std::size_t close = text.find("}}", pos + 2);
    if (close == std::string_view::npos) {
      throw ParseError("prompt template: unterminated placeholder");
    }
    const std::string_view name = text.substr(pos + 2, close - pos - 2);
    if (name != "sentence" && name != "domain" && name != "knowledge") {
      throw ParseError("prompt template: unknown placeholder {{" + std::string(name) + "}}");
    }
    pos = close + 2;
  }
  PromptTemplate tmpl;
  tmpl.text_ = std::string(text);
  return tmpl;
}

std::string PromptTemplate::render(std::string_view sentence, std::string_view domain,
                                   std::string_view knowledge) const {
  std::string out;
  out.reserve(text_.size() + sentence.size() + knowledge.size());
  std::size_t pos = 0;
  while (pos < text_.size()) {
    const std::size_t open = text_.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text_, pos, std::string::npos);
      break;
    }
    out.append(text_, pos, open - pos);
    const std::size_t close = text_.find("}}", open + 2);
    const std::string_view name = std::string_view(text_).substr(open + 2, close - open - 2);
    if (name == "sentence") {
      out.append(sentence);
    } else if (name == "domain") {
      out.append(domain);
    } else {
      out.append(knowledge);
    }
    pos = close + 2;
  }
  return out;
}

// ---- llm-backed extraction ----

std::vector<AspectPrediction> extract_llm(const corpus::Sentence& sentence,
                                          const knowledge::KnowledgeSource& ks,
                                          const corpus::Domain& domain, const PromptTemplate& tmpl,
                                          llm::Client& client, const LlmSettings& settings) {
  std::string knowledge_block;
  for (const auto& term : ks.terms_for(domain)) {
    if (!knowledge_block.empty()) knowledge_block += '\n';
    knowledge_block += term;
  }
  llm::LlmRequest request;
  request.endpoint_url = settings.endpoint_url;
  request.model_name = settings.model_name;
  request.max_tokens = settings.max_tokens;
  request.temperature = 0.0;
  request.messages.push_back({"user", tmpl.render(sentence.text, domain.name, knowledge_block)});
  const llm::LlmResponse response = client.complete(request);
  const auto records = llm::parse_extraction_payload(response.text);
  std::vector<AspectPrediction> predictions;
  for (const auto& record : records) {
    AspectPrediction p;
    p.term = record.term;
    if (record.term.empty()) {
      std::cerr << "extract: sentence " << sentence.id << ": dropping record with empty term\n";
      continue;
    }
    try {
      p.category = corpus::Category::parse(record.category);
    } catch (const ParseError&) {
      std::cerr << "extract: sentence " << sentence.id << ": dropping record with malformed category '"
                << record.category << "'\n";
      continue;
    }
    try {
      p.polarity = corpus::parse_polarity(record.polarity);
    } catch (const ParseError&) {
      std::cerr << "extract: sentence " << sentence.id << ": ignoring unknown polarity '"
                << record.polarity << "' for term '" << record.term << "'\n";
    }
    p.span = align_span(sentence.text, record.term);
    if (p.span) p.term = utf8::slice(sentence.text, p.span->start, p.span->end);
    p.confidence = 1.0;
    predictions.push_back(std::move(p));
  }
  return predictions;
}

}  // namespace absa::extract
