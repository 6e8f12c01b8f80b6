#include <charconv>
#include <set>

#include "absa/corpus.hpp"
#include "absa/errors.hpp"
#include "absa/utf8.hpp"
#include "absa/xml.hpp"

namespace absa::corpus {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ParseError(where + msg);
}

std::size_t parse_offset(const std::string& where, std::string_view name, const std::string& value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(where, "attribute " + std::string(name) + "='" + value + "' is not a non-negative integer");
  }
  return out;
}

Opinion parse_opinion(const xml::Element& el, const Sentence& sentence) {
  const std::string where = "sentence " + sentence.id + ": ";
  for (const auto& [key, value] : el.attributes) {
    if (key != "target" && key != "category" && key != "polarity" && key != "from" && key != "to") {
      fail(where, "unknown Opinion attribute '" + key + "'");
    }
  }
  const std::string* category = el.attribute("category");
  if (category == nullptr) fail(where, "Opinion is missing the category attribute");
  const std::string* polarity = el.attribute("polarity");
  if (polarity == nullptr) fail(where, "Opinion is missing the polarity attribute");

  Opinion op;
  try {
    op.category = Category::parse(*category);
    op.polarity = parse_polarity(*polarity);
  } catch (const ParseError& e) {
    fail(where, e.what());
  }

  const std::string* target = el.attribute("target");
  const std::string* from = el.attribute("from");
  const std::string* to = el.attribute("to");
  if (target == nullptr || *target == "NULL") {
    // Implicit aspect: SemEval writes target="NULL" from="0" to="0".
    const std::size_t f = from ? parse_offset(where, "from", *from) : 0;
    const std::size_t t = to ? parse_offset(where, "to", *to) : 0;
    if (f != 0 || t != 0) fail(where, "NULL target must not carry a span");
    return op;
  }
  if (target->empty()) fail(where, "empty target attribute");
  if (from == nullptr || to == nullptr) fail(where, "target '" + *target + "' is missing from/to offsets");
  const Span span{parse_offset(where, "from", *from), parse_offset(where, "to", *to)};
  if (span.start >= span.end || span.end > utf8::length(sentence.text)) {
    fail(where,
         "invalid span (from=" + std::to_string(span.start) + ", to=" + std::to_string(span.end) + ")");
  }
  const std::string slice = utf8::slice(sentence.text, span.start, span.end);
  if (slice != *target) {
    fail(where, "span/target mismatch: text slice is '" + slice + "', target is '" + *target + "'");
  }
  op.target = *target;
  op.span = span;
  return op;
}

const xml::Element* single_child(const xml::Element& el, std::string_view name) {
  const xml::Element* found = nullptr;
  for (const auto& child : el.children) {
    if (child.name == name) {
      if (found != nullptr) return nullptr;
      found = &child;
    }
  }
  return found;
}

}  // namespace

Dataset parse_semeval(std::string_view xml_text, Domain domain) {
  const xml::Element root = xml::parse(xml_text);
  if (root.name != "Reviews") {
    throw ParseError("top element must be Reviews, found " + root.name);
  }
  Dataset ds{std::move(domain), {}};
  std::set<std::string> review_ids;
  std::set<std::string> sentence_ids;
  for (const auto& review_el : root.children) {
    if (review_el.name != "Review") {
      throw ParseError("line " + std::to_string(review_el.line) + ": unexpected element <" + review_el.name +
                       "> under Reviews");
    }
    const std::string* rid = review_el.attribute("rid");
    if (rid == nullptr || rid->empty()) {
      throw ParseError("line " + std::to_string(review_el.line) + ": Review is missing the rid attribute");
    }
    if (!review_ids.insert(*rid).second) {
      throw ParseError("review " + *rid + ": duplicate review id");
    }
    Review review{*rid, {}};
    const xml::Element* sentences_el = single_child(review_el, "sentences");
    if (sentences_el == nullptr) {
      throw ParseError("review " + *rid + ": expected exactly one <sentences> element");
    }
    for (const auto& sentence_el : sentences_el->children) {
      if (sentence_el.name != "sentence") {
        throw ParseError("review " + *rid + ": unexpected element <" + sentence_el.name +
                         "> under sentences");
      }
      const std::string* sid = sentence_el.attribute("id");
      if (sid == nullptr || sid->empty()) {
        throw ParseError("review " + *rid + ": sentence is missing the id attribute");
      }
      if (!sentence_ids.insert(*sid).second) {
        throw ParseError("sentence " + *sid + ": duplicate sentence id");
      }
      Sentence sentence;
      sentence.id = *sid;
      const xml::Element* text_el = single_child(sentence_el, "text");
      if (text_el == nullptr || !text_el->children.empty()) {
        throw ParseError("sentence " + *sid + ": expected exactly one <text> element with character data");
      }
      sentence.text = text_el->text;
      if (sentence.text.empty()) {
        throw ParseError("sentence " + *sid + ": empty text");
      }
      for (const auto& child : sentence_el.children) {
        if (child.name == "text") continue;
        if (child.name != "Opinions") {
          throw ParseError("sentence " + *sid + ": unexpected element <" + child.name + ">");
        }
        for (const auto& op_el : child.children) {
          if (op_el.name != "Opinion") {
            throw ParseError("sentence " + *sid + ": unexpected element <" + op_el.name +
                             "> under Opinions");
          }
          sentence.opinions.push_back(parse_opinion(op_el, sentence));
        }
      }
      review.sentences.push_back(std::move(sentence));
    }
    ds.reviews.push_back(std::move(review));
  }
  return ds;
}

std::string serialize_semeval(const Dataset& ds) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (ds.reviews.empty()) {
    out += "<Reviews/>\n";
    return out;
  }
  out += "<Reviews>\n";
  for (const auto& review : ds.reviews) {
    out += "  <Review rid=\"" + xml::escape_attribute(review.id) + "\">\n";
    if (review.sentences.empty()) {
      out += "    <sentences/>\n";
    } else {
      out += "    <sentences>\n";
      for (const auto& sentence : review.sentences) {
        out += "      <sentence id=\"" + xml::escape_attribute(sentence.id) + "\">\n";
        out += "        <text>" + xml::escape_text(sentence.text) + "</text>\n";
        if (!sentence.opinions.empty()) {
          out += "        <Opinions>\n";
          for (const auto& op : sentence.opinions) {
            out += "          <Opinion target=\"";
            out += op.target ? xml::escape_attribute(*op.target) : "NULL";
            out += "\" category=\"" + xml::escape_attribute(op.category.str()) + "\"";
            out += " polarity=\"" + std::string(to_string(op.polarity)) + "\"";
            if (op.span) {
              out += " from=\"" + std::to_string(op.span->start) + "\"";
              out += " to=\"" + std::to_string(op.span->end) + "\"";
            }
            out += "/>\n";
          }
          out += "        </Opinions>\n";
        }
        out += "      </sentence>\n";
      }
      out += "    </sentences>\n";
    }
    out += "  </Review>\n";
  }
  out += "</Reviews>\n";
  return out;
}

}  // namespace absa::corpus
