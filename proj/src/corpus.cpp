#include "absa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "absa/errors.hpp"
#include "absa/knowledge.hpp"
#include "absa/rng.hpp"
#include "absa/utf8.hpp"

namespace absa::corpus {

Polarity parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  if (s == "neutral") return Polarity::neutral;
  throw ParseError("unknown polarity '" + std::string(s) + "'");
}

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::positive:
      return "positive";
    case Polarity::negative:
      return "negative";
    case Polarity::neutral:
      return "neutral";
  }
  return "neutral";
}

Category Category::parse(std::string_view s) {
  const auto hash = s.find('#');
  if (hash == std::string_view::npos || s.find('#', hash + 1) != std::string_view::npos) {
    throw ParseError("malformed category '" + std::string(s) + "': expected ENTITY#ATTRIBUTE");
  }
  Category c{std::string(s.substr(0, hash)), std::string(s.substr(hash + 1))};
  for (const std::string* part : {&c.entity, &c.attribute}) {
    if (part->empty()) throw ParseError("malformed category '" + std::string(s) + "': empty part");
    for (char ch : *part) {
      if (!((ch >= 'A' && ch <= 'Z') || ch == '_')) {
        throw ParseError("malformed category '" + std::string(s) + "': parts are uppercase ASCII and '_'");
      }
    }
  }
  return c;
}

Domain Domain::parse(std::string_view s) {
  if (s.empty()) throw ParseError("domain name must be nonempty");
  return Domain{std::string(s)};
}

std::size_t Dataset::sentence_count() const {
  std::size_t n = 0;
  for (const auto& r : reviews) n += r.sentences.size();
  return n;
}

std::size_t Dataset::opinion_count() const {
  std::size_t n = 0;
  for (const auto& r : reviews) {
    for (const auto& s : r.sentences) n += s.opinions.size();
  }
  return n;
}

void validate(const Dataset& ds) {
  if (ds.domain.name.empty()) throw ValidationError("dataset domain name is empty");
  std::set<std::string> review_ids;
  std::set<std::string> sentence_ids;
  for (const auto& review : ds.reviews) {
    if (!review_ids.insert(review.id).second) {
      throw ValidationError("review " + review.id + ": duplicate review id");
    }
    for (const auto& sentence : review.sentences) {
      const std::string where = "sentence " + sentence.id + ": ";
      if (!sentence_ids.insert(sentence.id).second) throw ValidationError(where + "duplicate sentence id");
      if (sentence.text.empty()) throw ValidationError(where + "empty text");
      const std::size_t len = utf8::length(sentence.text);
      for (const auto& op : sentence.opinions) {
        if (op.target.has_value() != op.span.has_value()) {
          throw ValidationError(where + "opinion target and span must be present together");
        }
        if (!op.target) continue;
        if (op.target->empty() || *op.target == "NULL") {
          throw ValidationError(where + "explicit opinion target may not be empty or NULL");
        }
        if (op.span->start >= op.span->end || op.span->end > len) {
          throw ValidationError(where + "invalid span (from=" + std::to_string(op.span->start) +
                                ", to=" + std::to_string(op.span->end) + ")");
        }
        if (utf8::slice(sentence.text, op.span->start, op.span->end) != *op.target) {
          throw ValidationError(where + "span/target mismatch: text slice is '" +
                                utf8::slice(sentence.text, op.span->start, op.span->end) + "', target is '" +
                                *op.target + "'");
        }
      }
    }
  }
}

// ---- tokenize ----

namespace {

bool is_ascii_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char32_t c) {
  return c < 0x80 && std::string_view("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~").find(static_cast<char>(c)) !=
                         std::string_view::npos;
}

char32_t fold(char32_t c) { return (c >= 'A' && c <= 'Z') ? c + 32 : c; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  const std::vector<char32_t> cps = utf8::decode(text);
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (is_ascii_space(cps[i])) {
      ++i;
      continue;
    }
    if (is_ascii_punct(cps[i])) {
      std::string t;
      utf8::append(t, cps[i]);
      tokens.push_back(Token{std::move(t), Span{i, i + 1}});
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string t;
    while (i < cps.size() && !is_ascii_space(cps[i]) && !is_ascii_punct(cps[i])) {
      utf8::append(t, fold(cps[i]));
      ++i;
    }
    tokens.push_back(Token{std::move(t), Span{start, i}});
  }
  return tokens;
}

// ---- rebuilding text under span-indexed replacements ----

namespace {

struct Replacement {
  Span region;       // scalar offsets into the old text
  std::string text;  // replacement, UTF-8
};

struct Rebuild {
  std::string text;
  // old start, old end, new start, new end per replacement, in order
  std::vector<std::array<std::size_t, 4>> regions;

  std::size_t map(std::size_t old_pos, bool is_end) const {
    std::ptrdiff_t delta = 0;
    for (const auto& [os, oe, ns, ne] : regions) {
      if (old_pos <= os) break;
      if (old_pos < oe) return is_end ? ne : ns;
      delta += static_cast<std::ptrdiff_t>(ne - ns) - static_cast<std::ptrdiff_t>(oe - os);
    }
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(old_pos) + delta);
  }
};

// Replacements must be sorted by start and pairwise non-overlapping.
Rebuild apply_replacements(std::string_view text, const std::vector<Replacement>& reps) {
  const std::vector<char32_t> cps = utf8::decode(text);
  Rebuild out;
  std::size_t cursor = 0;
  std::vector<char32_t> built;
  built.reserve(cps.size());
  for (const auto& rep : reps) {
    for (std::size_t i = cursor; i < rep.region.start; ++i) built.push_back(cps[i]);
    const std::size_t new_start = built.size();
    for (char32_t c : utf8::decode(rep.text)) built.push_back(c);
    out.regions.push_back({rep.region.start, rep.region.end, new_start, built.size()});
    cursor = rep.region.end;
  }
  for (std::size_t i = cursor; i < cps.size(); ++i) built.push_back(cps[i]);
  out.text = utf8::encode(built);
  return out;
}

// Remaps every opinion through the rebuild and re-slices targets so the
// span/target invariant holds on the new text.
void remap_opinions(Sentence& sentence, const Rebuild& rb) {
  for (auto& op : sentence.opinions) {
    if (!op.span) continue;
    const Span ns{rb.map(op.span->start, false), rb.map(op.span->end, true)};
    op.span = ns;
    op.target = utf8::slice(sentence.text, ns.start, ns.end);
  }
}

bool overlaps_any_opinion(const Span& region, const Sentence& s) {
  for (const auto& op : s.opinions) {
    if (op.span && op.span->overlaps(region)) return true;
  }
  return false;
}

}  // namespace

// ---- mask ----

Dataset mask_tokens(const Dataset& ds, double fraction, std::uint64_t seed, bool include_aspect_tokens) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ValidationError("mask fraction must lie in [0,1]");
  }
  Dataset out = ds;
  Rng rng(derive_seed(seed, "mask"));
  for (auto& review : out.reviews) {
    for (auto& sentence : review.sentences) {
      const std::vector<Token> tokens = tokenize(sentence.text);
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (include_aspect_tokens || !overlaps_any_opinion(tokens[i].span, sentence)) eligible.push_back(i);
      }
      const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(eligible.size())));
      if (k == 0) continue;
      rng.shuffle(eligible);
      eligible.resize(k);
      std::sort(eligible.begin(), eligible.end());
      std::vector<Replacement> reps;
      reps.reserve(k);
      for (std::size_t idx : eligible) reps.push_back({tokens[idx].span, "[MASK]"});
      const Rebuild rb = apply_replacements(sentence.text, reps);
      sentence.text = rb.text;
      remap_opinions(sentence, rb);
    }
  }
  validate(out);
  return out;
}

// ---- augment ----

namespace {

Sentence drop_context_token(const Sentence& in, Rng& rng) {
  const std::vector<Token> tokens = tokenize(in.text);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!overlaps_any_opinion(tokens[i].span, in)) eligible.push_back(i);
  }
  if (eligible.empty() || tokens.size() < 2) return in;
  const std::size_t pick = eligible[rng.below(static_cast<std::uint32_t>(eligible.size()))];
  const std::vector<char32_t> cps = utf8::decode(in.text);
  Span region = tokens[pick].span;
  // Consume adjacent whitespace so the removal leaves no double gap.
  while (region.end < cps.size() && is_ascii_space(cps[region.end]) &&
         !overlaps_any_opinion(Span{region.start, region.end + 1}, in)) {
    ++region.end;
  }
  if (region.end == cps.size()) {
    while (region.start > 0 && is_ascii_space(cps[region.start - 1]) &&
           !overlaps_any_opinion(Span{region.start - 1, region.end}, in)) {
      --region.start;
    }
  }
  const Rebuild rb = apply_replacements(in.text, {{region, ""}});
  if (rb.text.empty()) return in;
  Sentence out = in;
  out.text = rb.text;
  remap_opinions(out, rb);
  return out;
}

Sentence swap_adjacent_tokens(const Sentence& in, Rng& rng) {
  const std::vector<Token> tokens = tokenize(in.text);
  std::vector<std::size_t> pairs;  // index of the left token
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const Span region{tokens[i].span.start, tokens[i + 1].span.end};
    if (!overlaps_any_opinion(region, in)) pairs.push_back(i);
  }
  if (pairs.empty()) return in;
  const std::size_t i = pairs[rng.below(static_cast<std::uint32_t>(pairs.size()))];
  const Span region{tokens[i].span.start, tokens[i + 1].span.end};
  const std::string left = utf8::slice(in.text, tokens[i].span.start, tokens[i].span.end);
  const std::string gap = utf8::slice(in.text, tokens[i].span.end, tokens[i + 1].span.start);
  const std::string right = utf8::slice(in.text, tokens[i + 1].span.start, tokens[i + 1].span.end);
  const Rebuild rb = apply_replacements(in.text, {{region, right + gap + left}});
  Sentence out = in;
  out.text = rb.text;
  remap_opinions(out, rb);
  return out;
}

Sentence substitute_aspect(const Sentence& in, Rng& rng, const knowledge::KnowledgeSource& ks,
                           const Domain& domain) {
  struct Candidate {
    std::size_t opinion_index;
    std::vector<std::string> peers;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < in.opinions.size(); ++i) {
    const auto& op = in.opinions[i];
    if (!op.span || !op.target) continue;
    const auto cat = ks.resolve_term(*op.target, domain);
    if (!cat) continue;
    std::vector<std::string> peers;
    for (const auto& entry : ks.lexicon()) {
      if (entry.domain == domain && entry.category == *cat && entry.term != utf8::lower_ascii(*op.target)) {
        peers.push_back(entry.term);
      }
    }
    if (!peers.empty()) candidates.push_back({i, std::move(peers)});
  }
  if (candidates.empty()) return in;
  const auto& chosen = candidates[rng.below(static_cast<std::uint32_t>(candidates.size()))];
  const std::string& peer = chosen.peers[rng.below(static_cast<std::uint32_t>(chosen.peers.size()))];
  const Span region = *in.opinions[chosen.opinion_index].span;
  const Rebuild rb = apply_replacements(in.text, {{region, peer}});
  Sentence out = in;
  out.text = rb.text;
  remap_opinions(out, rb);
  return out;
}

}  // namespace

Dataset augment(const Dataset& ds, std::uint64_t seed, int ops_per_sentence,
                const knowledge::KnowledgeSource& ks) {
  if (ops_per_sentence < 0) throw ValidationError("ops_per_sentence must be >= 0");
  static constexpr std::array<std::string_view, 3> kTags = {"drop", "swap", "subst"};
  const int count = std::min(ops_per_sentence, 3);
  Dataset out = ds;
  Rng rng(derive_seed(seed, "augment"));
  for (const auto& review : ds.reviews) {
    for (int s = 0; s < count; ++s) {
      Review synthetic;
      synthetic.id = review.id + "-aug-" + std::string(kTags[s]);
      for (const auto& sentence : review.sentences) {
        Sentence transformed;
        switch (s) {
          case 0:
            transformed = drop_context_token(sentence, rng);
            break;
          case 1:
            transformed = swap_adjacent_tokens(sentence, rng);
            break;
          default:
            transformed = substitute_aspect(sentence, rng, ks, ds.domain);
        }
        transformed.id = sentence.id + "-aug-" + std::string(kTags[s]);
        synthetic.sentences.push_back(std::move(transformed));
      }
      out.reviews.push_back(std::move(synthetic));
    }
  }
  validate(out);
  return out;
}

// ---- split ----

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (ds.reviews.size() < 2) throw ValidationError("split needs at least 2 reviews");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must lie in (0,1)");
  }
  const std::size_t n = ds.reviews.size();
  const auto train_n =
      static_cast<std::size_t>(std::ceil(static_cast<double>(n) * train_fraction));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());
  // Document order within each part.
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  Dataset train{ds.domain, {}};
  Dataset test{ds.domain, {}};
  for (std::size_t i : train_idx) train.reviews.push_back(ds.reviews[i]);
  for (std::size_t i : test_idx) test.reviews.push_back(ds.reviews[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace absa::corpus
