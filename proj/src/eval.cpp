#include "absa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include <json.hpp>

#include "absa/errors.hpp"
#include "absa/llm_client.hpp"
#include "absa/rng.hpp"
#include "absa/sha256.hpp"
#include "absa/utf8.hpp"

namespace absa::eval {

using json = nlohmann::json;

// ---- polarity metrics ----

namespace {

std::map<OpinionKey, corpus::Polarity> gold_by_key(const corpus::Dataset& gold) {
  std::map<OpinionKey, corpus::Polarity> out;
  for (const auto& review : gold.reviews) {
    for (const auto& sentence : review.sentences) {
      for (std::size_t i = 0; i < sentence.opinions.size(); ++i) {
        out.emplace(OpinionKey{sentence.id, static_cast<int>(i)}, sentence.opinions[i].polarity);
      }
    }
  }
  return out;
}

std::map<OpinionKey, corpus::Polarity> preds_by_key(const PolarityPredictions& preds,
                                                    const std::map<OpinionKey, corpus::Polarity>& gold) {
  std::map<OpinionKey, corpus::Polarity> out;
  for (const auto& [key, polarity] : preds) {
    if (gold.find(key) == gold.end()) {
      throw ValidationError("prediction for unknown opinion (sentence " + key.sentence_id + ", index " +
                            std::to_string(key.opinion_index) + ")");
    }
    if (!out.emplace(key, polarity).second) {
      throw ValidationError("duplicate prediction for opinion (sentence " + key.sentence_id +
                            ", index " + std::to_string(key.opinion_index) + ")");
    }
  }
  return out;
}

}  // namespace

double polarity_accuracy(const PolarityPredictions& preds, const corpus::Dataset& gold) {
  const auto gold_map = gold_by_key(gold);
  const auto pred_map = preds_by_key(preds, gold_map);
  if (gold_map.empty()) return 1.0;
  std::size_t correct = 0;
  for (const auto& [key, label] : gold_map) {
    const auto it = pred_map.find(key);
    if (it != pred_map.end() && it->second == label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold_map.size());
}

double macro_f1(const PolarityPredictions& preds, const corpus::Dataset& gold) {
  const auto gold_map = gold_by_key(gold);
  const auto pred_map = preds_by_key(preds, gold_map);
  std::array<long, 3> tp{}, fp{}, fn{};
  std::array<bool, 3> present{};
  for (const auto& [key, label] : gold_map) {
    const int g = corpus::polarity_index(label);
    present[static_cast<std::size_t>(g)] = true;
    const auto it = pred_map.find(key);
    if (it == pred_map.end()) {
      ++fn[static_cast<std::size_t>(g)];
      continue;
    }
    const int p = corpus::polarity_index(it->second);
    present[static_cast<std::size_t>(p)] = true;
    if (p == g) {
      ++tp[static_cast<std::size_t>(g)];
    } else {
      ++fn[static_cast<std::size_t>(g)];
      ++fp[static_cast<std::size_t>(p)];
    }
  }
  double sum = 0.0;
  int classes = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    if (!present[c]) continue;
    ++classes;
    const double precision = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
    sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return classes == 0 ? 1.0 : sum / classes;
}

// ---- aspect span matching ----

namespace {

bool spans_match(const corpus::Span& a, const corpus::Span& b, SpanMatch mode) {
  return mode == SpanMatch::exact ? a == b : a.overlaps(b);
}

// Greedy left-to-right matching; returns (pred index -> gold index).
std::vector<std::pair<std::size_t, std::size_t>> match_spans(const std::vector<corpus::Span>& preds,
                                                             const std::vector<corpus::Span>& gold,
                                                             SpanMatch mode) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> used(gold.size(), false);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (used[g] || !spans_match(preds[p], gold[g], mode)) continue;
      used[g] = true;
      pairs.emplace_back(p, g);
      break;
    }
  }
  return pairs;
}

}  // namespace

Prf aspect_prf(const std::map<std::string, std::vector<corpus::Span>>& pred_spans,
               const corpus::Dataset& gold, SpanMatch mode) {
  std::size_t total_pred = 0, total_gold = 0, matches = 0;
  for (const auto& [id, spans] : pred_spans) total_pred += spans.size();
  for (const auto& review : gold.reviews) {
    for (const auto& sentence : review.sentences) {
      std::vector<corpus::Span> gold_spans;
      for (const auto& op : sentence.opinions) {
        if (op.span) gold_spans.push_back(*op.span);
      }
      total_gold += gold_spans.size();
      const auto it = pred_spans.find(sentence.id);
      if (it == pred_spans.end()) continue;
      matches += match_spans(it->second, gold_spans, mode).size();
    }
  }
  Prf out;
  if (total_pred == 0 && total_gold == 0) return {1.0, 1.0, 1.0};
  out.precision = total_pred > 0 ? static_cast<double>(matches) / total_pred : 0.0;
  out.recall = total_gold > 0 ? static_cast<double>(matches) / total_gold : 0.0;
  out.f1 = out.precision + out.recall > 0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

// ---- baselines ----

const std::vector<BaselineRow>& table1_baselines() {
  static const std::vector<BaselineRow> rows = {
      {"Deep Memory Network", "laptop", 72.21},
      {"Deep Memory Network", "restaurant", 80.95},
      {"Normal 12 Layer BERT Fine-Tuned", "laptop", 82.3},
      {"Normal 12 Layer BERT Fine-Tuned", "restaurant", 81.5},
      {"LLMs for Aspect and 12 Layer BERT (Trained with Laptop)", "laptop", 92.1},
      {"LLMs for Aspect and 12 Layer BERT (Trained with Laptop)", "restaurant", 88.9},
      {"LLMs for Aspect and 12 Layer BERT (Trained with Restaurant)", "laptop", 90.4},
      {"LLMs for Aspect and 12 Layer BERT (Trained with Restaurant)", "restaurant", 91.4},
      {"LLMs for Aspect and 12 Layer BERT (Trained with Laptop and Restaurant)", "laptop", 91.1},
      {"LLMs for Aspect and 12 Layer BERT (Trained with Laptop and Restaurant)", "restaurant", 90.6},
  };
  return rows;
}

// ---- classifier plumbing ----

// Snaps a span outward to token boundaries so windowed featurization can
// consume extractor spans that cover partial tokens.
std::optional<corpus::Span> snap_span_to_tokens(const corpus::Sentence& sentence,
                                                const corpus::Span& span) {
  const auto tokens = corpus::tokenize(sentence.text);
  std::optional<corpus::Span> out;
  for (const auto& token : tokens) {
    if (!token.span.overlaps(span)) continue;
    if (!out) {
      out = token.span;
    } else {
      out->end = token.span.end;
    }
  }
  return out;
}

TrainingSetup build_training_setup(const corpus::Dataset& train, int window) {
  TrainingSetup setup;
  for (const auto& review : train.reviews) {
    for (const auto& sentence : review.sentences) {
      for (const auto& op : sentence.opinions) setup.aspects.emplace_back(&sentence, &op);
    }
  }
  if (setup.aspects.empty()) {
    throw ValidationError("train corpus for domain " + train.domain.name + " has no opinions to train on");
  }
  std::vector<std::vector<std::string>> docs;
  for (const auto& [sentence, op] : setup.aspects) {
    docs.push_back(sentiment::context_tokens(*sentence, op->span, window));
  }
  setup.vocab = sentiment::Vocabulary::build(docs);
  for (const auto& [sentence, op] : setup.aspects) {
    setup.examples.push_back(
        {sentiment::featurize(*sentence, op->span, window, setup.vocab), op->polarity});
  }
  return setup;
}

encoder::EncoderInput encoder_input_for(const corpus::Sentence& sentence,
                                        const std::optional<corpus::Span>& span, int window,
                                        const sentiment::Vocabulary& vocab,
                                        const encoder::EncoderConfig& cfg) {
  const auto cw = sentiment::context_window(sentence, span, window);
  encoder::EncoderInput x;
  x.token_ids.push_back(0);
  x.segment_ids.push_back(0);
  for (std::size_t i = 0; i < cw.tokens.size(); ++i) {
    if (x.token_ids.size() >= static_cast<std::size_t>(cfg.max_len)) break;
    const auto idx = vocab.index_of(cw.tokens[i].text);
    x.token_ids.push_back(idx ? *idx + 2 : 1);
    x.segment_ids.push_back(cw.is_aspect[i] ? 1 : 0);
  }
  return x;
}

namespace {

struct TrainedClassifier {
  std::string name;
  std::function<corpus::Polarity(const corpus::Sentence&, const std::optional<corpus::Span>&)> classify;
};

TrainedClassifier train_classifier(const MatrixConfig& cfg, const corpus::Dataset& train) {
  TrainingSetup setup = build_training_setup(train, cfg.window);
  sentiment::Vocabulary& vocab = setup.vocab;
  const std::vector<sentiment::LabeledExample>& examples = setup.examples;

  if (cfg.classifier == "nb" || cfg.classifier == "lr") {
    if (cfg.classifier == "nb") {
      auto model = std::make_shared<sentiment::NBModel>(sentiment::train_nb(examples, cfg.nb_alpha, vocab));
      return {"nb", [model, window = cfg.window](const corpus::Sentence& s,
                                                 const std::optional<corpus::Span>& span) {
                return sentiment::predict(*model, sentiment::featurize(s, span, window, model->vocab)).label;
              }};
    }
    sentiment::LrHyper hyper = cfg.lr_hyper;
    hyper.seed = derive_seed(cfg.seed, "train-lr:" + train.domain.name);
    auto model =
        std::make_shared<sentiment::LRModel>(sentiment::train_lr(examples, hyper, vocab).model);
    return {"lr", [model, window = cfg.window](const corpus::Sentence& s,
                                               const std::optional<corpus::Span>& span) {
              return sentiment::predict(*model, sentiment::featurize(s, span, window, model->vocab)).label;
            }};
  }

  if (cfg.classifier == "encoder") {
    encoder::EncoderConfig ecfg;
    ecfg.d_model = cfg.encoder_d_model;
    ecfg.d_k = cfg.encoder_d_model;
    ecfg.n_layers = cfg.encoder_n_layers;
    ecfg.d_ff = cfg.encoder_d_ff;
    ecfg.max_len = cfg.encoder_max_len;
    ecfg.vocab_size = vocab.size() + 2;
    std::vector<encoder::TrainingExample> encoder_examples;
    for (const auto& [sentence, op] : setup.aspects) {
      encoder_examples.emplace_back(encoder_input_for(*sentence, op->span, cfg.window, vocab, ecfg),
                                    op->polarity);
    }
    encoder::EncoderHyper hyper = cfg.encoder_hyper;
    hyper.seed = derive_seed(cfg.seed, "train-encoder:" + train.domain.name);
    auto params = std::make_shared<encoder::EncoderParams>(
        encoder::train_encoder(encoder_examples, ecfg, hyper).params);
    auto shared_vocab = std::make_shared<sentiment::Vocabulary>(std::move(vocab));
    return {"encoder",
            [params, shared_vocab, ecfg, window = cfg.window](const corpus::Sentence& s,
                                                              const std::optional<corpus::Span>& span) {
              const auto x = encoder_input_for(s, span, window, *shared_vocab, ecfg);
              const auto logits = encoder::encoder_forward(*params, ecfg, x).logits;
              int best = 0;
              for (int c = 1; c < 3; ++c) {
                if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
              }
              return corpus::kPolarityOrder[static_cast<std::size_t>(best)];
            }};
  }

  throw ValidationError("unknown classifier '" + cfg.classifier + "'");
}

// ---- extraction over a test corpus ----

struct ExtractionOutput {
  std::map<std::string, std::vector<extract::AspectPrediction>> by_sentence;
  long total = 0;
};

ExtractionOutput extract_corpus(const MatrixConfig& cfg, const knowledge::KnowledgeSource& ks,
                                const corpus::Domain& train_domain, const corpus::Dataset& test,
                                llm::Client* client) {
  ExtractionOutput out;
  for (const auto& review : test.reviews) {
    for (const auto& sentence : review.sentences) {
      std::vector<extract::AspectPrediction> predictions;
      if (cfg.extractor == "lexicon") {
        predictions = extract::extract_lexicon(sentence, ks, train_domain, cfg.max_ngram);
      } else if (cfg.extractor == "mock") {
        predictions = extract::extract_mock(sentence, *cfg.mock_fixture);
      } else if (cfg.extractor == "llm") {
        predictions = extract::extract_llm(sentence, ks, train_domain, *cfg.prompt_template, *client,
                                           cfg.llm);
      } else {
        throw ValidationError("unknown extractor '" + cfg.extractor + "'");
      }
      // Cross-domain: translate categories into the test domain's scheme;
      // predictions that cannot be expressed there are dropped.
      if (train_domain != test.domain) {
        std::vector<extract::AspectPrediction> kept;
        for (auto& p : predictions) {
          if (p.category) {
            const auto mapped = ks.map_category(*p.category, test.domain);
            if (!mapped) continue;
            p.category = *mapped;
          }
          kept.push_back(std::move(p));
        }
        predictions = std::move(kept);
      }
      out.total += static_cast<long>(predictions.size());
      out.by_sentence.emplace(sentence.id, std::move(predictions));
    }
  }
  return out;
}

// Gold view with only spanned opinions; joint mode scores against this.
corpus::Dataset spanned_view(const corpus::Dataset& ds) {
  corpus::Dataset out = ds;
  for (auto& review : out.reviews) {
    for (auto& sentence : review.sentences) {
      std::vector<corpus::Opinion> kept;
      for (auto& op : sentence.opinions) {
        if (op.span) kept.push_back(op);
      }
      sentence.opinions = std::move(kept);
    }
  }
  return out;
}

std::vector<std::string> modes_of(const std::string& mode) {
  if (mode == "both") return {"gold-aspect", "joint"};
  if (mode == "gold-aspect" || mode == "joint") return {mode};
  throw ValidationError("unknown evaluation mode '" + mode + "'");
}

std::vector<RunResult> evaluate_cell(const MatrixConfig& cfg, const knowledge::KnowledgeSource& ks,
                                     const TrainedClassifier& classifier,
                                     const corpus::Domain& train_domain, const corpus::Dataset& test,
                                     llm::Client* client, const std::string& mode_setting) {
  const ExtractionOutput extraction = extract_corpus(cfg, ks, train_domain, test, client);
  std::map<std::string, std::vector<corpus::Span>> pred_spans;
  for (const auto& [id, predictions] : extraction.by_sentence) {
    auto& spans = pred_spans[id];
    for (const auto& p : predictions) {
      if (p.span) spans.push_back(*p.span);
    }
  }
  const Prf prf = aspect_prf(pred_spans, test, cfg.span_match);

  std::vector<RunResult> results;
  for (const std::string& mode : modes_of(mode_setting)) {
    RunResult r;
    r.train_domain = train_domain.name;
    r.test_domain = test.domain.name;
    r.extractor = cfg.extractor;
    r.classifier = classifier.name;
    r.mode = mode;
    r.aspect_precision = prf.precision;
    r.aspect_recall = prf.recall;
    r.aspect_f1 = prf.f1;
    r.n_predicted = extraction.total;

    if (mode == "gold-aspect") {
      PolarityPredictions preds;
      for (const auto& review : test.reviews) {
        for (const auto& sentence : review.sentences) {
          for (std::size_t i = 0; i < sentence.opinions.size(); ++i) {
            preds.emplace_back(OpinionKey{sentence.id, static_cast<int>(i)},
                               classifier.classify(sentence, sentence.opinions[i].span));
          }
        }
      }
      r.n_gold = static_cast<long>(test.opinion_count());
      r.accuracy = polarity_accuracy(preds, test);
      r.macro_f1 = eval::macro_f1(preds, test);
    } else {
      const corpus::Dataset view = spanned_view(test);
      PolarityPredictions preds;
      for (const auto& review : view.reviews) {
        for (const auto& sentence : review.sentences) {
          const auto it = extraction.by_sentence.find(sentence.id);
          if (it == extraction.by_sentence.end()) continue;
          std::vector<corpus::Span> spans;
          for (const auto& p : it->second) {
            if (p.span) spans.push_back(*p.span);
          }
          std::vector<corpus::Span> gold_spans;
          for (const auto& op : sentence.opinions) gold_spans.push_back(*op.span);
          for (const auto& [pi, gi] : match_spans(spans, gold_spans, cfg.span_match)) {
            const auto snapped = snap_span_to_tokens(sentence, spans[pi]);
            preds.emplace_back(OpinionKey{sentence.id, static_cast<int>(gi)},
                               classifier.classify(sentence, snapped));
          }
        }
      }
      r.n_gold = static_cast<long>(view.opinion_count());
      r.accuracy = polarity_accuracy(preds, view);
      r.macro_f1 = eval::macro_f1(preds, view);
    }
    results.push_back(std::move(r));
  }
  return results;
}

void validate_matrix_config(const MatrixConfig& cfg) {
  if (cfg.corpora.empty()) throw ValidationError("matrix config: no corpora");
  std::set<std::string> domains;
  for (const auto& ds : cfg.corpora) {
    corpus::validate(ds);
    if (!domains.insert(ds.domain.name).second) {
      throw ValidationError("matrix config: duplicate domain " + ds.domain.name);
    }
  }
  if (cfg.extractor == "mock" && !cfg.mock_fixture) {
    throw ValidationError("matrix config: mock extractor needs a fixture");
  }
  if (cfg.extractor == "llm") {
    if (!cfg.prompt_template) throw ValidationError("matrix config: llm extractor needs a prompt template");
    if (cfg.llm.endpoint_url.empty()) throw ValidationError("matrix config: llm extractor needs an endpoint");
  }
  modes_of(cfg.mode);
  if (cfg.probe_mode != "gold-aspect" && cfg.probe_mode != "joint") {
    throw ValidationError("matrix config: probe mode must be gold-aspect or joint");
  }
  if (cfg.window < 0) throw ValidationError("matrix config: window must be >= 0");
}

std::string config_digest(const MatrixConfig& cfg) {
  json j;
  json domains = json::array();
  for (const auto& ds : cfg.corpora) domains.push_back(ds.domain.name);
  j["domains"] = domains;
  j["extractor"] = cfg.extractor;
  j["classifier"] = cfg.classifier;
  j["mode"] = cfg.mode;
  j["window"] = cfg.window;
  j["span_match"] = cfg.span_match == SpanMatch::exact ? "exact" : "overlap";
  j["use_category_map"] = cfg.use_category_map;
  j["max_ngram"] = cfg.max_ngram;
  j["nb_alpha"] = cfg.nb_alpha;
  j["lr"] = {{"learning_rate", cfg.lr_hyper.learning_rate},
             {"epochs", cfg.lr_hyper.epochs},
             {"batch_size", cfg.lr_hyper.batch_size},
             {"l2", cfg.lr_hyper.l2}};
  j["encoder"] = {{"d_model", cfg.encoder_d_model},
                  {"n_layers", cfg.encoder_n_layers},
                  {"d_ff", cfg.encoder_d_ff},
                  {"max_len", cfg.encoder_max_len},
                  {"learning_rate", cfg.encoder_hyper.learning_rate},
                  {"epochs", cfg.encoder_hyper.epochs}};
  j["seed"] = cfg.seed;
  return sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace

EvalReport run_matrix(const MatrixConfig& cfg) {
  validate_matrix_config(cfg);
  std::vector<const corpus::Dataset*> corpora;
  for (const auto& ds : cfg.corpora) corpora.push_back(&ds);
  std::sort(corpora.begin(), corpora.end(),
            [](const auto* a, const auto* b) { return a->domain.name < b->domain.name; });

  const knowledge::KnowledgeSource ks = cfg.use_category_map ? cfg.ks : cfg.ks.without_category_map();
  std::optional<llm::Client> client;
  if (cfg.extractor == "llm") client.emplace(cfg.cache_dir);

  EvalReport report;
  report.baselines = table1_baselines();
  report.config_digest = config_digest(cfg);
  report.seed = cfg.seed;
  for (const auto* train : corpora) {
    const TrainedClassifier classifier = train_classifier(cfg, *train);
    for (const auto* test : corpora) {
      try {
        auto results = evaluate_cell(cfg, ks, classifier, train->domain, *test,
                                     client ? &*client : nullptr, cfg.mode);
        for (auto& r : results) report.runs.push_back(std::move(r));
      } catch (const std::exception& e) {
        throw ValidationError("matrix cell (train=" + train->domain.name +
                              ", test=" + test->domain.name + "): " + e.what());
      }
    }
  }
  return report;
}

std::vector<std::pair<double, RunResult>> mask_probe(const MatrixConfig& cfg,
                                                     std::vector<double> fractions) {
  validate_matrix_config(cfg);
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("mask probe: fraction outside [0,1]");
  }
  std::sort(fractions.begin(), fractions.end());

  std::vector<const corpus::Dataset*> corpora;
  for (const auto& ds : cfg.corpora) corpora.push_back(&ds);
  std::sort(corpora.begin(), corpora.end(),
            [](const auto* a, const auto* b) { return a->domain.name < b->domain.name; });
  const std::string train_name = cfg.probe_train.empty() ? corpora.front()->domain.name : cfg.probe_train;
  const std::string test_name = cfg.probe_test.empty() ? corpora.back()->domain.name : cfg.probe_test;
  const corpus::Dataset* train = nullptr;
  const corpus::Dataset* test = nullptr;
  for (const auto* ds : corpora) {
    if (ds->domain.name == train_name) train = ds;
    if (ds->domain.name == test_name) test = ds;
  }
  if (train == nullptr) throw ValidationError("mask probe: unknown train domain " + train_name);
  if (test == nullptr) throw ValidationError("mask probe: unknown test domain " + test_name);

  const knowledge::KnowledgeSource ks = cfg.use_category_map ? cfg.ks : cfg.ks.without_category_map();
  std::optional<llm::Client> client;
  if (cfg.extractor == "llm") client.emplace(cfg.cache_dir);
  const TrainedClassifier classifier = train_classifier(cfg, *train);

  std::vector<std::pair<double, RunResult>> out;
  for (double fraction : fractions) {
    const corpus::Dataset masked =
        corpus::mask_tokens(*test, fraction, cfg.seed, cfg.probe_include_aspect_tokens);
    try {
      auto results = evaluate_cell(cfg, ks, classifier, train->domain, masked,
                                   client ? &*client : nullptr, cfg.probe_mode);
      out.emplace_back(fraction, std::move(results.front()));
    } catch (const std::exception& e) {
      throw ValidationError("mask probe (train=" + train->domain.name + ", test=" + test->domain.name +
                            ", fraction=" + std::to_string(fraction) + "): " + e.what());
    }
  }
  return out;
}

// ---- report emission ----

namespace {

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

json run_to_json(const RunResult& r) {
  json j;
  j["train_domain"] = r.train_domain;
  j["test_domain"] = r.test_domain;
  j["extractor"] = r.extractor;
  j["classifier"] = r.classifier;
  j["mode"] = r.mode;
  j["accuracy"] = fixed4(r.accuracy);
  j["macro_f1"] = fixed4(r.macro_f1);
  j["aspect_precision"] = fixed4(r.aspect_precision);
  j["aspect_recall"] = fixed4(r.aspect_recall);
  j["aspect_f1"] = fixed4(r.aspect_f1);
  j["n_gold"] = r.n_gold;
  j["n_predicted"] = r.n_predicted;
  return j;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string emit_table(const EvalReport& report);

}  // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    json doc;
    doc["format_version"] = 1;
    doc["seed"] = report.seed;
    doc["config_digest"] = report.config_digest;
    doc["meta"] = {{"accuracy_granularity", "opinion"}};
    doc["runs"] = json::array();
    for (const auto& r : report.runs) doc["runs"].push_back(run_to_json(r));
    doc["baselines"] = json::array();
    for (const auto& b : report.baselines) {
      doc["baselines"].push_back(
          {{"label", b.label}, {"domain", b.domain}, {"accuracy", fixed2(b.accuracy)}});
    }
    return doc.dump(2) + "\n";
  }

  if (format == ReportFormat::csv) {
    std::string out =
        "train_domain,test_domain,extractor,classifier,mode,accuracy,macro_f1,aspect_p,aspect_r,aspect_f1\n";
    for (const auto& r : report.runs) {
      out += r.train_domain + "," + r.test_domain + "," + r.extractor + "," + r.classifier + "," +
             r.mode + "," + fixed4(r.accuracy) + "," + fixed4(r.macro_f1) + "," +
             fixed4(r.aspect_precision) + "," + fixed4(r.aspect_recall) + "," + fixed4(r.aspect_f1) +
             "\n";
    }
    return out;
  }

  if (format == ReportFormat::table) {
    return emit_table(report);
  }
  throw ValidationError("unknown report format");
}

std::string emit_probe_json(const std::vector<std::pair<double, RunResult>>& probe) {
  json doc;
  doc["format_version"] = 1;
  doc["probe"] = json::array();
  for (const auto& [fraction, run] : probe) {
    doc["probe"].push_back({{"fraction", fixed4(fraction)}, {"run", run_to_json(run)}});
  }
  return doc.dump(2) + "\n";
}

namespace {

// Aligned monospace table: baseline block first, then one block per
// (classifier, extractor, train domain, mode) with per-domain rows.
std::string emit_table(const EvalReport& report) {
  constexpr std::size_t kLabelWidth = 56;
  std::string out;
  out += pad_right("Architecture and Details", kLabelWidth) + pad_left("Accuracy", 10) +
         pad_left("Macro-F1", 10) + pad_left("Aspect-F1", 11) + "\n";
  out += std::string(kLabelWidth + 31, '-') + "\n";
  std::string block;
  for (const auto& b : report.baselines) {
    if (b.label != block) {
      block = b.label;
      out += block + " [published baseline]\n";
    }
    out += pad_right("  For " + b.domain, kLabelWidth) + pad_left(fixed2(b.accuracy), 10) + "\n";
  }
  block.clear();
  std::vector<const RunResult*> rows;
  for (const auto& r : report.runs) rows.push_back(&r);
  std::sort(rows.begin(), rows.end(), [](const RunResult* a, const RunResult* b) {
    return std::tie(a->classifier, a->extractor, a->train_domain, a->mode, a->test_domain) <
           std::tie(b->classifier, b->extractor, b->train_domain, b->mode, b->test_domain);
  });
  for (const RunResult* r : rows) {
    const std::string header = r->classifier + " + " + r->extractor + " aspects (trained with " +
                               r->train_domain + "), " + r->mode + " scoring";
    if (header != block) {
      block = header;
      out += header + "\n";
    }
    out += pad_right("  For " + r->test_domain, kLabelWidth) + pad_left(fixed4(r->accuracy), 10) +
           pad_left(fixed4(r->macro_f1), 10) + pad_left(fixed4(r->aspect_f1), 11) + "\n";
  }
  return out;
}

}  // namespace

}  // namespace absa::eval
