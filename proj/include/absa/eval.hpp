#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/encoder.hpp"
#include "absa/extract.hpp"
#include "absa/knowledge.hpp"
#include "absa/sentiment.hpp"

namespace absa::eval {

// Addresses one gold opinion: the owning sentence plus the opinion's
// index within it.
struct OpinionKey {
  std::string sentence_id;
  int opinion_index = 0;
  auto operator<=>(const OpinionKey&) const = default;
};

using PolarityPredictions = std::vector<std::pair<OpinionKey, corpus::Polarity>>;

// Fraction of gold opinions whose predicted polarity matches; gold
// opinions with no prediction count as wrong. Dangling keys are errors.
double polarity_accuracy(const PolarityPredictions& preds, const corpus::Dataset& gold);

// Unweighted mean of per-class F1 over the classes present in gold or
// predictions; zero-denominator classes contribute 0.
double macro_f1(const PolarityPredictions& preds, const corpus::Dataset& gold);

enum class SpanMatch { exact, overlap };

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy left-to-right span matching against the spanned gold opinions.
Prf aspect_prf(const std::map<std::string, std::vector<corpus::Span>>& pred_spans,
               const corpus::Dataset& gold, SpanMatch mode);

struct RunResult {
  std::string train_domain;
  std::string test_domain;
  std::string extractor;
  std::string classifier;
  std::string mode;  // gold-aspect | joint
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double aspect_precision = 0.0;
  double aspect_recall = 0.0;
  double aspect_f1 = 0.0;
  long n_gold = 0;
  long n_predicted = 0;
  bool operator==(const RunResult&) const = default;
};

struct BaselineRow {
  std::string label;
  std::string domain;
  double accuracy = 0.0;  // percent scale, as reported
};

// The ten published accuracy rows the reports always carry.
const std::vector<BaselineRow>& table1_baselines();

struct EvalReport {
  std::vector<RunResult> runs;
  std::vector<BaselineRow> baselines;
  std::string config_digest;
  std::uint64_t seed = 0;
};

struct MatrixConfig {
  std::vector<corpus::Dataset> corpora;  // one per domain, distinct domains
  knowledge::KnowledgeSource ks;

  std::string extractor = "lexicon";  // lexicon | mock | llm
  std::optional<extract::MockFixture> mock_fixture;
  std::optional<extract::PromptTemplate> prompt_template;
  extract::LlmSettings llm;
  std::filesystem::path cache_dir = ".absa-cache";
  int max_ngram = 4;

  std::string classifier = "nb";  // nb | lr | encoder
  double nb_alpha = 1.0;
  sentiment::LrHyper lr_hyper;
  encoder::EncoderHyper encoder_hyper;
  int encoder_d_model = 8;
  int encoder_n_layers = 2;
  int encoder_d_ff = 16;
  int encoder_max_len = 16;

  int window = 5;
  std::string mode = "both";  // gold-aspect | joint | both
  SpanMatch span_match = SpanMatch::exact;
  bool use_category_map = true;
  std::uint64_t seed = 0;

  std::string probe_train;  // defaults: first and second domain
  std::string probe_test;
  std::string probe_mode = "gold-aspect";
  bool probe_include_aspect_tokens = false;
};

// Gold-aspect training data for one corpus: first-seen vocabulary over
// aspect context windows plus the featurized labeled examples.
struct TrainingSetup {
  sentiment::Vocabulary vocab;
  std::vector<sentiment::LabeledExample> examples;
  std::vector<std::pair<const corpus::Sentence*, const corpus::Opinion*>> aspects;
};

TrainingSetup build_training_setup(const corpus::Dataset& train, int window);

// Encoder ids: 0 = [CLS], 1 = unknown, vocabulary ids from 2; aspect
// tokens get segment 1.
encoder::EncoderInput encoder_input_for(const corpus::Sentence& sentence,
                                        const std::optional<corpus::Span>& span, int window,
                                        const sentiment::Vocabulary& vocab,
                                        const encoder::EncoderConfig& cfg);

// Trains once per train domain, extracts with the train domain's
// knowledge on every test corpus (categories translated across domains,
// untranslatable predictions dropped), and scores the requested modes.
EvalReport run_matrix(const MatrixConfig& cfg);

// Re-runs the (probe_train, probe_test) cell with the test corpus masked
// at each fraction; training side untouched. Output sorted by fraction.
std::vector<std::pair<double, RunResult>> mask_probe(const MatrixConfig& cfg,
                                                     std::vector<double> fractions);

enum class ReportFormat { json, csv, table };

std::string emit_report(const EvalReport& report, ReportFormat format);

// Canonical JSON for a mask-probe result list.
std::string emit_probe_json(const std::vector<std::pair<double, RunResult>>& probe);

// Expands a span outward to token boundaries; none when it covers no token.
std::optional<corpus::Span> snap_span_to_tokens(const corpus::Sentence& sentence,
                                                const corpus::Span& span);

}  // namespace absa::eval
