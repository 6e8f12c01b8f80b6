#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absa/corpus.hpp"

namespace absa::sentiment {

// Token-string <-> dense feature index, first-seen order.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const std::vector<std::vector<std::string>>& documents);

  int add(const std::string& token);
  std::optional<int> index_of(std::string_view token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

// Sparse counts; zero-count entries are never stored.
using FeatureVector = std::map<int, int>;

struct LabeledExample {
  FeatureVector features;
  corpus::Polarity label = corpus::Polarity::neutral;
};

// Tokens within `window` tokens on each side of the aspect span, aspect
// tokens included; the whole sentence when the span is absent.
struct ContextWindow {
  std::vector<corpus::Token> tokens;
  std::vector<bool> is_aspect;  // parallel to tokens
};

ContextWindow context_window(const corpus::Sentence& sentence,
                             const std::optional<corpus::Span>& aspect_span, int window);

// Window token texts; the raw keys used for vocabulary building.
std::vector<std::string> context_tokens(const corpus::Sentence& sentence,
                                        const std::optional<corpus::Span>& aspect_span, int window);

// Same window, counted against a fixed vocabulary; unseen tokens drop out.
FeatureVector featurize(const corpus::Sentence& sentence, const std::optional<corpus::Span>& aspect_span,
                        int window, const Vocabulary& vocab);

// ---- multinomial Naive Bayes ----

struct NBModel {
  std::array<double, 3> class_log_prior{};                    // class order: positive, negative, neutral
  std::array<std::vector<double>, 3> token_log_likelihood{};  // [class][feature]
  double alpha = 1.0;
  Vocabulary vocab;
};

NBModel train_nb(const std::vector<LabeledExample>& examples, double alpha, Vocabulary vocab);

// ---- logistic regression ----

struct LRModel {
  std::array<std::vector<double>, 3> weights{};  // [class][feature]
  std::array<double, 3> bias{};
  Vocabulary vocab;
};

struct LrGradient {
  double loss = 0.0;
  std::array<std::vector<double>, 3> grad_weights{};
  std::array<double, 3> grad_bias{};
};

// Mean cross-entropy plus (l2/2)*||W||^2; analytic gradient.
LrGradient lr_loss_grad(const LRModel& model, const std::vector<LabeledExample>& batch, double l2);

struct LrHyper {
  double learning_rate = 0.1;
  int epochs = 50;
  int batch_size = 8;
  double l2 = 0.0;
  std::uint64_t seed = 0;
};

struct TrainedLr {
  LRModel model;
  std::vector<double> loss_trace;  // full-set loss after each epoch
};

TrainedLr train_lr(const std::vector<LabeledExample>& examples, const LrHyper& hyper, Vocabulary vocab);

// ---- prediction ----

struct Prediction {
  corpus::Polarity label = corpus::Polarity::positive;
  // NB: log-domain joint scores. LR: class probabilities summing to 1.
  std::array<double, 3> scores{};
};

Prediction predict(const NBModel& model, const FeatureVector& features);
Prediction predict(const LRModel& model, const FeatureVector& features);

// ---- persistence ----

std::string save_model_json(const NBModel& model);
std::string save_model_json(const LRModel& model);
std::variant<NBModel, LRModel> load_model_json(std::string_view text);

}  // namespace absa::sentiment
