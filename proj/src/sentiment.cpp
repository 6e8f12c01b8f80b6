#include "absa/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "absa/errors.hpp"
#include "absa/rng.hpp"

namespace absa::sentiment {

using json = nlohmann::json;

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents) {
  Vocabulary v;
  for (const auto& doc : documents) {
    for (const auto& token : doc) v.add(token);
  }
  return v;
}

int Vocabulary::add(const std::string& token) {
  const auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, idx);
  return idx;
}

std::optional<int> Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ContextWindow context_window(const corpus::Sentence& sentence,
                             const std::optional<corpus::Span>& aspect_span, int window) {
  if (window < 0) throw ValidationError("window must be >= 0");
  const std::vector<corpus::Token> tokens = corpus::tokenize(sentence.text);
  std::size_t first = 0;
  std::size_t last = tokens.empty() ? 0 : tokens.size() - 1;
  std::size_t aspect_first = tokens.size(), aspect_last = tokens.size();
  if (aspect_span) {
    std::optional<std::size_t> a, b;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].span.start == aspect_span->start) a = i;
      if (tokens[i].span.end == aspect_span->end) b = i;
    }
    if (!a || !b || *a > *b) {
      throw ValidationError("sentence " + sentence.id + ": aspect span (" +
                            std::to_string(aspect_span->start) + ", " + std::to_string(aspect_span->end) +
                            ") is not aligned to token boundaries");
    }
    aspect_first = *a;
    aspect_last = *b;
    first = *a > static_cast<std::size_t>(window) ? *a - static_cast<std::size_t>(window) : 0;
    last = std::min(*b + static_cast<std::size_t>(window), tokens.size() - 1);
  }
  ContextWindow out;
  for (std::size_t i = first; i <= last && i < tokens.size(); ++i) {
    out.tokens.push_back(tokens[i]);
    out.is_aspect.push_back(i >= aspect_first && i <= aspect_last);
  }
  return out;
}

std::vector<std::string> context_tokens(const corpus::Sentence& sentence,
                                        const std::optional<corpus::Span>& aspect_span, int window) {
  std::vector<std::string> out;
  for (auto& token : context_window(sentence, aspect_span, window).tokens) out.push_back(token.text);
  return out;
}

FeatureVector featurize(const corpus::Sentence& sentence, const std::optional<corpus::Span>& aspect_span,
                        int window, const Vocabulary& vocab) {
  FeatureVector features;
  for (const auto& token : context_tokens(sentence, aspect_span, window)) {
    if (const auto idx = vocab.index_of(token)) features[*idx] += 1;
  }
  return features;
}

// ---- Naive Bayes ----

NBModel train_nb(const std::vector<LabeledExample>& examples, double alpha, Vocabulary vocab) {
  if (examples.empty()) throw ValidationError("train_nb: empty training set");
  if (!(alpha > 0.0)) throw ValidationError("train_nb: alpha must be positive");
  const int v = vocab.size();
  NBModel model;
  model.alpha = alpha;
  model.vocab = std::move(vocab);

  std::array<double, 3> class_count{};
  std::array<std::vector<double>, 3> token_count;
  for (auto& tc : token_count) tc.assign(static_cast<std::size_t>(v), 0.0);
  for (const auto& ex : examples) {
    const int c = corpus::polarity_index(ex.label);
    class_count[static_cast<std::size_t>(c)] += 1.0;
    for (const auto& [idx, count] : ex.features) {
      if (idx < 0 || idx >= v) throw ValidationError("train_nb: feature index out of vocabulary range");
      if (count < 0) throw ValidationError("train_nb: negative feature count");
      token_count[static_cast<std::size_t>(c)][static_cast<std::size_t>(idx)] += count;
    }
  }
  const auto n = static_cast<double>(examples.size());
  for (std::size_t c = 0; c < 3; ++c) {
    model.class_log_prior[c] = class_count[c] > 0.0 ? std::log(class_count[c] / n) : kNegInf;
    double total = 0.0;
    for (double tc : token_count[c]) total += tc;
    model.token_log_likelihood[c].resize(static_cast<std::size_t>(v));
    const double denom = total + alpha * static_cast<double>(v);
    for (int t = 0; t < v; ++t) {
      model.token_log_likelihood[c][static_cast<std::size_t>(t)] =
          std::log((token_count[c][static_cast<std::size_t>(t)] + alpha) / denom);
    }
  }
  return model;
}

// ---- shared argmax with the fixed tie order ----

namespace {

corpus::Polarity argmax_scores(const std::array<double, 3>& scores) {
  int best = 0;
  for (int c = 1; c < 3; ++c) {
    if (scores[static_cast<std::size_t>(c)] > scores[static_cast<std::size_t>(best)]) best = c;
  }
  return corpus::kPolarityOrder[static_cast<std::size_t>(best)];
}

std::array<double, 3> logits_of(const LRModel& model, const FeatureVector& features) {
  std::array<double, 3> z = model.bias;
  for (const auto& [idx, count] : features) {
    for (std::size_t c = 0; c < 3; ++c) {
      z[c] += model.weights[c][static_cast<std::size_t>(idx)] * count;
    }
  }
  return z;
}

std::array<double, 3> softmax3(const std::array<double, 3>& z) {
  const double zmax = std::max({z[0], z[1], z[2]});
  std::array<double, 3> p{};
  double denom = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    p[c] = std::exp(z[c] - zmax);
    denom += p[c];
  }
  for (auto& x : p) x /= denom;
  return p;
}

}  // namespace

Prediction predict(const NBModel& model, const FeatureVector& features) {
  std::array<double, 3> scores = model.class_log_prior;
  for (const auto& [idx, count] : features) {
    if (idx < 0 || idx >= model.vocab.size()) {
      throw ValidationError("predict: feature index out of vocabulary range");
    }
    for (std::size_t c = 0; c < 3; ++c) {
      scores[c] += count * model.token_log_likelihood[c][static_cast<std::size_t>(idx)];
    }
  }
  return {argmax_scores(scores), scores};
}

Prediction predict(const LRModel& model, const FeatureVector& features) {
  const std::array<double, 3> p = softmax3(logits_of(model, features));
  return {argmax_scores(p), p};
}

// ---- logistic regression ----

LrGradient lr_loss_grad(const LRModel& model, const std::vector<LabeledExample>& batch, double l2) {
  if (batch.empty()) throw ValidationError("lr_loss_grad: empty batch");
  if (l2 < 0.0) throw ValidationError("lr_loss_grad: l2 must be >= 0");
  const std::size_t v = model.weights[0].size();
  LrGradient g;
  for (auto& gw : g.grad_weights) gw.assign(v, 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    const std::array<double, 3> p = softmax3(logits_of(model, ex.features));
    const int y = corpus::polarity_index(ex.label);
    g.loss -= inv_b * std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
    for (std::size_t c = 0; c < 3; ++c) {
      const double delta = (p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_b;
      g.grad_bias[c] += delta;
      for (const auto& [idx, count] : ex.features) {
        g.grad_weights[c][static_cast<std::size_t>(idx)] += delta * count;
      }
    }
  }
  if (l2 > 0.0) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t t = 0; t < v; ++t) {
        g.loss += 0.5 * l2 * model.weights[c][t] * model.weights[c][t];
        g.grad_weights[c][t] += l2 * model.weights[c][t];
      }
    }
  }
  return g;
}

TrainedLr train_lr(const std::vector<LabeledExample>& examples, const LrHyper& hyper, Vocabulary vocab) {
  if (examples.empty()) throw ValidationError("train_lr: empty training set");
  if (!(hyper.learning_rate > 0.0)) throw ValidationError("train_lr: learning rate must be positive");
  if (hyper.epochs < 0) throw ValidationError("train_lr: epochs must be >= 0");
  if (hyper.batch_size < 1) throw ValidationError("train_lr: batch size must be >= 1");
  if (hyper.l2 < 0.0) throw ValidationError("train_lr: l2 must be >= 0");

  TrainedLr out;
  out.model.vocab = std::move(vocab);
  const auto v = static_cast<std::size_t>(out.model.vocab.size());
  for (auto& w : out.model.weights) w.assign(v, 0.0);
  for (const auto& ex : examples) {
    for (const auto& [idx, count] : ex.features) {
      (void)count;
      if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
        throw ValidationError("train_lr: feature index out of vocabulary range");
      }
    }
  }

  Rng rng(derive_seed(hyper.seed, "train-lr"));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<LabeledExample> batch(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch[i - start] = examples[order[i]];
      const LrGradient g = lr_loss_grad(out.model, batch, hyper.l2);
      for (std::size_t c = 0; c < 3; ++c) {
        out.model.bias[c] -= hyper.learning_rate * g.grad_bias[c];
        for (std::size_t t = 0; t < v; ++t) {
          out.model.weights[c][t] -= hyper.learning_rate * g.grad_weights[c][t];
        }
      }
    }
    out.loss_trace.push_back(lr_loss_grad(out.model, examples, hyper.l2).loss);
  }
  return out;
}

// ---- persistence ----

namespace {

json priors_to_json(const std::array<double, 3>& priors) {
  json arr = json::array();
  for (double p : priors) {
    if (std::isinf(p) && p < 0) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(p);
    }
  }
  return arr;
}

std::array<double, 3> priors_from_json(const json& arr) {
  if (!arr.is_array() || arr.size() != 3) throw ParseError("model: class_log_prior must have 3 entries");
  std::array<double, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) out[c] = arr[c].is_null() ? kNegInf : arr[c].get<double>();
  return out;
}

json vocab_to_json(const Vocabulary& vocab) { return json(vocab.tokens()); }

Vocabulary vocab_from_json(const json& arr) {
  if (!arr.is_array()) throw ParseError("model: vocabulary must be an array");
  Vocabulary v;
  for (const auto& tok : arr) {
    if (!tok.is_string()) throw ParseError("model: vocabulary entries must be strings");
    v.add(tok.get<std::string>());
  }
  return v;
}

std::array<std::vector<double>, 3> matrix_from_json(const json& arr, std::size_t v, const char* name) {
  if (!arr.is_array() || arr.size() != 3) throw ParseError(std::string("model: ") + name + " must have 3 rows");
  std::array<std::vector<double>, 3> out;
  for (std::size_t c = 0; c < 3; ++c) {
    if (!arr[c].is_array() || arr[c].size() != v) {
      throw ParseError(std::string("model: ") + name + " row size mismatch with vocabulary");
    }
    out[c] = arr[c].get<std::vector<double>>();
  }
  return out;
}

}  // namespace

std::string save_model_json(const NBModel& model) {
  json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "nb";
  doc["vocabulary"] = vocab_to_json(model.vocab);
  doc["parameters"] = {{"alpha", model.alpha},
                       {"class_log_prior", priors_to_json(model.class_log_prior)},
                       {"token_log_likelihood", model.token_log_likelihood}};
  return doc.dump(2) + "\n";
}

std::string save_model_json(const LRModel& model) {
  json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "lr";
  doc["vocabulary"] = vocab_to_json(model.vocab);
  doc["parameters"] = {{"bias", model.bias}, {"weights", model.weights}};
  return doc.dump(2) + "\n";
}

std::variant<NBModel, LRModel> load_model_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw ParseError("model: missing format_version");
  }
  if (doc["format_version"].get<int>() != 1) {
    throw ParseError("model: unsupported format_version " + doc["format_version"].dump());
  }
  if (!doc.contains("model_kind") || !doc["model_kind"].is_string()) {
    throw ParseError("model: missing model_kind");
  }
  const std::string kind = doc["model_kind"].get<std::string>();
  const Vocabulary vocab = vocab_from_json(doc.at("vocabulary"));
  const auto v = static_cast<std::size_t>(vocab.size());
  const json& params = doc.at("parameters");
  if (kind == "nb") {
    NBModel model;
    model.vocab = vocab;
    model.alpha = params.at("alpha").get<double>();
    if (!(model.alpha > 0.0)) throw ParseError("model: alpha must be positive");
    model.class_log_prior = priors_from_json(params.at("class_log_prior"));
    model.token_log_likelihood = matrix_from_json(params.at("token_log_likelihood"), v, "token_log_likelihood");
    return model;
  }
  if (kind == "lr") {
    LRModel model;
    model.vocab = vocab;
    const json& bias = params.at("bias");
    if (!bias.is_array() || bias.size() != 3) throw ParseError("model: bias must have 3 entries");
    for (std::size_t c = 0; c < 3; ++c) model.bias[c] = bias[c].get<double>();
    model.weights = matrix_from_json(params.at("weights"), v, "weights");
    return model;
  }
  throw ParseError("model: unknown model_kind '" + kind + "'");
}

}  // namespace absa::sentiment
