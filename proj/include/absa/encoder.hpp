#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absa/corpus.hpp"

namespace absa::encoder {

// Dense row-major matrix. Everything at desk scale, double precision.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
  bool operator==(const Mat&) const = default;
};

struct EncoderConfig {
  int d_model = 8;
  int d_k = 8;  // single head: d_k == d_model
  int n_layers = 2;
  int max_len = 16;
  int vocab_size = 32;
  int n_classes = 3;
  int d_ff = 16;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

struct LayerParams {
  Mat wq, wk, wv, wo;  // d_model x d_model
  std::vector<double> ln1_gain, ln1_bias;
  Mat w1;  // d_model x d_ff
  std::vector<double> b1;
  Mat w2;  // d_ff x d_model
  std::vector<double> b2;
  std::vector<double> ln2_gain, ln2_bias;
  bool operator==(const LayerParams&) const = default;
};

struct EncoderParams {
  Mat token_embedding;     // vocab_size x d_model
  Mat position_embedding;  // max_len x d_model
  Mat segment_embedding;   // 2 x d_model
  std::vector<LayerParams> layers;
  Mat head_weight;  // d_model x n_classes
  std::array<double, 3> head_bias{};
  bool operator==(const EncoderParams&) const = default;

  // All parameters drawn from seeded uniform(-0.1, 0.1), fixed order.
  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);
  static EncoderParams zeros(const EncoderConfig& cfg);
};

// Position 0 carries the [CLS] token; segment ids separate review text (0)
// from aspect tokens (1).
struct EncoderInput {
  std::vector<int> token_ids;
  std::vector<int> segment_ids;
  bool operator==(const EncoderInput&) const = default;
};

void validate_input(const EncoderConfig& cfg, const EncoderInput& x);

// Scaled dot-product attention with row softmax: softmax(QK^T/sqrt(d_k))V.
Mat attention(const Mat& q, const Mat& k, const Mat& v);

struct ForwardResult {
  std::array<double, 3> logits{};
  std::vector<Mat> hidden;  // h0..hL, each seq_len x d_model
};

ForwardResult encoder_forward(const EncoderParams& params, const EncoderConfig& cfg,
                              const EncoderInput& x);

using TrainingExample = std::pair<EncoderInput, corpus::Polarity>;

struct BatchGradient {
  double loss = 0.0;
  EncoderParams grad;
};

// Mean cross-entropy over the batch on [CLS] logits, with the full
// analytic gradient for every parameter tensor.
BatchGradient loss_and_gradient(const EncoderParams& params, const EncoderConfig& cfg,
                                const std::vector<TrainingExample>& batch);

struct EncoderHyper {
  double learning_rate = 0.1;
  int epochs = 100;
  std::uint64_t seed = 0;
};

struct TrainedEncoder {
  EncoderParams params;
  std::vector<double> loss_trace;  // batch loss at the start of each epoch
};

// Full-batch gradient descent from seeded initialization.
TrainedEncoder train_encoder(const std::vector<TrainingExample>& examples, const EncoderConfig& cfg,
                             const EncoderHyper& hyper);

// Central-difference check of the training-loss gradient on a seeded
// 4-example batch; samples parameters round-robin across every tensor and
// returns the max relative error.
double grad_check(const EncoderConfig& cfg, std::uint64_t seed, double epsilon, int samples = 200);

std::string save_params_json(const EncoderParams& params, const EncoderConfig& cfg);
std::pair<EncoderParams, EncoderConfig> load_params_json(std::string_view text);

}  // namespace absa::encoder
