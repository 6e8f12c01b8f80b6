#include "absa/encoder.hpp"

#include <cmath>
#include <functional>

#include <json.hpp>

#include "absa/errors.hpp"
#include "absa/rng.hpp"

namespace absa::encoder {

using json = nlohmann::json;

namespace {
constexpr double kLnEps = 1e-5;
}

void EncoderConfig::validate() const {
  if (d_model <= 0 || d_k <= 0 || n_layers <= 0 || max_len <= 0 || vocab_size <= 0 || d_ff <= 0) {
    throw ValidationError("encoder config: all dimensions must be positive");
  }
  if (d_k != d_model) throw ValidationError("encoder config: single-head setup requires d_k == d_model");
  if (n_classes != 3) throw ValidationError("encoder config: n_classes must be 3");
  if (max_len < 2) throw ValidationError("encoder config: max_len must be >= 2 to hold [CLS] plus text");
}

void validate_input(const EncoderConfig& cfg, const EncoderInput& x) {
  if (x.token_ids.empty()) throw ValidationError("encoder input: empty sequence");
  if (x.token_ids.size() != x.segment_ids.size()) {
    throw ValidationError("encoder input: token and segment id lengths differ");
  }
  if (x.token_ids.size() > static_cast<std::size_t>(cfg.max_len)) {
    throw ValidationError("encoder input: sequence longer than max_len");
  }
  for (int id : x.token_ids) {
    if (id < 0 || id >= cfg.vocab_size) throw ValidationError("encoder input: token id out of range");
  }
  for (int seg : x.segment_ids) {
    if (seg != 0 && seg != 1) throw ValidationError("encoder input: segment ids must be 0 or 1");
  }
}

// ---- parameter containers ----

namespace {

void fill_uniform(std::vector<double>& v, Rng& rng) {
  for (double& x : v) x = rng.uniform(-0.1, 0.1);
}

LayerParams layer_zeros(const EncoderConfig& cfg) {
  LayerParams l;
  l.wq = Mat(cfg.d_model, cfg.d_model);
  l.wk = Mat(cfg.d_model, cfg.d_model);
  l.wv = Mat(cfg.d_model, cfg.d_model);
  l.wo = Mat(cfg.d_model, cfg.d_model);
  l.ln1_gain.assign(static_cast<std::size_t>(cfg.d_model), 0.0);
  l.ln1_bias.assign(static_cast<std::size_t>(cfg.d_model), 0.0);
  l.w1 = Mat(cfg.d_model, cfg.d_ff);
  l.b1.assign(static_cast<std::size_t>(cfg.d_ff), 0.0);
  l.w2 = Mat(cfg.d_ff, cfg.d_model);
  l.b2.assign(static_cast<std::size_t>(cfg.d_model), 0.0);
  l.ln2_gain.assign(static_cast<std::size_t>(cfg.d_model), 0.0);
  l.ln2_bias.assign(static_cast<std::size_t>(cfg.d_model), 0.0);
  return l;
}

}  // namespace

EncoderParams EncoderParams::zeros(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p;
  p.token_embedding = Mat(cfg.vocab_size, cfg.d_model);
  p.position_embedding = Mat(cfg.max_len, cfg.d_model);
  p.segment_embedding = Mat(2, cfg.d_model);
  p.layers.assign(static_cast<std::size_t>(cfg.n_layers), layer_zeros(cfg));
  p.head_weight = Mat(cfg.d_model, cfg.n_classes);
  p.head_bias = {0.0, 0.0, 0.0};
  return p;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  EncoderParams p = zeros(cfg);
  Rng rng(derive_seed(seed, "encoder-init"));
  fill_uniform(p.token_embedding.a, rng);
  fill_uniform(p.position_embedding.a, rng);
  fill_uniform(p.segment_embedding.a, rng);
  for (auto& l : p.layers) {
    fill_uniform(l.wq.a, rng);
    fill_uniform(l.wk.a, rng);
    fill_uniform(l.wv.a, rng);
    fill_uniform(l.wo.a, rng);
    // Layer norms start at the standard identity (gain 1, bias 0); a
    // near-zero gain chokes every gradient flowing through the layer and
    // the desk-scale net never escapes the uniform-logit plateau.
    std::fill(l.ln1_gain.begin(), l.ln1_gain.end(), 1.0);
    std::fill(l.ln2_gain.begin(), l.ln2_gain.end(), 1.0);
    fill_uniform(l.w1.a, rng);
    fill_uniform(l.b1, rng);
    fill_uniform(l.w2.a, rng);
    fill_uniform(l.b2, rng);
  }
  fill_uniform(p.head_weight.a, rng);
  for (double& b : p.head_bias) b = rng.uniform(-0.1, 0.1);
  return p;
}

// ---- small matrix kernels ----

namespace {

Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

// a^T * b
Mat matmul_at(const Mat& a, const Mat& b) {
  Mat out(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    for (int i = 0; i < a.cols; ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

// a * b^T
Mat matmul_bt(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.rows; ++j) {
      double sum = 0.0;
      for (int k = 0; k < a.cols; ++k) sum += a(i, k) * b(j, k);
      out(i, j) = sum;
    }
  }
  return out;
}

void add_inplace(Mat& a, const Mat& b) {
  for (std::size_t i = 0; i < a.a.size(); ++i) a.a[i] += b.a[i];
}

void softmax_rows(Mat& m) {
  for (int i = 0; i < m.rows; ++i) {
    double row_max = m(i, 0);
    for (int j = 1; j < m.cols; ++j) row_max = std::max(row_max, m(i, j));
    double denom = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      m(i, j) = std::exp(m(i, j) - row_max);
      denom += m(i, j);
    }
    for (int j = 0; j < m.cols; ++j) m(i, j) /= denom;
  }
}

struct LnCache {
  std::vector<double> mu, inv_sigma;
};

Mat layer_norm(const Mat& x, const std::vector<double>& gain, const std::vector<double>& bias,
               LnCache& cache) {
  Mat y(x.rows, x.cols);
  cache.mu.resize(static_cast<std::size_t>(x.rows));
  cache.inv_sigma.resize(static_cast<std::size_t>(x.rows));
  for (int i = 0; i < x.rows; ++i) {
    double mu = 0.0;
    for (int j = 0; j < x.cols; ++j) mu += x(i, j);
    mu /= x.cols;
    double var = 0.0;
    for (int j = 0; j < x.cols; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
    var /= x.cols;
    const double inv_sigma = 1.0 / std::sqrt(var + kLnEps);
    cache.mu[static_cast<std::size_t>(i)] = mu;
    cache.inv_sigma[static_cast<std::size_t>(i)] = inv_sigma;
    for (int j = 0; j < x.cols; ++j) {
      y(i, j) = gain[static_cast<std::size_t>(j)] * (x(i, j) - mu) * inv_sigma +
                bias[static_cast<std::size_t>(j)];
    }
  }
  return y;
}

// dx for y = gain .* xhat + bias; accumulates dgain/dbias.
Mat layer_norm_backward(const Mat& x, const Mat& dy, const std::vector<double>& gain,
                        const LnCache& cache, std::vector<double>& dgain, std::vector<double>& dbias) {
  Mat dx(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    const double mu = cache.mu[static_cast<std::size_t>(i)];
    const double inv_sigma = cache.inv_sigma[static_cast<std::size_t>(i)];
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      const double xhat = (x(i, j) - mu) * inv_sigma;
      const double dxhat = dy(i, j) * gain[static_cast<std::size_t>(j)];
      dgain[static_cast<std::size_t>(j)] += dy(i, j) * xhat;
      dbias[static_cast<std::size_t>(j)] += dy(i, j);
      mean_dxhat += dxhat;
      mean_dxhat_xhat += dxhat * xhat;
    }
    mean_dxhat /= x.cols;
    mean_dxhat_xhat /= x.cols;
    for (int j = 0; j < x.cols; ++j) {
      const double xhat = (x(i, j) - mu) * inv_sigma;
      const double dxhat = dy(i, j) * gain[static_cast<std::size_t>(j)];
      dx(i, j) = inv_sigma * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
    }
  }
  return dx;
}

struct LayerCache {
  Mat h_in, q, k, v, probs, att, r1, h1, z, f, r2, h2;
  LnCache ln1, ln2;
};

Mat layer_forward(const LayerParams& lp, const Mat& h_in, int d_k, LayerCache& cache) {
  cache.h_in = h_in;
  cache.q = matmul(h_in, lp.wq);
  cache.k = matmul(h_in, lp.wk);
  cache.v = matmul(h_in, lp.wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  Mat scores = matmul_bt(cache.q, cache.k);
  for (double& s : scores.a) s *= scale;
  softmax_rows(scores);
  cache.probs = std::move(scores);
  cache.att = matmul(cache.probs, cache.v);
  Mat att_out = matmul(cache.att, lp.wo);
  cache.r1 = h_in;
  add_inplace(cache.r1, att_out);
  cache.h1 = layer_norm(cache.r1, lp.ln1_gain, lp.ln1_bias, cache.ln1);
  cache.z = matmul(cache.h1, lp.w1);
  for (int i = 0; i < cache.z.rows; ++i) {
    for (int j = 0; j < cache.z.cols; ++j) cache.z(i, j) += lp.b1[static_cast<std::size_t>(j)];
  }
  cache.f = cache.z;
  for (double& x : cache.f.a) x = x > 0.0 ? x : 0.0;
  Mat g = matmul(cache.f, lp.w2);
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) g(i, j) += lp.b2[static_cast<std::size_t>(j)];
  }
  cache.r2 = cache.h1;
  add_inplace(cache.r2, g);
  cache.h2 = layer_norm(cache.r2, lp.ln2_gain, lp.ln2_bias, cache.ln2);
  return cache.h2;
}

// Returns d(h_in); accumulates parameter gradients into `grad`.
Mat layer_backward(const LayerParams& lp, const LayerCache& cache, const Mat& dh2, int d_k,
                   LayerParams& grad) {
  // ln2
  const Mat dr2 = layer_norm_backward(cache.r2, dh2, lp.ln2_gain, cache.ln2, grad.ln2_gain, grad.ln2_bias);
  Mat dh1 = dr2;  // residual branch
  const Mat& dg = dr2;
  // feed-forward
  add_inplace(grad.w2, matmul_at(cache.f, dg));
  for (int i = 0; i < dg.rows; ++i) {
    for (int j = 0; j < dg.cols; ++j) grad.b2[static_cast<std::size_t>(j)] += dg(i, j);
  }
  Mat df = matmul_bt(dg, lp.w2);
  for (std::size_t i = 0; i < df.a.size(); ++i) {
    if (cache.z.a[i] <= 0.0) df.a[i] = 0.0;
  }
  add_inplace(grad.w1, matmul_at(cache.h1, df));
  for (int i = 0; i < df.rows; ++i) {
    for (int j = 0; j < df.cols; ++j) grad.b1[static_cast<std::size_t>(j)] += df(i, j);
  }
  add_inplace(dh1, matmul_bt(df, lp.w1));
  // ln1
  const Mat dr1 = layer_norm_backward(cache.r1, dh1, lp.ln1_gain, cache.ln1, grad.ln1_gain, grad.ln1_bias);
  Mat dh_in = dr1;  // residual branch
  const Mat& datt_out = dr1;
  // attention output projection
  add_inplace(grad.wo, matmul_at(cache.att, datt_out));
  const Mat datt = matmul_bt(datt_out, lp.wo);
  // A = P V
  const Mat dprobs = matmul_bt(datt, cache.v);
  const Mat dv = matmul_at(cache.probs, datt);
  // softmax rows
  Mat dscores(dprobs.rows, dprobs.cols);
  for (int i = 0; i < dprobs.rows; ++i) {
    double dot = 0.0;
    for (int j = 0; j < dprobs.cols; ++j) dot += dprobs(i, j) * cache.probs(i, j);
    for (int j = 0; j < dprobs.cols; ++j) {
      dscores(i, j) = cache.probs(i, j) * (dprobs(i, j) - dot);
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  for (double& s : dscores.a) s *= scale;
  // S = scale * Q K^T
  const Mat dq = matmul(dscores, cache.k);
  const Mat dk = matmul_at(dscores, cache.q);
  add_inplace(grad.wq, matmul_at(cache.h_in, dq));
  add_inplace(grad.wk, matmul_at(cache.h_in, dk));
  add_inplace(grad.wv, matmul_at(cache.h_in, dv));
  add_inplace(dh_in, matmul_bt(dq, lp.wq));
  add_inplace(dh_in, matmul_bt(dk, lp.wk));
  add_inplace(dh_in, matmul_bt(dv, lp.wv));
  return dh_in;
}

Mat embed(const EncoderParams& p, const EncoderInput& x) {
  const int n = static_cast<int>(x.token_ids.size());
  const int d = p.token_embedding.cols;
  Mat h(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      h(i, j) = p.token_embedding(x.token_ids[static_cast<std::size_t>(i)], j) + p.position_embedding(i, j) +
                p.segment_embedding(x.segment_ids[static_cast<std::size_t>(i)], j);
    }
  }
  return h;
}

std::array<double, 3> head_logits(const EncoderParams& p, const Mat& h_final) {
  std::array<double, 3> logits = p.head_bias;
  for (int c = 0; c < 3; ++c) {
    for (int j = 0; j < h_final.cols; ++j) logits[static_cast<std::size_t>(c)] += h_final(0, j) * p.head_weight(j, c);
  }
  return logits;
}

std::array<double, 3> softmax3(const std::array<double, 3>& z) {
  const double zmax = std::max({z[0], z[1], z[2]});
  std::array<double, 3> p{};
  double denom = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    p[c] = std::exp(z[c] - zmax);
    denom += p[c];
  }
  for (double& x : p) x /= denom;
  return p;
}

}  // namespace

Mat attention(const Mat& q, const Mat& k, const Mat& v) {
  if (q.cols != k.cols || q.rows != k.rows || k.rows != v.rows) {
    throw ValidationError("attention: Q, K, V row counts must match and Q/K widths must agree");
  }
  if (q.cols <= 0) throw ValidationError("attention: d_k must be positive");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
  Mat scores = matmul_bt(q, k);
  for (double& s : scores.a) s *= scale;
  softmax_rows(scores);
  return matmul(scores, v);
}

ForwardResult encoder_forward(const EncoderParams& params, const EncoderConfig& cfg,
                              const EncoderInput& x) {
  cfg.validate();
  validate_input(cfg, x);
  ForwardResult out;
  Mat h = embed(params, x);
  out.hidden.push_back(h);
  for (const auto& layer : params.layers) {
    LayerCache cache;
    h = layer_forward(layer, h, cfg.d_k, cache);
    out.hidden.push_back(h);
  }
  out.logits = head_logits(params, h);
  return out;
}

BatchGradient loss_and_gradient(const EncoderParams& params, const EncoderConfig& cfg,
                                const std::vector<TrainingExample>& batch) {
  cfg.validate();
  if (batch.empty()) throw ValidationError("loss_and_gradient: empty batch");
  BatchGradient out;
  out.grad = EncoderParams::zeros(cfg);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& [x, label] : batch) {
    validate_input(cfg, x);
    const int n = static_cast<int>(x.token_ids.size());
    Mat h = embed(params, x);
    std::vector<LayerCache> caches(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      h = layer_forward(params.layers[l], h, cfg.d_k, caches[l]);
    }
    const std::array<double, 3> logits = head_logits(params, h);
    const std::array<double, 3> probs = softmax3(logits);
    const int y = corpus::polarity_index(label);
    out.loss -= inv_b * std::log(std::max(probs[static_cast<std::size_t>(y)], 1e-300));

    std::array<double, 3> dlogits{};
    for (int c = 0; c < 3; ++c) {
      dlogits[static_cast<std::size_t>(c)] =
          (probs[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0)) * inv_b;
    }
    Mat dh(n, cfg.d_model);
    for (int j = 0; j < cfg.d_model; ++j) {
      for (int c = 0; c < 3; ++c) {
        out.grad.head_weight(j, c) += h(0, j) * dlogits[static_cast<std::size_t>(c)];
        dh(0, j) += params.head_weight(j, c) * dlogits[static_cast<std::size_t>(c)];
      }
    }
    for (int c = 0; c < 3; ++c) out.grad.head_bias[static_cast<std::size_t>(c)] += dlogits[static_cast<std::size_t>(c)];

    for (std::size_t l = params.layers.size(); l-- > 0;) {
      dh = layer_backward(params.layers[l], caches[l], dh, cfg.d_k, out.grad.layers[l]);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < cfg.d_model; ++j) {
        out.grad.token_embedding(x.token_ids[static_cast<std::size_t>(i)], j) += dh(i, j);
        out.grad.position_embedding(i, j) += dh(i, j);
        out.grad.segment_embedding(x.segment_ids[static_cast<std::size_t>(i)], j) += dh(i, j);
      }
    }
  }
  return out;
}

// ---- training ----

namespace {

void axpy(std::vector<double>& target, const std::vector<double>& g, double step) {
  for (std::size_t i = 0; i < target.size(); ++i) target[i] -= step * g[i];
}

void apply_step(EncoderParams& p, const EncoderParams& g, double lr) {
  axpy(p.token_embedding.a, g.token_embedding.a, lr);
  axpy(p.position_embedding.a, g.position_embedding.a, lr);
  axpy(p.segment_embedding.a, g.segment_embedding.a, lr);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    axpy(p.layers[l].wq.a, g.layers[l].wq.a, lr);
    axpy(p.layers[l].wk.a, g.layers[l].wk.a, lr);
    axpy(p.layers[l].wv.a, g.layers[l].wv.a, lr);
    axpy(p.layers[l].wo.a, g.layers[l].wo.a, lr);
    axpy(p.layers[l].ln1_gain, g.layers[l].ln1_gain, lr);
    axpy(p.layers[l].ln1_bias, g.layers[l].ln1_bias, lr);
    axpy(p.layers[l].w1.a, g.layers[l].w1.a, lr);
    axpy(p.layers[l].b1, g.layers[l].b1, lr);
    axpy(p.layers[l].w2.a, g.layers[l].w2.a, lr);
    axpy(p.layers[l].b2, g.layers[l].b2, lr);
    axpy(p.layers[l].ln2_gain, g.layers[l].ln2_gain, lr);
    axpy(p.layers[l].ln2_bias, g.layers[l].ln2_bias, lr);
  }
  axpy(p.head_weight.a, g.head_weight.a, lr);
  for (std::size_t c = 0; c < 3; ++c) p.head_bias[c] -= lr * g.head_bias[c];
}

}  // namespace

namespace {

double grad_norm_sq(const EncoderParams& g) {
  double out = 0.0;
  auto acc = [&out](const std::vector<double>& v) {
    for (double x : v) out += x * x;
  };
  acc(g.token_embedding.a);
  acc(g.position_embedding.a);
  acc(g.segment_embedding.a);
  for (const auto& l : g.layers) {
    acc(l.wq.a);
    acc(l.wk.a);
    acc(l.wv.a);
    acc(l.wo.a);
    acc(l.ln1_gain);
    acc(l.ln1_bias);
    acc(l.w1.a);
    acc(l.b1);
    acc(l.w2.a);
    acc(l.b2);
    acc(l.ln2_gain);
    acc(l.ln2_bias);
  }
  acc(g.head_weight.a);
  for (double x : g.head_bias) out += x * x;
  return out;
}

}  // namespace

TrainedEncoder train_encoder(const std::vector<TrainingExample>& examples, const EncoderConfig& cfg,
                             const EncoderHyper& hyper) {
  cfg.validate();
  if (examples.empty()) throw ValidationError("train_encoder: empty training set");
  if (!(hyper.learning_rate > 0.0)) throw ValidationError("train_encoder: learning rate must be positive");
  if (hyper.epochs < 0) throw ValidationError("train_encoder: epochs must be >= 0");
  TrainedEncoder out;
  out.params = EncoderParams::init(cfg, hyper.seed);
  // Full-batch descent with Armijo backtracking: hyper.learning_rate caps
  // the step, halving until the batch loss does not increase, so the
  // per-epoch loss trace is non-increasing by construction.
  double step = hyper.learning_rate;
  constexpr double kArmijo = 1e-4;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const BatchGradient bg = loss_and_gradient(out.params, cfg, examples);
    out.loss_trace.push_back(bg.loss);
    const double gsq = grad_norm_sq(bg.grad);
    double trial = std::min(step * 2.0, hyper.learning_rate);
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      EncoderParams candidate = out.params;
      apply_step(candidate, bg.grad, trial);
      const double candidate_loss = loss_and_gradient(candidate, cfg, examples).loss;
      if (candidate_loss <= bg.loss - kArmijo * trial * gsq) {
        out.params = std::move(candidate);
        step = trial;
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) break;  // gradient at machine-precision scale
  }
  while (out.loss_trace.size() < static_cast<std::size_t>(hyper.epochs)) {
    out.loss_trace.push_back(out.loss_trace.back());
  }
  return out;
}

// ---- gradient check ----

namespace {

// Flat views over every tensor, in a fixed order.
std::vector<std::pair<const char*, std::vector<double>*>> tensor_views(EncoderParams& p) {
  std::vector<std::pair<const char*, std::vector<double>*>> views;
  views.push_back({"token_embedding", &p.token_embedding.a});
  views.push_back({"position_embedding", &p.position_embedding.a});
  views.push_back({"segment_embedding", &p.segment_embedding.a});
  for (auto& l : p.layers) {
    views.push_back({"wq", &l.wq.a});
    views.push_back({"wk", &l.wk.a});
    views.push_back({"wv", &l.wv.a});
    views.push_back({"wo", &l.wo.a});
    views.push_back({"ln1_gain", &l.ln1_gain});
    views.push_back({"ln1_bias", &l.ln1_bias});
    views.push_back({"w1", &l.w1.a});
    views.push_back({"b1", &l.b1});
    views.push_back({"w2", &l.w2.a});
    views.push_back({"b2", &l.b2});
    views.push_back({"ln2_gain", &l.ln2_gain});
    views.push_back({"ln2_bias", &l.ln2_bias});
  }
  views.push_back({"head_weight", &p.head_weight.a});
  return views;
}

std::vector<TrainingExample> seeded_batch(const EncoderConfig& cfg, std::uint64_t seed, int n_examples) {
  Rng rng(derive_seed(seed, "gradcheck-batch"));
  std::vector<TrainingExample> batch;
  const int len = std::min(4, cfg.max_len);
  for (int e = 0; e < n_examples; ++e) {
    EncoderInput x;
    x.token_ids.push_back(0);  // [CLS]
    x.segment_ids.push_back(0);
    for (int i = 1; i < len; ++i) {
      x.token_ids.push_back(static_cast<int>(rng.below(static_cast<std::uint32_t>(cfg.vocab_size))));
      x.segment_ids.push_back(static_cast<int>(rng.below(2)));
    }
    batch.emplace_back(std::move(x), corpus::kPolarityOrder[rng.below(3)]);
  }
  return batch;
}

}  // namespace

double grad_check(const EncoderConfig& cfg, std::uint64_t seed, double epsilon, int samples) {
  cfg.validate();
  if (!(epsilon > 0.0)) throw ValidationError("grad_check: epsilon must be positive");
  if (samples < 1) throw ValidationError("grad_check: samples must be >= 1");
  EncoderParams params = EncoderParams::init(cfg, seed);
  const std::vector<TrainingExample> batch = seeded_batch(cfg, seed, 4);
  BatchGradient analytic = loss_and_gradient(params, cfg, batch);

  auto param_views = tensor_views(params);
  auto grad_views = tensor_views(analytic.grad);
  // head_bias lives outside the flat views; probe it explicitly below.
  Rng rng(derive_seed(seed, "gradcheck-sample"));
  double max_rel = 0.0;
  // Central differences of a ~O(1) loss carry ~1e-11 roundoff, so the
  // denominator is floored at 1e-4: big gradients are compared
  // relatively, near-zero ones absolutely at the noise scale.
  auto probe = [&](double* slot, double analytic_g) {
    const double saved = *slot;
    *slot = saved + epsilon;
    const double up = loss_and_gradient(params, cfg, batch).loss;
    *slot = saved - epsilon;
    const double down = loss_and_gradient(params, cfg, batch).loss;
    *slot = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double rel =
        std::abs(analytic_g - numeric) / std::max(std::abs(analytic_g) + std::abs(numeric), 1e-4);
    max_rel = std::max(max_rel, rel);
  };
  for (int s = 0; s < samples; ++s) {
    const std::size_t t = static_cast<std::size_t>(s) % (param_views.size() + 1);
    if (t == param_views.size()) {
      const std::size_t i = rng.below(3);
      probe(&params.head_bias[i], analytic.grad.head_bias[i]);
      continue;
    }
    std::vector<double>& tensor = *param_views[t].second;
    const std::size_t i = rng.below(static_cast<std::uint32_t>(tensor.size()));
    probe(&tensor[i], (*grad_views[t].second)[i]);
  }
  return max_rel;
}

// ---- persistence ----

namespace {

json mat_to_json(const Mat& m) {
  return json{{"shape", {m.rows, m.cols}}, {"data", m.a}};
}

Mat mat_from_json(const json& j, int rows, int cols, const std::string& name) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw ParseError("encoder params: tensor " + name + " must carry shape and data");
  }
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
    throw ParseError("encoder params: tensor " + name + " shape mismatch, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Mat m(rows, cols);
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.a.size()) throw ParseError("encoder params: tensor " + name + " data size mismatch");
  m.a = data;
  return m;
}

std::vector<double> vec_from_json(const json& j, std::size_t size, const std::string& name) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != size) throw ParseError("encoder params: vector " + name + " size mismatch");
  return v;
}

}  // namespace

std::string save_params_json(const EncoderParams& params, const EncoderConfig& cfg) {
  json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "encoder";
  doc["config"] = {{"d_model", cfg.d_model}, {"d_k", cfg.d_k},           {"n_layers", cfg.n_layers},
                   {"max_len", cfg.max_len}, {"vocab_size", cfg.vocab_size}, {"n_classes", cfg.n_classes},
                   {"d_ff", cfg.d_ff}};
  json tensors;
  tensors["token_embedding"] = mat_to_json(params.token_embedding);
  tensors["position_embedding"] = mat_to_json(params.position_embedding);
  tensors["segment_embedding"] = mat_to_json(params.segment_embedding);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& lp = params.layers[l];
    json layer;
    layer["wq"] = mat_to_json(lp.wq);
    layer["wk"] = mat_to_json(lp.wk);
    layer["wv"] = mat_to_json(lp.wv);
    layer["wo"] = mat_to_json(lp.wo);
    layer["ln1_gain"] = lp.ln1_gain;
    layer["ln1_bias"] = lp.ln1_bias;
    layer["w1"] = mat_to_json(lp.w1);
    layer["b1"] = lp.b1;
    layer["w2"] = mat_to_json(lp.w2);
    layer["b2"] = lp.b2;
    layer["ln2_gain"] = lp.ln2_gain;
    layer["ln2_bias"] = lp.ln2_bias;
    tensors["layers"].push_back(layer);
  }
  tensors["head_weight"] = mat_to_json(params.head_weight);
  tensors["head_bias"] = params.head_bias;
  doc["tensors"] = tensors;
  return doc.dump(2) + "\n";
}

std::pair<EncoderParams, EncoderConfig> load_params_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("encoder params: invalid JSON: ") + e.what());
  }
  if (!doc.contains("format_version") || doc["format_version"] != 1) {
    throw ParseError("encoder params: unsupported format_version");
  }
  if (!doc.contains("model_kind") || doc["model_kind"] != "encoder") {
    throw ParseError("encoder params: model_kind must be 'encoder'");
  }
  const json& c = doc.at("config");
  EncoderConfig cfg;
  cfg.d_model = c.at("d_model").get<int>();
  cfg.d_k = c.at("d_k").get<int>();
  cfg.n_layers = c.at("n_layers").get<int>();
  cfg.max_len = c.at("max_len").get<int>();
  cfg.vocab_size = c.at("vocab_size").get<int>();
  cfg.n_classes = c.at("n_classes").get<int>();
  cfg.d_ff = c.at("d_ff").get<int>();
  cfg.validate();
  const json& tensors = doc.at("tensors");
  EncoderParams p = EncoderParams::zeros(cfg);
  p.token_embedding = mat_from_json(tensors.at("token_embedding"), cfg.vocab_size, cfg.d_model, "token_embedding");
  p.position_embedding =
      mat_from_json(tensors.at("position_embedding"), cfg.max_len, cfg.d_model, "position_embedding");
  p.segment_embedding = mat_from_json(tensors.at("segment_embedding"), 2, cfg.d_model, "segment_embedding");
  const json& layers = tensors.at("layers");
  if (!layers.is_array() || layers.size() != static_cast<std::size_t>(cfg.n_layers)) {
    throw ParseError("encoder params: layer count mismatch with config");
  }
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto dff = static_cast<std::size_t>(cfg.d_ff);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const json& layer = layers[l];
    auto& lp = p.layers[l];
    const std::string tag = "layers." + std::to_string(l) + ".";
    lp.wq = mat_from_json(layer.at("wq"), cfg.d_model, cfg.d_model, tag + "wq");
    lp.wk = mat_from_json(layer.at("wk"), cfg.d_model, cfg.d_model, tag + "wk");
    lp.wv = mat_from_json(layer.at("wv"), cfg.d_model, cfg.d_model, tag + "wv");
    lp.wo = mat_from_json(layer.at("wo"), cfg.d_model, cfg.d_model, tag + "wo");
    lp.ln1_gain = vec_from_json(layer.at("ln1_gain"), d, tag + "ln1_gain");
    lp.ln1_bias = vec_from_json(layer.at("ln1_bias"), d, tag + "ln1_bias");
    lp.w1 = mat_from_json(layer.at("w1"), cfg.d_model, cfg.d_ff, tag + "w1");
    lp.b1 = vec_from_json(layer.at("b1"), dff, tag + "b1");
    lp.w2 = mat_from_json(layer.at("w2"), cfg.d_ff, cfg.d_model, tag + "w2");
    lp.b2 = vec_from_json(layer.at("b2"), d, tag + "b2");
    lp.ln2_gain = vec_from_json(layer.at("ln2_gain"), d, tag + "ln2_gain");
    lp.ln2_bias = vec_from_json(layer.at("ln2_bias"), d, tag + "ln2_bias");
  }
  p.head_weight = mat_from_json(tensors.at("head_weight"), cfg.d_model, cfg.n_classes, "head_weight");
  const auto hb = tensors.at("head_bias").get<std::vector<double>>();
  if (hb.size() != 3) throw ParseError("encoder params: head_bias size mismatch");
  for (std::size_t i = 0; i < 3; ++i) p.head_bias[i] = hb[i];
  return {std::move(p), cfg};
}

}  // namespace absa::encoder
