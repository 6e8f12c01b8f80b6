// Acceptance suite: runs the project's ten acceptance criteria end to end
// against the committed fixtures and prints one PASS/FAIL line per
// criterion. Exit code 0 only when every criterion holds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/encoder.hpp"
#include "absa/eval.hpp"
#include "absa/knowledge.hpp"
#include "absa/llm_client.hpp"
#include "absa/rng.hpp"
#include "absa/run_config.hpp"
#include "absa/sentiment.hpp"
#include "absa/utf8.hpp"
#include "support/generators.hpp"
#include "support/stub_server.hpp"

namespace {

using namespace absa;
using SteadyClock = std::chrono::steady_clock;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw Failure(message);
}

std::string fixture_path(const std::string& name) {
  return std::string(ABSA_FIXTURE_DIR) + "/" + name;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

double seconds_since(SteadyClock::time_point start) {
  return std::chrono::duration<double>(SteadyClock::now() - start).count();
}

// ---- criterion 1: corpus round trip ----

void criterion_round_trip() {
  const auto start = SteadyClock::now();
  const std::vector<std::pair<std::string, corpus::Domain>> fixtures = {
      {"golden/minimal_canonical.xml", corpus::Domain::laptop()},
      {"mini_laptop.xml", corpus::Domain::laptop()},
      {"mini_restaurant.xml", corpus::Domain::restaurant()},
  };
  for (const auto& [name, domain] : fixtures) {
    const std::string text = read_file(fixture_path(name));
    const corpus::Dataset ds = corpus::parse_semeval(text, domain);
    corpus::validate(ds);
    const std::string serialized = corpus::serialize_semeval(ds);
    const corpus::Dataset again = corpus::parse_semeval(serialized, domain);
    require(again == ds, name + ": parse-serialize-parse changed the dataset");
    require(corpus::serialize_semeval(again) == serialized, name + ": serialization is not canonical");
  }
  // The committed canonical fixture is already in canonical form.
  const std::string canonical = read_file(fixture_path("golden/minimal_canonical.xml"));
  require(corpus::serialize_semeval(corpus::parse_semeval(canonical, corpus::Domain::laptop())) ==
              canonical,
          "canonical fixture did not serialize byte-identically");
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const corpus::Dataset ds = testgen::random_dataset(seed);
    const corpus::Dataset back = corpus::parse_semeval(corpus::serialize_semeval(ds), ds.domain);
    require(back == ds, "generated dataset " + std::to_string(seed) + " failed the round trip");
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 5.0, "round-trip runtime " + std::to_string(elapsed) + "s exceeds 5s");
}

// ---- criterion 2: NB against the brute-force posterior oracle ----

std::array<double, 3> brute_force_nb_scores(const std::vector<sentiment::LabeledExample>& examples,
                                            double alpha, int vocab_size,
                                            const sentiment::FeatureVector& query) {
  std::array<double, 3> scores{};
  for (int c = 0; c < 3; ++c) {
    double n_c = 0;
    for (const auto& ex : examples) {
      if (corpus::polarity_index(ex.label) == c) n_c += 1;
    }
    if (n_c == 0) {
      scores[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double score = std::log(n_c / static_cast<double>(examples.size()));
    double total_c = 0;
    for (const auto& ex : examples) {
      if (corpus::polarity_index(ex.label) != c) continue;
      for (const auto& [t, cnt] : ex.features) total_c += cnt;
    }
    for (const auto& [t, cnt] : query) {
      double count_ct = 0;
      for (const auto& ex : examples) {
        if (corpus::polarity_index(ex.label) != c) continue;
        const auto it = ex.features.find(t);
        if (it != ex.features.end()) count_ct += it->second;
      }
      score += cnt * std::log((count_ct + alpha) / (total_c + alpha * vocab_size));
    }
    scores[c] = score;
  }
  return scores;
}

void criterion_nb_oracle() {
  Rng rng(4242);
  for (int round = 0; round < 200; ++round) {
    const int vocab_size = 1 + static_cast<int>(rng.below(10));
    const int n = 1 + static_cast<int>(rng.below(20));
    std::vector<sentiment::LabeledExample> examples;
    for (int i = 0; i < n; ++i) {
      sentiment::LabeledExample ex;
      ex.label = corpus::kPolarityOrder[rng.below(3)];
      const int n_tokens = static_cast<int>(rng.below(7));
      for (int t = 0; t < n_tokens; ++t) {
        ex.features[static_cast<int>(rng.below(static_cast<std::uint32_t>(vocab_size)))] += 1;
      }
      examples.push_back(std::move(ex));
    }
    sentiment::Vocabulary vocab;
    for (int i = 0; i < vocab_size; ++i) vocab.add("w" + std::to_string(i));
    const sentiment::NBModel model = sentiment::train_nb(examples, 1.0, vocab);
    sentiment::FeatureVector query;
    for (int t = 0; t < static_cast<int>(rng.below(6)); ++t) {
      query[static_cast<int>(rng.below(static_cast<std::uint32_t>(vocab_size)))] += 1;
    }
    const auto expected = brute_force_nb_scores(examples, 1.0, vocab_size, query);
    const sentiment::Prediction got = sentiment::predict(model, query);
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (expected[c] > expected[best]) best = c;
    }
    require(got.label == corpus::kPolarityOrder[best],
            "round " + std::to_string(round) + ": argmax disagrees with the oracle");
    for (int c = 0; c < 3; ++c) {
      if (std::isinf(expected[c])) {
        require(std::isinf(got.scores[c]), "round " + std::to_string(round) + ": missing -inf score");
      } else {
        require(std::abs(got.scores[c] - expected[c]) <= 1e-9 * std::max(1.0, std::abs(expected[c])),
                "round " + std::to_string(round) + ": log-score off by more than 1e-9");
      }
    }
  }
}

// ---- criterion 3: gradient checks ----

void criterion_gradients() {
  const auto start = SteadyClock::now();
  // Logistic regression against central finite differences.
  Rng rng(17);
  sentiment::LRModel model;
  const int v = 6;
  sentiment::Vocabulary vocab;
  for (int i = 0; i < v; ++i) vocab.add("w" + std::to_string(i));
  model.vocab = vocab;
  for (auto& w : model.weights) {
    w.resize(v);
    for (auto& x : w) x = rng.uniform(-0.5, 0.5);
  }
  for (auto& b : model.bias) b = rng.uniform(-0.5, 0.5);
  std::vector<sentiment::LabeledExample> batch;
  for (int i = 0; i < 5; ++i) {
    sentiment::LabeledExample ex;
    ex.label = corpus::kPolarityOrder[rng.below(3)];
    for (int t = 0; t < 4; ++t) ex.features[static_cast<int>(rng.below(v))] += 1;
    batch.push_back(std::move(ex));
  }
  const double l2 = 0.01;
  const auto grad = sentiment::lr_loss_grad(model, batch, l2);
  const double h = 1e-6;
  double max_rel = 0.0;
  auto probe = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + h;
    const double up = sentiment::lr_loss_grad(model, batch, l2).loss;
    *slot = saved - h;
    const double down = sentiment::lr_loss_grad(model, batch, l2).loss;
    *slot = saved;
    const double numeric = (up - down) / (2 * h);
    max_rel = std::max(max_rel, std::abs(analytic - numeric) /
                                    std::max(std::abs(analytic) + std::abs(numeric), 1e-8));
  };
  for (std::size_t c = 0; c < 3; ++c) {
    probe(&model.bias[c], grad.grad_bias[c]);
    for (std::size_t t = 0; t < static_cast<std::size_t>(v); ++t) {
      probe(&model.weights[c][t], grad.grad_weights[c][t]);
    }
  }
  require(max_rel < 1e-6, "LR gradient relative error " + std::to_string(max_rel) + " exceeds 1e-6");

  // Encoder training-loss gradients across the config grid.
  for (int layers : {1, 2}) {
    for (int d : {4, 8}) {
      encoder::EncoderConfig cfg;
      cfg.n_layers = layers;
      cfg.d_model = d;
      cfg.d_k = d;
      cfg.d_ff = 2 * d;
      const double err = encoder::grad_check(cfg, 0, 1e-5, 200);
      require(err < 1e-5, "encoder grad check (layers=" + std::to_string(layers) +
                              ", d_model=" + std::to_string(d) + ") error " + std::to_string(err) +
                              " exceeds 1e-5");
    }
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 60.0, "gradient-check runtime " + std::to_string(elapsed) + "s exceeds 60s");
}

// ---- criterion 4: attention normalization ----

void criterion_attention() {
  Rng rng(31337);
  for (int round = 0; round < 1000; ++round) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const int dk = 1 + static_cast<int>(rng.below(10));
    encoder::Mat q(n, dk), k(n, dk), ones(n, 1);
    for (auto* m : {&q, &k}) {
      for (double& x : m->a) x = rng.uniform(-4.0, 4.0);
    }
    for (double& x : ones.a) x = 1.0;
    // With V = all-ones, each output row is exactly the softmax row sum.
    const encoder::Mat sums = encoder::attention(q, k, ones);
    for (int i = 0; i < n; ++i) {
      require(std::abs(sums(i, 0) - 1.0) <= 1e-9,
              "softmax row sum off by more than 1e-9 in round " + std::to_string(round));
    }
  }
  // Single key: the value passes through.
  encoder::Mat q1(1, 1), k1(1, 1), v1(1, 1);
  v1(0, 0) = 7.0;
  require(std::abs(encoder::attention(q1, k1, v1)(0, 0) - 7.0) <= 1e-12, "single-key case drifted");
  // All-zero scores: rows average.
  encoder::Mat q2(2, 2), k2(2, 2), v2(2, 2);
  v2(0, 0) = 1.0;
  v2(1, 1) = 1.0;
  const encoder::Mat avg = encoder::attention(q2, k2, v2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      require(std::abs(avg(i, j) - 0.5) <= 1e-12, "uniform-softmax case drifted");
    }
  }
  // 2x2 identity case against scalar arithmetic.
  encoder::Mat q3(2, 2), k3(2, 2), v3(2, 2);
  q3(0, 0) = q3(1, 1) = 1.0;
  k3(0, 0) = k3(1, 1) = 1.0;
  v3(0, 0) = v3(1, 1) = 1.0;
  const double hi = std::exp(1.0 / std::sqrt(2.0));
  const double p_self = hi / (hi + 1.0);
  const encoder::Mat out = encoder::attention(q3, k3, v3);
  require(std::abs(out(0, 0) - p_self) <= 1e-12 && std::abs(out(1, 1) - p_self) <= 1e-12 &&
              std::abs(out(0, 1) - (1.0 - p_self)) <= 1e-12,
          "2x2 identity case disagrees with the scalar oracle");
}

// ---- criterion 5: encoder overfit sanity ----

void criterion_overfit() {
  const auto start = SteadyClock::now();
  encoder::EncoderConfig cfg;
  cfg.d_model = 8;
  cfg.d_k = 8;
  cfg.n_layers = 2;
  cfg.max_len = 8;
  cfg.vocab_size = 8;
  cfg.d_ff = 16;
  std::vector<encoder::TrainingExample> examples;
  for (int i = 0; i < 32; ++i) {
    const int label = i % 3;
    examples.emplace_back(encoder::EncoderInput{{0, 1 + label}, {0, 1}},
                          corpus::kPolarityOrder[label]);
  }
  encoder::EncoderHyper hyper;
  hyper.learning_rate = 0.5;
  hyper.epochs = 200;
  hyper.seed = 0;
  const encoder::TrainedEncoder trained = encoder::train_encoder(examples, cfg, hyper);
  int correct = 0;
  for (const auto& [x, label] : examples) {
    const auto logits = encoder::encoder_forward(trained.params, cfg, x).logits;
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (logits[c] > logits[best]) best = c;
    }
    if (corpus::kPolarityOrder[best] == label) ++correct;
  }
  require(correct == 32, "training accuracy " + std::to_string(correct) + "/32 after 200 epochs");
  require(trained.loss_trace.size() == 200, "missing loss trace");
  for (std::size_t e = 6; e < trained.loss_trace.size(); ++e) {
    require(trained.loss_trace[e] <= trained.loss_trace[e - 1] + 1e-12,
            "loss increased at epoch " + std::to_string(e));
  }
  const double elapsed = seconds_since(start);
  require(elapsed < 30.0, "overfit runtime " + std::to_string(elapsed) + "s exceeds 30s");
}

// ---- criterion 6: pipeline golden run ----

void criterion_golden_matrix() {
  const cli::RunConfig config = cli::RunConfig::load_file(fixture_path("golden_matrix.cfg"));
  const eval::MatrixConfig cfg = config.build_matrix_config();
  const eval::EvalReport report = eval::run_matrix(cfg);
  require(eval::emit_report(report, eval::ReportFormat::json) ==
              read_file(fixture_path("golden/report.json")),
          "report.json differs from the committed golden");
  require(eval::emit_report(report, eval::ReportFormat::csv) ==
              read_file(fixture_path("golden/report.csv")),
          "report.csv differs from the committed golden");
  require(eval::emit_report(report, eval::ReportFormat::table) ==
              read_file(fixture_path("golden/report.table.txt")),
          "report.table.txt differs from the committed golden");
  // The baseline block must carry the ten published accuracy values.
  const std::vector<std::tuple<std::string, std::string, double>> expected = {
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
  require(report.baselines.size() == expected.size(), "baseline row count is not 10");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& [label, domain, accuracy] = expected[i];
    require(report.baselines[i].label == label && report.baselines[i].domain == domain &&
                report.baselines[i].accuracy == accuracy,
            "baseline row " + std::to_string(i) + " does not match the published value");
  }
}

// ---- criterion 7: knowledge injection beats the identity map ----

void criterion_knowledge_direction() {
  const cli::RunConfig config = cli::RunConfig::load_file(fixture_path("lexicon_matrix.cfg"));
  eval::MatrixConfig with_map = config.build_matrix_config();
  with_map.mode = "gold-aspect";
  eval::MatrixConfig without_map = with_map;
  without_map.use_category_map = false;
  const auto cross_f1 = [](const eval::EvalReport& report) {
    for (const auto& run : report.runs) {
      if (run.train_domain == "laptop" && run.test_domain == "restaurant") return run.aspect_f1;
    }
    throw Failure("cross-domain run missing from the matrix");
  };
  const double mapped = cross_f1(eval::run_matrix(with_map));
  const double identity = cross_f1(eval::run_matrix(without_map));
  require(mapped > identity, "category map F1 " + std::to_string(mapped) +
                                 " does not exceed identity-map F1 " + std::to_string(identity));
}

// ---- criterion 8: masking identity and the committed probe pair ----

void criterion_mask_probe() {
  const cli::RunConfig config = cli::RunConfig::load_file(fixture_path("lexicon_matrix.cfg"));
  const eval::MatrixConfig cfg = config.build_matrix_config();
  const auto probe = eval::mask_probe(cfg, {0.5, 0.0});
  require(probe.size() == 2 && probe[0].first == 0.0 && probe[1].first == 0.5,
          "probe fractions are not sorted ascending");

  eval::MatrixConfig single = cfg;
  single.mode = "gold-aspect";
  const eval::EvalReport full = eval::run_matrix(single);
  const eval::RunResult* unmasked = nullptr;
  for (const auto& run : full.runs) {
    if (run.train_domain == "laptop" && run.test_domain == "restaurant") unmasked = &run;
  }
  require(unmasked != nullptr, "cross-domain cell missing");
  require(probe[0].second == *unmasked, "fraction 0.0 does not reproduce the unmasked run");
  require(eval::emit_probe_json(probe) == read_file(fixture_path("golden/probe_mask.json")),
          "probe_mask.json differs from the committed golden");
}

// ---- criterion 9: LLM client hermeticity ----

void criterion_llm_hermeticity() {
  llm::RetryPolicy fast;
  fast.max_attempts = 4;
  fast.base_delay = std::chrono::milliseconds(1);
  const auto cache_root = std::filesystem::temp_directory_path() / "absa-acceptance-cache";
  std::filesystem::remove_all(cache_root);

  llm::LlmRequest request;
  request.model_name = "llama";
  request.temperature = 0.0;
  request.max_tokens = 64;
  request.messages = {{"user", "Extract aspects from: The battery life rocks"}};

  {  // 500,500,200 -> success on the third attempt.
    teststub::StubServer stub([](int call, const httplib::Request&, httplib::Response& res) {
      if (call <= 2) {
        res.status = 500;
      } else {
        res.set_content(teststub::chat_body("[]"), "application/json");
      }
    });
    llm::Client client(cache_root / "retry", fast);
    request.endpoint_url = stub.url();
    const llm::LlmResponse response = client.complete(request);
    require(response.text == "[]" && !response.cached, "retry sequence returned the wrong response");
    require(stub.calls() == 3, "expected exactly 3 attempts, saw " + std::to_string(stub.calls()));
  }

  {  // 401 -> immediate failure, zero retries.
    teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
      res.status = 401;
    });
    llm::Client client(cache_root / "auth", fast);
    request.endpoint_url = stub.url();
    bool threw = false;
    try {
      client.complete(request);
    } catch (const llm::TransportError& e) {
      threw = e.status == 401;
    }
    require(threw, "401 did not raise an authorization failure");
    require(stub.calls() == 1, "401 was retried");
  }

  {  // Warm cache: zero network calls, byte-identical replay.
    std::string first_text;
    {
      teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
        res.set_content(teststub::chat_body(
                            R"([{"term":"battery life","category":"LAPTOP#GENERAL","polarity":"positive"}])"),
                        "application/json");
      });
      llm::Client client(cache_root / "warm", fast);
      request.endpoint_url = stub.url();
      first_text = client.complete(request).text;
      require(stub.calls() == 1, "cold call did not hit the network exactly once");
    }
    llm::Client warm(cache_root / "warm", fast);
    request.endpoint_url = "http://127.0.0.1:9";  // unreachable on purpose
    const llm::LlmResponse replay = warm.complete(request);
    require(replay.cached, "warm cache missed");
    require(replay.text == first_text, "cached replay is not byte-identical");
    require(warm.network_calls() == 0, "warm rerun touched the network");
  }

  {  // Schema violations carry the raw payload.
    const std::string prose = "The aspects are battery life and screen.";
    bool threw = false;
    try {
      llm::parse_extraction_payload(prose);
    } catch (const llm::SchemaError& e) {
      threw = e.payload == prose;
    }
    require(threw, "prose payload did not raise a SchemaError with the raw payload");

    teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"message":{"role":"assistant"}}]})", "application/json");
    });
    llm::Client client(cache_root / "schema", fast);
    request.endpoint_url = stub.url();
    threw = false;
    try {
      client.complete(request);
    } catch (const llm::SchemaError& e) {
      threw = e.payload.find("choices") != std::string::npos;
    }
    require(threw, "missing-content response did not raise a SchemaError with the body");
  }
}

}  // namespace

int main() {
  const auto suite_start = SteadyClock::now();
  struct Criterion {
    int id;
    const char* name;
    std::function<void()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "corpus round-trip identity (fixtures + 500 generated)", criterion_round_trip},
      {2, "NB equivalence with the brute-force posterior oracle (200 corpora)", criterion_nb_oracle},
      {3, "LR and encoder gradient checks against central differences", criterion_gradients},
      {4, "attention row normalization (1000 shapes) and pinned examples", criterion_attention},
      {5, "encoder overfit sanity (100% accuracy, monotone loss)", criterion_overfit},
      {6, "byte-exact golden matrix run with the published baseline block", criterion_golden_matrix},
      {7, "cross-domain aspect F1: category map beats identity map", criterion_knowledge_direction},
      {8, "masking identity at fraction 0 and byte-stable probe pair", criterion_mask_probe},
      {9, "LLM client retries, cache hermeticity, schema errors", criterion_llm_hermeticity},
  };
  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = SteadyClock::now();
    try {
      criterion.run();
      std::printf("PASS  %2d  %s (%.2fs)\n", criterion.id, criterion.name, seconds_since(start));
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL  %2d  %s: %s\n", criterion.id, criterion.name, e.what());
    }
    std::fflush(stdout);
  }
  // Criterion 10: the acceptance suite itself (which contains every heavy
  // numeric check) must finish well inside the 3-minute budget.
  const double total = seconds_since(suite_start);
  if (total < 180.0) {
    std::printf("PASS  10  acceptance wall-clock %.2fs < 180s budget\n", total);
  } else {
    ++failures;
    std::printf("FAIL  10  acceptance wall-clock %.2fs exceeds the 180s budget\n", total);
  }
  return failures == 0 ? 0 : 1;
}
