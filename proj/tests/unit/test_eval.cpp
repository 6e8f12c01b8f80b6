#include <doctest.h>

#include <cmath>

#include "absa/errors.hpp"
#include "absa/eval.hpp"
#include "absa/extract.hpp"
#include "absa/rng.hpp"
#include "absa/utf8.hpp"

#include <filesystem>

#include "support/stub_server.hpp"

using namespace absa;
using namespace absa::corpus;
using namespace absa::eval;

namespace {

// Brute-force per-class precision/recall/F oracle, recomputed from the
// raw label pairs with no shared code with macro_f1.
double brute_force_macro_f1(const std::vector<std::pair<Polarity, std::optional<Polarity>>>& pairs) {
  double sum = 0;
  int classes = 0;
  for (Polarity c : kPolarityOrder) {
    bool present = false;
    double tp = 0, fp = 0, fn = 0;
    for (const auto& [gold, pred] : pairs) {
      if (gold == c || (pred && *pred == c)) present = true;
      if (pred && *pred == c && gold == c) tp += 1;
      if (pred && *pred == c && gold != c) fp += 1;
      if (gold == c && (!pred || *pred != c)) fn += 1;
    }
    if (!present) continue;
    ++classes;
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0;
    sum += p + r > 0 ? 2 * p * r / (p + r) : 0;
  }
  return classes == 0 ? 1.0 : sum / classes;
}

Sentence make_sentence(const std::string& id, const std::string& text,
                       const std::vector<std::tuple<std::string, std::string, Polarity>>& opinions) {
  Sentence s{id, text, {}};
  for (const auto& [target, category, polarity] : opinions) {
    Opinion op;
    op.category = Category::parse(category);
    op.polarity = polarity;
    if (!target.empty()) {
      const auto span = extract::align_span(text, target);
      REQUIRE(span.has_value());
      op.span = *span;
      op.target = utf8::slice(text, span->start, span->end);
    }
    s.opinions.push_back(op);
  }
  return s;
}

// One gold opinion per item, labels in order; predictions keyed by index.
std::pair<Dataset, PolarityPredictions> label_fixture(
    const std::vector<std::pair<Polarity, std::optional<Polarity>>>& pairs) {
  Dataset ds{Domain::laptop(), {Review{"r", {}}}};
  PolarityPredictions preds;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string id = "s" + std::to_string(i);
    Sentence s{id, "word", {}};
    Opinion op;
    op.category = Category::parse("LAPTOP#GENERAL");
    op.polarity = pairs[i].first;
    s.opinions.push_back(op);
    ds.reviews[0].sentences.push_back(std::move(s));
    if (pairs[i].second) preds.emplace_back(OpinionKey{id, 0}, *pairs[i].second);
  }
  return {std::move(ds), std::move(preds)};
}

Dataset mini_laptop() {
  Dataset ds{Domain::laptop(), {}};
  ds.reviews.push_back(Review{
      "L1",
      {make_sentence("L1:1", "The battery life is great", {{"battery life", "LAPTOP#BATTERY", Polarity::positive}}),
       make_sentence("L1:2", "The screen looks terrible", {{"screen", "LAPTOP#DISPLAY", Polarity::negative}})}});
  ds.reviews.push_back(Review{
      "L2",
      {make_sentence("L2:1", "The keyboard is okay", {{"keyboard", "LAPTOP#GENERAL", Polarity::neutral}}),
       make_sentence("L2:2", "Customer service was terrible", {{"service", "LAPTOP#SUPPORT", Polarity::negative}})}});
  ds.reviews.push_back(Review{
      "L3",
      {make_sentence("L3:1", "The price is great for this laptop",
                     {{"price", "LAPTOP#PRICE", Polarity::positive}, {"laptop", "LAPTOP#GENERAL", Polarity::positive}}),
       make_sentence("L3:2", "Overall it is awful", {{"", "LAPTOP#GENERAL", Polarity::negative}})}});
  return ds;
}

Dataset mini_restaurant() {
  Dataset ds{Domain::restaurant(), {}};
  ds.reviews.push_back(Review{
      "R1",
      {make_sentence("R1:1", "The pizza was great", {{"pizza", "FOOD#QUALITY", Polarity::positive}}),
       make_sentence("R1:2", "The service was terrible", {{"service", "SERVICE#GENERAL", Polarity::negative}})}});
  ds.reviews.push_back(Review{
      "R2",
      {make_sentence("R2:1", "The price was okay", {{"price", "RESTAURANT#PRICES", Polarity::neutral}}),
       make_sentence("R2:2", "Amazing service", {{"service", "SERVICE#GENERAL", Polarity::positive}})}});
  return ds;
}

knowledge::KnowledgeSource bridge_knowledge() {
  knowledge::KnowledgeSource ks;
  ks.add_lexicon_entry({"battery life", Domain::laptop(), Category::parse("LAPTOP#BATTERY")});
  ks.add_lexicon_entry({"screen", Domain::laptop(), Category::parse("LAPTOP#DISPLAY")});
  ks.add_lexicon_entry({"keyboard", Domain::laptop(), Category::parse("LAPTOP#GENERAL")});
  ks.add_lexicon_entry({"service", Domain::laptop(), Category::parse("LAPTOP#SUPPORT")});
  ks.add_lexicon_entry({"price", Domain::laptop(), Category::parse("LAPTOP#PRICE")});
  ks.add_lexicon_entry({"laptop", Domain::laptop(), Category::parse("LAPTOP#GENERAL")});
  ks.add_lexicon_entry({"pizza", Domain::restaurant(), Category::parse("FOOD#QUALITY")});
  ks.add_lexicon_entry({"service", Domain::restaurant(), Category::parse("SERVICE#GENERAL")});
  ks.add_lexicon_entry({"price", Domain::restaurant(), Category::parse("RESTAURANT#PRICES")});
  ks.add_category_mapping(Category::parse("LAPTOP#SUPPORT"), Domain::restaurant(),
                          Category::parse("SERVICE#GENERAL"));
  ks.add_category_mapping(Category::parse("LAPTOP#PRICE"), Domain::restaurant(),
                          Category::parse("RESTAURANT#PRICES"));
  ks.add_category_mapping(Category::parse("SERVICE#GENERAL"), Domain::laptop(),
                          Category::parse("LAPTOP#SUPPORT"));
  ks.add_category_mapping(Category::parse("RESTAURANT#PRICES"), Domain::laptop(),
                          Category::parse("LAPTOP#PRICE"));
  return ks;
}

MatrixConfig lexicon_config() {
  MatrixConfig cfg;
  cfg.corpora = {mini_laptop(), mini_restaurant()};
  cfg.ks = bridge_knowledge();
  cfg.extractor = "lexicon";
  cfg.classifier = "nb";
  cfg.mode = "both";
  cfg.seed = 0;
  return cfg;
}

}  // namespace

TEST_SUITE("eval.polarity_accuracy") {
  TEST_CASE("all correct, partial, and empty predictions") {
    const auto [gold, preds] = label_fixture({{Polarity::positive, Polarity::positive},
                                              {Polarity::negative, Polarity::negative},
                                              {Polarity::neutral, Polarity::neutral}});
    CHECK(polarity_accuracy(preds, gold) == 1.0);

    const auto [gold2, preds2] = label_fixture({{Polarity::positive, Polarity::positive},
                                                {Polarity::negative, Polarity::positive},
                                                {Polarity::neutral, Polarity::neutral}});
    CHECK(polarity_accuracy(preds2, gold2) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto [gold3, _ignored] = label_fixture({{Polarity::positive, std::nullopt}});
    CHECK(polarity_accuracy({}, gold3) == 0.0);
  }

  TEST_CASE("missing predictions count as wrong; dangling keys are errors") {
    const auto [gold, preds] = label_fixture({{Polarity::positive, Polarity::positive},
                                              {Polarity::negative, std::nullopt}});
    CHECK(polarity_accuracy(preds, gold) == 0.5);
    PolarityPredictions dangling = {{OpinionKey{"nope", 0}, Polarity::positive}};
    CHECK_THROWS_AS(polarity_accuracy(dangling, gold), ValidationError);
    PolarityPredictions duplicated = {{preds[0].first, Polarity::positive},
                                      {preds[0].first, Polarity::negative}};
    CHECK_THROWS_AS(polarity_accuracy(duplicated, gold), ValidationError);
  }
}

TEST_SUITE("eval.macro_f1") {
  TEST_CASE("perfect predictions score 1") {
    const auto [gold, preds] = label_fixture({{Polarity::positive, Polarity::positive},
                                              {Polarity::negative, Polarity::negative}});
    CHECK(macro_f1(preds, gold) == 1.0);
  }

  TEST_CASE("binary all-wrong scores 0 with neutral absent everywhere") {
    const auto [gold, preds] = label_fixture({{Polarity::positive, Polarity::negative},
                                              {Polarity::negative, Polarity::positive}});
    CHECK(macro_f1(preds, gold) == 0.0);
  }

  TEST_CASE("six-item confusion fixture matches the committed value and the oracle") {
    const std::vector<std::pair<Polarity, std::optional<Polarity>>> pairs = {
        {Polarity::positive, Polarity::positive}, {Polarity::positive, Polarity::positive},
        {Polarity::negative, Polarity::negative}, {Polarity::negative, Polarity::negative},
        {Polarity::negative, Polarity::neutral},  {Polarity::neutral, Polarity::positive}};
    const auto [gold, preds] = label_fixture(pairs);
    const double got = macro_f1(preds, gold);
    CHECK(got == doctest::Approx(brute_force_macro_f1(pairs)).epsilon(1e-12));
    CHECK(got == doctest::Approx(0.5333).epsilon(5e-5));
  }

  TEST_CASE("agrees with the brute-force oracle on random label tables") {
    Rng rng(606);
    for (int round = 0; round < 50; ++round) {
      std::vector<std::pair<Polarity, std::optional<Polarity>>> pairs;
      const int n = 1 + static_cast<int>(rng.below(12));
      for (int i = 0; i < n; ++i) {
        const Polarity gold_label = kPolarityOrder[rng.below(3)];
        std::optional<Polarity> pred;
        if (rng.below(4) != 0) pred = kPolarityOrder[rng.below(3)];
        pairs.emplace_back(gold_label, pred);
      }
      const auto [gold, preds] = label_fixture(pairs);
      CHECK(macro_f1(preds, gold) == doctest::Approx(brute_force_macro_f1(pairs)).epsilon(1e-12));
    }
  }
}

TEST_SUITE("eval.aspect_prf") {
  TEST_CASE("gold against itself is perfect") {
    const Dataset ds = mini_laptop();
    std::map<std::string, std::vector<Span>> preds;
    for (const auto& review : ds.reviews) {
      for (const auto& sentence : review.sentences) {
        for (const auto& op : sentence.opinions) {
          if (op.span) preds[sentence.id].push_back(*op.span);
        }
      }
    }
    const Prf prf = aspect_prf(preds, ds, SpanMatch::exact);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == 1.0);
    CHECK(prf.f1 == 1.0);
  }

  TEST_CASE("no predictions at all scores zero by convention") {
    const Prf prf = aspect_prf({}, mini_laptop(), SpanMatch::exact);
    CHECK(prf.precision == 0.0);
    CHECK(prf.recall == 0.0);
    CHECK(prf.f1 == 0.0);
  }

  TEST_CASE("one of two gold found plus one spurious is exactly one half") {
    Dataset ds{Domain::laptop(), {Review{"r", {make_sentence(
        "s1", "great screen and great keyboard",
        {{"screen", "LAPTOP#DISPLAY", Polarity::positive},
         {"keyboard", "LAPTOP#GENERAL", Polarity::positive}})}}}};
    std::map<std::string, std::vector<Span>> preds;
    preds["s1"] = {*extract::align_span(ds.reviews[0].sentences[0].text, "screen"), Span{0, 5}};
    const Prf prf = aspect_prf(preds, ds, SpanMatch::exact);
    CHECK(prf.precision == 0.5);
    CHECK(prf.recall == 0.5);
    CHECK(prf.f1 == 0.5);
  }

  TEST_CASE("overlap mode accepts drifted spans that exact mode rejects") {
    Dataset ds{Domain::laptop(),
               {Review{"r", {make_sentence("s1", "the battery life rocks",
                                           {{"battery life", "LAPTOP#BATTERY", Polarity::positive}})}}}};
    std::map<std::string, std::vector<Span>> preds;
    preds["s1"] = {Span{4, 11}};  // "battery" only
    CHECK(aspect_prf(preds, ds, SpanMatch::exact).f1 == 0.0);
    CHECK(aspect_prf(preds, ds, SpanMatch::overlap).f1 == 1.0);
  }
}

TEST_SUITE("eval.baselines") {
  TEST_CASE("the ten published rows are pinned") {
    const auto& rows = table1_baselines();
    REQUIRE(rows.size() == 10);
    CHECK(rows[0].label == "Deep Memory Network");
    CHECK(rows[0].domain == "laptop");
    CHECK(rows[0].accuracy == 72.21);
    CHECK(rows[1].accuracy == 80.95);
    CHECK(rows[2].accuracy == 82.3);
    CHECK(rows[3].accuracy == 81.5);
    CHECK(rows[4].accuracy == 92.1);
    CHECK(rows[5].accuracy == 88.9);
    CHECK(rows[6].accuracy == 90.4);
    CHECK(rows[7].accuracy == 91.4);
    CHECK(rows[8].accuracy == 91.1);
    CHECK(rows[9].accuracy == 90.6);
  }
}

TEST_SUITE("eval.run_matrix") {
  TEST_CASE("two-domain lexicon matrix is deterministic and fully ordered") {
    const MatrixConfig cfg = lexicon_config();
    const EvalReport a = run_matrix(cfg);
    const EvalReport b = run_matrix(cfg);
    CHECK(a.runs == b.runs);
    CHECK(a.config_digest == b.config_digest);
    REQUIRE(a.runs.size() == 8);  // 2x2 domains x 2 modes
    CHECK(a.runs[0].train_domain == "laptop");
    CHECK(a.runs[0].test_domain == "laptop");
    CHECK(a.runs[0].mode == "gold-aspect");
    CHECK(a.runs[1].mode == "joint");
    CHECK(a.runs[2].test_domain == "restaurant");
    CHECK(a.runs[4].train_domain == "restaurant");
    for (const auto& r : a.runs) {
      CHECK(r.accuracy >= 0.0);
      CHECK(r.accuracy <= 1.0);
      CHECK(r.macro_f1 >= 0.0);
      CHECK(r.macro_f1 <= 1.0);
      CHECK(r.aspect_f1 >= 0.0);
      CHECK(r.aspect_f1 <= 1.0);
    }
    // Same-domain lexicon extraction recovers every gold span here.
    CHECK(a.runs[0].aspect_f1 == 1.0);
  }

  TEST_CASE("single-domain config yields a 1x1 matrix") {
    MatrixConfig cfg = lexicon_config();
    cfg.corpora = {mini_laptop()};
    cfg.mode = "gold-aspect";
    const EvalReport report = run_matrix(cfg);
    REQUIRE(report.runs.size() == 1);
    CHECK(report.runs[0].train_domain == "laptop");
    CHECK(report.runs[0].test_domain == "laptop");
  }

  TEST_CASE("the bundled category map strictly beats the identity map cross-domain") {
    MatrixConfig with_map = lexicon_config();
    with_map.mode = "gold-aspect";
    MatrixConfig without_map = with_map;
    without_map.use_category_map = false;

    const EvalReport a = run_matrix(with_map);
    const EvalReport b = run_matrix(without_map);
    const auto cross = [](const EvalReport& r) {
      for (const auto& run : r.runs) {
        if (run.train_domain == "laptop" && run.test_domain == "restaurant") return run;
      }
      FAIL("missing cross-domain run");
      return r.runs[0];
    };
    CHECK(cross(a).aspect_f1 > cross(b).aspect_f1);
    CHECK(cross(b).aspect_f1 == 0.0);
    CHECK(cross(a).aspect_f1 > 0.0);
  }

  TEST_CASE("lr and encoder classifiers run the same matrix deterministically") {
    MatrixConfig cfg = lexicon_config();
    cfg.mode = "gold-aspect";
    cfg.classifier = "lr";
    cfg.lr_hyper.epochs = 30;
    const EvalReport lr_a = run_matrix(cfg);
    const EvalReport lr_b = run_matrix(cfg);
    CHECK(lr_a.runs == lr_b.runs);

    cfg.classifier = "encoder";
    cfg.encoder_hyper.epochs = 15;
    cfg.encoder_hyper.learning_rate = 0.5;
    const EvalReport enc_a = run_matrix(cfg);
    const EvalReport enc_b = run_matrix(cfg);
    CHECK(enc_a.runs == enc_b.runs);
    CHECK(enc_a.runs[0].classifier == "encoder");
  }

  TEST_CASE("cell failures carry the run coordinates") {
    MatrixConfig cfg = lexicon_config();
    cfg.extractor = "mock";
    extract::MockFixture fixture;
    extract::AspectPrediction bad;
    bad.term = "mismatch";
    bad.span = Span{0, 3};
    fixture.add("R1:1", {bad});
    cfg.mock_fixture = fixture;
    CHECK_THROWS_WITH_AS(run_matrix(cfg), doctest::Contains("test=restaurant"), ValidationError);
  }
}

TEST_SUITE("eval.llm_matrix") {
  TEST_CASE("llm-backed matrix is deterministic and hermetic on a warm cache") {
    // The stub answers every sentence with an empty aspect array except
    // one canned hit, exercising alignment inside the matrix.
    teststub::StubServer stub([](int, const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const std::string prompt = body.at("messages").at(0).at("content").get<std::string>();
      if (prompt.find("The battery life is great") != std::string::npos) {
        res.set_content(
            teststub::chat_body(
                R"([{"term":"battery life","category":"LAPTOP#BATTERY","polarity":"positive"}])"),
            "application/json");
      } else {
        res.set_content(teststub::chat_body("[]"), "application/json");
      }
    });
    const auto cache_dir = std::filesystem::temp_directory_path() / "absa-matrix-cache";
    std::filesystem::remove_all(cache_dir);

    MatrixConfig cfg = lexicon_config();
    cfg.corpora = {mini_laptop()};
    cfg.mode = "gold-aspect";
    cfg.extractor = "llm";
    cfg.prompt_template = extract::PromptTemplate::load("{{domain}} {{knowledge}} {{sentence}}");
    cfg.llm = {stub.url(), "llama", 64};
    cfg.cache_dir = cache_dir;

    const EvalReport cold = run_matrix(cfg);
    const int cold_calls = stub.calls();
    CHECK(cold_calls == 6);  // one request per sentence
    REQUIRE(cold.runs.size() == 1);
    CHECK(cold.runs[0].n_predicted == 1);

    // Warm rerun: byte-identical report, zero new network traffic, and it
    // works even when the endpoint moves.
    cfg.llm.endpoint_url = "http://127.0.0.1:9";
    const EvalReport warm = run_matrix(cfg);
    CHECK(stub.calls() == cold_calls);
    CHECK(warm.runs == cold.runs);
    CHECK(emit_report(warm, ReportFormat::json) == emit_report(cold, ReportFormat::json));
  }
}

TEST_SUITE("eval.mask_probe") {
  TEST_CASE("fraction zero reproduces the unmasked run and output is sorted") {
    MatrixConfig cfg = lexicon_config();
    cfg.probe_train = "laptop";
    cfg.probe_test = "laptop";
    const auto probe = mask_probe(cfg, {0.5, 0.0});
    REQUIRE(probe.size() == 2);
    CHECK(probe[0].first == 0.0);
    CHECK(probe[1].first == 0.5);

    const EvalReport full = run_matrix([&] {
      MatrixConfig c = cfg;
      c.mode = "gold-aspect";
      return c;
    }());
    CHECK(probe[0].second == full.runs[0]);
  }

  TEST_CASE("fractions outside [0,1] are rejected") {
    CHECK_THROWS_AS(mask_probe(lexicon_config(), {0.0, 1.5}), ValidationError);
  }
}

TEST_SUITE("eval.emit_report") {
  TEST_CASE("emission is canonical and stable across calls") {
    const EvalReport report = run_matrix(lexicon_config());
    for (ReportFormat format : {ReportFormat::json, ReportFormat::csv, ReportFormat::table}) {
      CHECK(emit_report(report, format) == emit_report(report, format));
    }
    const std::string json_text = emit_report(report, ReportFormat::json);
    CHECK(json_text.back() == '\n');
    CHECK(json_text.find("\"0.") != std::string::npos);  // metrics as 4-decimal strings
    const std::string csv = emit_report(report, ReportFormat::csv);
    CHECK(csv.rfind("train_domain,test_domain,extractor,classifier,mode,accuracy,macro_f1,", 0) == 0);
  }

  TEST_CASE("empty runs still carry the full baseline block") {
    EvalReport report;
    report.baselines = table1_baselines();
    report.config_digest = "0";
    const std::string json_text = emit_report(report, ReportFormat::json);
    CHECK(json_text.find("\"runs\": []") != std::string::npos);
    CHECK(json_text.find("72.21") != std::string::npos);
    CHECK(json_text.find("90.60") != std::string::npos);
    const std::string table = emit_report(report, ReportFormat::table);
    CHECK(table.find("Deep Memory Network [published baseline]") != std::string::npos);
  }
}
