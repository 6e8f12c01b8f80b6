#include <doctest.h>

#include <filesystem>

#include "absa/errors.hpp"
#include "absa/extract.hpp"
#include "absa/rng.hpp"
#include "absa/utf8.hpp"
#include "support/stub_server.hpp"

using namespace absa;
using namespace absa::corpus;
using namespace absa::extract;

namespace {

knowledge::KnowledgeSource laptop_lexicon() {
  knowledge::KnowledgeSource ks;
  ks.add_lexicon_entry({"battery life", Domain::laptop(), Category::parse("LAPTOP#GENERAL")});
  ks.add_lexicon_entry({"battery", Domain::laptop(), Category::parse("LAPTOP#BATTERY")});
  ks.add_lexicon_entry({"screen", Domain::laptop(), Category::parse("LAPTOP#DISPLAY")});
  return ks;
}

Sentence fixture_sentence() { return Sentence{"s1", "The battery life rocks", {}}; }

std::filesystem::path fresh_cache_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("absa-extract-cache-" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

llm::RetryPolicy fast_retries() {
  llm::RetryPolicy rp;
  rp.base_delay = std::chrono::milliseconds(1);
  return rp;
}

}  // namespace

TEST_SUITE("extract.align_span") {
  TEST_CASE("hand-counted offsets") {
    const auto span = align_span("The battery life rocks", "battery life");
    REQUIRE(span.has_value());
    CHECK(*span == Span{4, 16});
  }

  TEST_CASE("absent terms and sub-token matches yield none") {
    CHECK_FALSE(align_span("The battery life rocks", "pizza").has_value());
    CHECK_FALSE(align_span("screams", "scream").has_value());
  }

  TEST_CASE("matching is case-insensitive and whole-token") {
    const auto span = align_span("Scream loudly", "scream");
    REQUIRE(span.has_value());
    CHECK(*span == Span{0, 6});
    const auto multi = align_span("I love the Battery Life here", "battery life");
    REQUIRE(multi.has_value());
    CHECK(*multi == Span{11, 23});
  }

  TEST_CASE("first occurrence wins") {
    const auto span = align_span("screen or screen", "screen");
    REQUIRE(span.has_value());
    CHECK(*span == Span{0, 6});
  }
}

TEST_SUITE("extract.lexicon") {
  TEST_CASE("fixture sentence yields one categorized span") {
    const auto predictions = extract_lexicon(fixture_sentence(), laptop_lexicon(), Domain::laptop());
    REQUIRE(predictions.size() == 1);
    CHECK(predictions[0].term == "battery life");
    CHECK(*predictions[0].span == Span{4, 16});
    CHECK(predictions[0].category->str() == "LAPTOP#GENERAL");
    CHECK_FALSE(predictions[0].polarity.has_value());
    CHECK(predictions[0].confidence == 1.0);
  }

  TEST_CASE("empty lexicon yields nothing") {
    CHECK(extract_lexicon(fixture_sentence(), knowledge::KnowledgeSource{}, Domain::laptop()).empty());
  }

  TEST_CASE("longest match beats its prefix and output spans are ordered, disjoint") {
    // "battery" alone is also in the lexicon; the bigram must win.
    const Sentence s{"s2", "battery life and screen and battery", {}};
    const auto predictions = extract_lexicon(s, laptop_lexicon(), Domain::laptop());
    REQUIRE(predictions.size() == 3);
    CHECK(predictions[0].term == "battery life");
    CHECK(predictions[0].category->str() == "LAPTOP#GENERAL");
    CHECK(predictions[1].term == "screen");
    CHECK(predictions[2].term == "battery");
    CHECK(predictions[2].category->str() == "LAPTOP#BATTERY");
    for (std::size_t i = 1; i < predictions.size(); ++i) {
      CHECK(predictions[i - 1].span->end <= predictions[i].span->start);
    }
  }

  TEST_CASE("wrong domain finds nothing") {
    CHECK(extract_lexicon(fixture_sentence(), laptop_lexicon(), Domain::restaurant()).empty());
  }

  TEST_CASE("self-consistency: sentences built from lexicon terms are recovered exactly") {
    knowledge::KnowledgeSource ks;
    const std::vector<std::string> terms = {"battery life", "screen", "touch pad", "cooling fan"};
    for (const auto& term : terms) {
      ks.add_lexicon_entry({term, Domain::laptop(), Category::parse("LAPTOP#GENERAL")});
    }
    Rng rng(777);
    for (int round = 0; round < 30; ++round) {
      std::string text = "xx";
      std::vector<Span> gold;
      const int n = 1 + static_cast<int>(rng.below(4));
      for (int i = 0; i < n; ++i) {
        const std::string& term = terms[rng.below(static_cast<std::uint32_t>(terms.size()))];
        text += " ";
        const std::size_t start = utf8::length(text);
        text += term;
        gold.push_back(Span{start, start + utf8::length(term)});
        text += " xx";
      }
      const Sentence s{"s", text, {}};
      const auto predictions = extract_lexicon(s, ks, Domain::laptop());
      REQUIRE(predictions.size() == gold.size());
      for (std::size_t i = 0; i < gold.size(); ++i) {
        CHECK(*predictions[i].span == gold[i]);
      }
    }
  }
}

TEST_SUITE("extract.mock") {
  TEST_CASE("present id replays the fixture, absent id yields nothing") {
    MockFixture fixture;
    AspectPrediction p;
    p.term = "battery life";
    p.span = Span{4, 16};
    p.category = Category::parse("LAPTOP#GENERAL");
    fixture.add("s1", {p});
    CHECK(extract_mock(fixture_sentence(), fixture) == std::vector<AspectPrediction>{p});
    CHECK(extract_mock(Sentence{"other", "text", {}}, fixture).empty());
  }

  TEST_CASE("fixture JSON round-trips and rejects invalid spans at load") {
    MockFixture fixture;
    AspectPrediction p;
    p.term = "battery life";
    p.span = Span{4, 16};
    p.category = Category::parse("LAPTOP#GENERAL");
    p.polarity = Polarity::positive;
    p.confidence = 0.9;
    fixture.add("s1", {p});
    const MockFixture back = MockFixture::load_json(fixture.to_json());
    CHECK(back.entries() == fixture.entries());

    CHECK_THROWS_AS(
        MockFixture::load_json(
            R"({"format_version":1,"predictions":{"s1":[{"term":"x","span":[4,3]}]}})"),
        ParseError);
  }

  TEST_CASE("a fixture span that does not slice to the term is rejected at use") {
    MockFixture fixture;
    AspectPrediction p;
    p.term = "battery";
    p.span = Span{4, 16};  // slices to "battery life"
    fixture.add("s1", {p});
    CHECK_THROWS_AS(extract_mock(fixture_sentence(), fixture), ValidationError);
  }
}

TEST_SUITE("extract.prompt") {
  TEST_CASE("placeholders render and unknown ones are load errors") {
    const auto tmpl = PromptTemplate::load("Domain {{domain}}: {{sentence}}\nKnown:\n{{knowledge}}");
    CHECK(tmpl.render("Great screen", "laptop", "screen\nbattery life") ==
          "Domain laptop: Great screen\nKnown:\nscreen\nbattery life");
    CHECK_THROWS_AS(PromptTemplate::load("Hello {{name}}"), ParseError);
    CHECK_THROWS_AS(PromptTemplate::load("Hello {{sentence"), ParseError);
  }
}

TEST_SUITE("extract.llm") {
  TEST_CASE("stubbed record is aligned into a span") {
    teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
      res.set_content(
          teststub::chat_body(
              R"([{"term":"battery life","category":"LAPTOP#GENERAL","polarity":"positive"}])"),
          "application/json");
    });
    llm::Client client(fresh_cache_dir("align"), fast_retries());
    const auto tmpl = PromptTemplate::load("{{domain}} {{knowledge}} {{sentence}}");
    const auto predictions = extract_llm(fixture_sentence(), laptop_lexicon(), Domain::laptop(), tmpl,
                                         client, {stub.url(), "llama", 64});
    REQUIRE(predictions.size() == 1);
    CHECK(predictions[0].term == "battery life");
    CHECK(*predictions[0].span == Span{4, 16});
    CHECK(predictions[0].category->str() == "LAPTOP#GENERAL");
    CHECK(*predictions[0].polarity == Polarity::positive);
  }

  TEST_CASE("empty array reply yields no predictions") {
    teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
      res.set_content(teststub::chat_body("[]"), "application/json");
    });
    llm::Client client(fresh_cache_dir("empty"), fast_retries());
    const auto tmpl = PromptTemplate::load("{{sentence}}");
    CHECK(extract_llm(fixture_sentence(), laptop_lexicon(), Domain::laptop(), tmpl, client,
                      {stub.url(), "llama", 64})
              .empty());
  }

  TEST_CASE("prose replies surface as schema errors with the raw payload") {
    teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
      res.set_content(teststub::chat_body("The aspects are battery life and screen."),
                      "application/json");
    });
    llm::Client client(fresh_cache_dir("prose"), fast_retries());
    const auto tmpl = PromptTemplate::load("{{sentence}}");
    try {
      extract_llm(fixture_sentence(), laptop_lexicon(), Domain::laptop(), tmpl, client,
                  {stub.url(), "llama", 64});
      FAIL("expected SchemaError");
    } catch (const llm::SchemaError& e) {
      CHECK(e.payload == "The aspects are battery life and screen.");
    }
  }

  TEST_CASE("malformed categories are dropped, unalignable terms keep no span") {
    teststub::StubServer stub([](int, const httplib::Request&, httplib::Response& res) {
      res.set_content(teststub::chat_body(R"([
        {"term":"battery life","category":"not-a-category","polarity":"positive"},
        {"term":"power supply","category":"LAPTOP#GENERAL","polarity":"sour"}
      ])"),
                      "application/json");
    });
    llm::Client client(fresh_cache_dir("lenient"), fast_retries());
    const auto tmpl = PromptTemplate::load("{{sentence}}");
    const auto predictions = extract_llm(fixture_sentence(), laptop_lexicon(), Domain::laptop(), tmpl,
                                         client, {stub.url(), "llama", 64});
    REQUIRE(predictions.size() == 1);
    CHECK(predictions[0].term == "power supply");
    CHECK_FALSE(predictions[0].span.has_value());
    CHECK_FALSE(predictions[0].polarity.has_value());
  }

  TEST_CASE("the rendered prompt carries sentence, domain and lexicon terms") {
    std::string seen_prompt;
    teststub::StubServer stub([&](int, const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      seen_prompt = body.at("messages").at(0).at("content").get<std::string>();
      CHECK(body.at("temperature").get<double>() == 0.0);
      res.set_content(teststub::chat_body("[]"), "application/json");
    });
    llm::Client client(fresh_cache_dir("prompt"), fast_retries());
    const auto tmpl = PromptTemplate::load("D={{domain}} K={{knowledge}} S={{sentence}}");
    extract_llm(fixture_sentence(), laptop_lexicon(), Domain::laptop(), tmpl, client,
                {stub.url(), "llama", 64});
    CHECK(seen_prompt == "D=laptop K=battery life\nbattery\nscreen S=The battery life rocks");
  }
}
