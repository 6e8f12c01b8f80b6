#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "absa/corpus.hpp"
#include "absa/encoder.hpp"
#include "absa/errors.hpp"
#include "absa/eval.hpp"
#include "absa/extract.hpp"
#include "absa/knowledge.hpp"
#include "absa/llm_client.hpp"
#include "absa/rng.hpp"
#include "absa/run_config.hpp"
#include "absa/sentiment.hpp"

namespace {

using json = nlohmann::json;
using namespace absa;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ParseError("cannot read file " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_output(const std::optional<std::string>& path, const std::string& content) {
  if (path && *path != "-") {
    cli::atomic_write_file(*path, content);
  } else {
    std::cout << content;
  }
}

std::filesystem::path default_cache_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ABSA_CACHE_DIR"); env != nullptr && env[0] != '\0') return env;
  return ".absa-cache";
}

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

// ---- corpus ----

int cmd_corpus_validate(const std::string& file, const std::string& domain) {
  const corpus::Dataset ds = corpus::parse_semeval(read_file(file), corpus::Domain::parse(domain));
  corpus::validate(ds);
  std::cerr << "corpus OK: " << ds.reviews.size() << " reviews, " << ds.sentence_count()
            << " sentences, " << ds.opinion_count() << " opinions\n";
  return 0;
}

int cmd_corpus_stats(const std::string& file, const std::string& domain) {
  const corpus::Dataset ds = corpus::parse_semeval(read_file(file), corpus::Domain::parse(domain));
  corpus::validate(ds);
  long spanned = 0;
  std::array<long, 3> by_polarity{};
  for (const auto& review : ds.reviews) {
    for (const auto& sentence : review.sentences) {
      for (const auto& op : sentence.opinions) {
        if (op.span) ++spanned;
        ++by_polarity[static_cast<std::size_t>(corpus::polarity_index(op.polarity))];
      }
    }
  }
  json doc;
  doc["domain"] = ds.domain.name;
  doc["reviews"] = ds.reviews.size();
  doc["sentences"] = ds.sentence_count();
  doc["opinions"] = ds.opinion_count();
  doc["spanned_opinions"] = spanned;
  doc["implicit_opinions"] = static_cast<long>(ds.opinion_count()) - spanned;
  doc["polarity"] = {{"positive", by_polarity[0]}, {"negative", by_polarity[1]}, {"neutral", by_polarity[2]}};
  std::cout << doc.dump(2) << "\n";
  return 0;
}

// ---- knowledge ----

int cmd_knowledge_check(const std::string& file) {
  const auto ks = knowledge::KnowledgeSource::load(read_file(file));
  std::cerr << "knowledge OK: " << ks.lexicon().size() << " lexicon entries, "
            << ks.category_map_size() << " category mappings\n";
  return 0;
}

// ---- extract ----

struct ExtractArgs {
  std::string corpus_file, domain, knowledge_file, backend = "lexicon";
  std::string mock_fixture, template_file, endpoint, model = "llama", cache_dir;
  int max_tokens = 512;
  int max_ngram = 4;
  std::optional<std::string> out;
};

int cmd_extract(const ExtractArgs& args) {
  const corpus::Dataset ds =
      corpus::parse_semeval(read_file(args.corpus_file), corpus::Domain::parse(args.domain));
  knowledge::KnowledgeSource ks;
  if (!args.knowledge_file.empty()) ks = knowledge::KnowledgeSource::load(read_file(args.knowledge_file));

  std::optional<extract::MockFixture> fixture;
  std::optional<extract::PromptTemplate> tmpl;
  std::optional<llm::Client> client;
  extract::LlmSettings llm_settings{args.endpoint, args.model, args.max_tokens};
  if (args.backend == "mock") {
    if (args.mock_fixture.empty()) throw ValidationError("mock backend needs --mock-fixture");
    fixture = extract::MockFixture::load_json(read_file(args.mock_fixture));
  } else if (args.backend == "llm") {
    if (args.template_file.empty()) throw ValidationError("llm backend needs --template");
    if (args.endpoint.empty()) throw ValidationError("llm backend needs --endpoint");
    tmpl = extract::PromptTemplate::load(read_file(args.template_file));
    client.emplace(default_cache_dir(args.cache_dir));
  } else if (args.backend != "lexicon") {
    throw ValidationError("unknown backend '" + args.backend + "'");
  }

  extract::MockFixture output;
  long total = 0;
  for (const auto& review : ds.reviews) {
    for (const auto& sentence : review.sentences) {
      std::vector<extract::AspectPrediction> predictions;
      if (args.backend == "lexicon") {
        predictions = extract::extract_lexicon(sentence, ks, ds.domain, args.max_ngram);
      } else if (args.backend == "mock") {
        predictions = extract::extract_mock(sentence, *fixture);
      } else {
        predictions = extract::extract_llm(sentence, ks, ds.domain, *tmpl, *client, llm_settings);
      }
      total += static_cast<long>(predictions.size());
      output.add(sentence.id, std::move(predictions));
    }
  }
  write_output(args.out, output.to_json());
  std::cerr << "extract: " << total << " predictions over " << ds.sentence_count() << " sentences\n";
  return 0;
}

// ---- train / predict / evaluate ----

struct TrainArgs {
  std::string corpus_file, domain, model_kind = "nb", out;
  int window = 5;
  double nb_alpha = 1.0;
  double learning_rate = 0.1;
  int epochs = 50;
  int batch_size = 8;
  double l2 = 0.0;
  int d_model = 8, n_layers = 2, d_ff = 16, max_len = 16;
  double encoder_lr = 0.5;
  int encoder_epochs = 100;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& args) {
  const corpus::Dataset ds =
      corpus::parse_semeval(read_file(args.corpus_file), corpus::Domain::parse(args.domain));
  const eval::TrainingSetup setup = eval::build_training_setup(ds, args.window);

  json doc;
  if (args.model_kind == "nb") {
    const auto model = sentiment::train_nb(setup.examples, args.nb_alpha, setup.vocab);
    doc = json::parse(sentiment::save_model_json(model));
  } else if (args.model_kind == "lr") {
    sentiment::LrHyper hyper;
    hyper.learning_rate = args.learning_rate;
    hyper.epochs = args.epochs;
    hyper.batch_size = args.batch_size;
    hyper.l2 = args.l2;
    hyper.seed = args.seed;
    const auto trained = sentiment::train_lr(setup.examples, hyper, setup.vocab);
    doc = json::parse(sentiment::save_model_json(trained.model));
    std::cerr << "train: final loss " << fixed4(trained.loss_trace.empty() ? 0.0 : trained.loss_trace.back())
              << "\n";
  } else if (args.model_kind == "encoder") {
    encoder::EncoderConfig cfg;
    cfg.d_model = args.d_model;
    cfg.d_k = args.d_model;
    cfg.n_layers = args.n_layers;
    cfg.d_ff = args.d_ff;
    cfg.max_len = args.max_len;
    cfg.vocab_size = setup.vocab.size() + 2;
    std::vector<encoder::TrainingExample> examples;
    for (const auto& [sentence, op] : setup.aspects) {
      examples.emplace_back(eval::encoder_input_for(*sentence, op->span, args.window, setup.vocab, cfg),
                            op->polarity);
    }
    encoder::EncoderHyper hyper;
    hyper.learning_rate = args.encoder_lr;
    hyper.epochs = args.encoder_epochs;
    hyper.seed = args.seed;
    const auto trained = encoder::train_encoder(examples, cfg, hyper);
    doc = json::parse(encoder::save_params_json(trained.params, cfg));
    doc["vocabulary"] = setup.vocab.tokens();
    std::cerr << "train: final loss "
              << fixed4(trained.loss_trace.empty() ? 0.0 : trained.loss_trace.back()) << "\n";
  } else {
    throw ValidationError("unknown model kind '" + args.model_kind + "'");
  }
  doc["window"] = args.window;
  cli::atomic_write_file(args.out, doc.dump(2) + "\n");
  std::cerr << "train: wrote " << args.out << " (" << setup.examples.size() << " examples, vocabulary "
            << setup.vocab.size() << ")\n";
  return 0;
}

struct LoadedModel {
  std::function<corpus::Polarity(const corpus::Sentence&, const std::optional<corpus::Span>&)> classify;
  int window = 5;
  std::string kind;
};

LoadedModel load_model(const std::string& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("model " + path + ": invalid JSON: " + e.what());
  }
  LoadedModel out;
  out.window = doc.value("window", 5);
  out.kind = doc.value("model_kind", "");
  if (out.kind == "nb" || out.kind == "lr") {
    const auto loaded = sentiment::load_model_json(text);
    if (std::holds_alternative<sentiment::NBModel>(loaded)) {
      auto model = std::make_shared<sentiment::NBModel>(std::get<sentiment::NBModel>(loaded));
      out.classify = [model, window = out.window](const corpus::Sentence& s,
                                                  const std::optional<corpus::Span>& span) {
        return sentiment::predict(*model, sentiment::featurize(s, span, window, model->vocab)).label;
      };
    } else {
      auto model = std::make_shared<sentiment::LRModel>(std::get<sentiment::LRModel>(loaded));
      out.classify = [model, window = out.window](const corpus::Sentence& s,
                                                  const std::optional<corpus::Span>& span) {
        return sentiment::predict(*model, sentiment::featurize(s, span, window, model->vocab)).label;
      };
    }
    return out;
  }
  if (out.kind == "encoder") {
    auto [params, cfg] = encoder::load_params_json(text);
    if (!doc.contains("vocabulary")) throw ParseError("model " + path + ": missing vocabulary");
    auto vocab = std::make_shared<sentiment::Vocabulary>();
    for (const auto& token : doc.at("vocabulary")) vocab->add(token.get<std::string>());
    auto shared_params = std::make_shared<encoder::EncoderParams>(std::move(params));
    out.classify = [shared_params, vocab, cfg, window = out.window](
                       const corpus::Sentence& s, const std::optional<corpus::Span>& span) {
      const auto x = eval::encoder_input_for(s, span, window, *vocab, cfg);
      const auto logits = encoder::encoder_forward(*shared_params, cfg, x).logits;
      int best = 0;
      for (int c = 1; c < 3; ++c) {
        if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
      }
      return corpus::kPolarityOrder[static_cast<std::size_t>(best)];
    };
    return out;
  }
  throw ParseError("model " + path + ": unknown model_kind '" + out.kind + "'");
}

struct PredictArgs {
  std::string model_file, corpus_file, domain;
  std::string aspects_file;
  std::optional<std::string> out;
};

int cmd_predict(const PredictArgs& args) {
  const corpus::Dataset ds =
      corpus::parse_semeval(read_file(args.corpus_file), corpus::Domain::parse(args.domain));
  const LoadedModel model = load_model(args.model_file);

  if (args.aspects_file.empty()) {
    // Polarity for every gold opinion (gold-aspect mode).
    json doc;
    doc["format_version"] = 1;
    doc["kind"] = "polarity_predictions";
    doc["predictions"] = json::array();
    for (const auto& review : ds.reviews) {
      for (const auto& sentence : review.sentences) {
        for (std::size_t i = 0; i < sentence.opinions.size(); ++i) {
          const corpus::Polarity p = model.classify(sentence, sentence.opinions[i].span);
          doc["predictions"].push_back({{"sentence_id", sentence.id},
                                        {"opinion_index", i},
                                        {"polarity", std::string(corpus::to_string(p))}});
        }
      }
    }
    write_output(args.out, doc.dump(2) + "\n");
    return 0;
  }

  // Attach polarity to extraction output (joint mode).
  const auto fixture = extract::MockFixture::load_json(read_file(args.aspects_file));
  extract::MockFixture output;
  for (const auto& review : ds.reviews) {
    for (const auto& sentence : review.sentences) {
      auto predictions = extract::extract_mock(sentence, fixture);
      for (auto& p : predictions) {
        const auto span = p.span ? eval::snap_span_to_tokens(sentence, *p.span) : std::nullopt;
        p.polarity = model.classify(sentence, span);
      }
      output.add(sentence.id, std::move(predictions));
    }
  }
  write_output(args.out, output.to_json());
  return 0;
}

struct EvaluateArgs {
  std::string gold_file, domain, pred_file, mode = "gold-aspect", span_match = "exact";
};

int cmd_evaluate(const EvaluateArgs& args) {
  const corpus::Dataset gold =
      corpus::parse_semeval(read_file(args.gold_file), corpus::Domain::parse(args.domain));
  const eval::SpanMatch span_match =
      args.span_match == "overlap" ? eval::SpanMatch::overlap : eval::SpanMatch::exact;
  if (args.span_match != "exact" && args.span_match != "overlap") {
    throw ValidationError("span match must be exact or overlap");
  }

  json result;
  if (args.mode == "gold-aspect") {
    json doc;
    try {
      doc = json::parse(read_file(args.pred_file));
    } catch (const json::exception& e) {
      throw ParseError("predictions: invalid JSON: " + std::string(e.what()));
    }
    if (doc.value("kind", "") != "polarity_predictions") {
      throw ParseError("predictions: gold-aspect mode expects kind=polarity_predictions");
    }
    eval::PolarityPredictions preds;
    for (const auto& item : doc.at("predictions")) {
      preds.emplace_back(
          eval::OpinionKey{item.at("sentence_id").get<std::string>(), item.at("opinion_index").get<int>()},
          corpus::parse_polarity(item.at("polarity").get<std::string>()));
    }
    result["accuracy"] = fixed4(eval::polarity_accuracy(preds, gold));
    result["macro_f1"] = fixed4(eval::macro_f1(preds, gold));
    result["n_gold"] = gold.opinion_count();
    result["n_predicted"] = preds.size();
  } else if (args.mode == "joint") {
    const auto fixture = extract::MockFixture::load_json(read_file(args.pred_file));
    corpus::Dataset view = gold;
    for (auto& review : view.reviews) {
      for (auto& sentence : review.sentences) {
        std::vector<corpus::Opinion> kept;
        for (auto& op : sentence.opinions) {
          if (op.span) kept.push_back(op);
        }
        sentence.opinions = std::move(kept);
      }
    }
    eval::PolarityPredictions preds;
    std::map<std::string, std::vector<corpus::Span>> pred_spans;
    long n_predicted = 0;
    for (const auto& review : view.reviews) {
      for (const auto& sentence : review.sentences) {
        const auto predictions = extract::extract_mock(sentence, fixture);
        n_predicted += static_cast<long>(predictions.size());
        std::vector<std::pair<corpus::Span, std::optional<corpus::Polarity>>> spans;
        for (const auto& p : predictions) {
          if (p.span) {
            pred_spans[sentence.id].push_back(*p.span);
            spans.emplace_back(*p.span, p.polarity);
          }
        }
        std::vector<bool> used(sentence.opinions.size(), false);
        for (const auto& [span, polarity] : spans) {
          for (std::size_t g = 0; g < sentence.opinions.size(); ++g) {
            const corpus::Span gold_span = *sentence.opinions[g].span;
            const bool hit =
                span_match == eval::SpanMatch::exact ? span == gold_span : span.overlaps(gold_span);
            if (used[g] || !hit) continue;
            used[g] = true;
            if (polarity) preds.emplace_back(eval::OpinionKey{sentence.id, static_cast<int>(g)}, *polarity);
            break;
          }
        }
      }
    }
    const eval::Prf prf = eval::aspect_prf(pred_spans, view, span_match);
    result["accuracy"] = fixed4(eval::polarity_accuracy(preds, view));
    result["macro_f1"] = fixed4(eval::macro_f1(preds, view));
    result["aspect_precision"] = fixed4(prf.precision);
    result["aspect_recall"] = fixed4(prf.recall);
    result["aspect_f1"] = fixed4(prf.f1);
    result["n_gold"] = view.opinion_count();
    result["n_predicted"] = n_predicted;
  } else {
    throw ValidationError("mode must be gold-aspect or joint");
  }
  std::cout << result.dump(2) << "\n";
  return 0;
}

// ---- matrix / probe ----

struct MatrixArgs {
  std::string config_file;
  std::string out_dir;
  std::string format = "all";
  std::vector<std::string> overrides;  // key=value
};

void apply_overrides(cli::RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("override '" + item + "' must be key=value");
    config.set(item.substr(0, eq), item.substr(eq + 1));
  }
}

int cmd_matrix(const MatrixArgs& args) {
  cli::RunConfig config = cli::RunConfig::load_file(args.config_file);
  apply_overrides(config, args.overrides);
  const eval::MatrixConfig cfg = config.build_matrix_config();
  const eval::EvalReport report = eval::run_matrix(cfg);
  const std::filesystem::path out_dir =
      args.out_dir.empty() ? config.output_dir() : std::filesystem::path(args.out_dir);
  std::filesystem::create_directories(out_dir);
  if (args.format == "json" || args.format == "all") {
    cli::atomic_write_file(out_dir / "report.json", eval::emit_report(report, eval::ReportFormat::json));
  }
  if (args.format == "csv" || args.format == "all") {
    cli::atomic_write_file(out_dir / "report.csv", eval::emit_report(report, eval::ReportFormat::csv));
  }
  if (args.format == "table" || args.format == "all") {
    cli::atomic_write_file(out_dir / "report.table.txt",
                           eval::emit_report(report, eval::ReportFormat::table));
  }
  if (args.format != "json" && args.format != "csv" && args.format != "table" && args.format != "all") {
    throw ValidationError("format must be json, csv, table or all");
  }
  std::cerr << "matrix: " << report.runs.size() << " runs written to " << out_dir.string() << "\n";
  return 0;
}

struct ProbeArgs {
  std::string config_file;
  std::string fractions;
  std::string out_dir;
};

int cmd_probe_mask(const ProbeArgs& args) {
  cli::RunConfig config = cli::RunConfig::load_file(args.config_file);
  std::vector<double> fractions;
  if (!args.fractions.empty()) {
    std::istringstream in(args.fractions);
    std::string part;
    while (std::getline(in, part, ',')) fractions.push_back(std::stod(part));
  } else {
    fractions = config.probe_fractions();
  }
  const eval::MatrixConfig cfg = config.build_matrix_config();
  const auto probe = eval::mask_probe(cfg, fractions);
  const std::filesystem::path out_dir =
      args.out_dir.empty() ? config.output_dir() : std::filesystem::path(args.out_dir);
  std::filesystem::create_directories(out_dir);
  cli::atomic_write_file(out_dir / "probe_mask.json", eval::emit_probe_json(probe));
  std::cerr << "probe mask: " << probe.size() << " fractions written to " << out_dir.string() << "\n";
  return 0;
}

// ---- gradcheck ----

struct GradcheckArgs {
  int layers = 0;  // 0 = grid
  int d_model = 0;
  std::uint64_t seed = 0;
  double epsilon = 1e-5;
  int samples = 200;
  double tolerance = 1e-5;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  std::vector<std::pair<int, int>> grid;
  if (args.layers > 0 && args.d_model > 0) {
    grid.emplace_back(args.layers, args.d_model);
  } else {
    for (int layers : {1, 2}) {
      for (int d : {4, 8}) grid.emplace_back(layers, d);
    }
  }
  bool ok = true;
  for (const auto& [layers, d] : grid) {
    encoder::EncoderConfig cfg;
    cfg.n_layers = layers;
    cfg.d_model = d;
    cfg.d_k = d;
    cfg.d_ff = 2 * d;
    const double err = encoder::grad_check(cfg, args.seed, args.epsilon, args.samples);
    std::cout << "gradcheck layers=" << layers << " d_model=" << d << " samples=" << args.samples
              << " max_rel_error=" << err << "\n";
    if (!(err < args.tolerance)) ok = false;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"absa: cross-domain aspect-based sentiment analysis toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Parse, validate and summarize corpora");
  corpus_cmd->require_subcommand(1);
  {
    auto args = std::make_shared<std::pair<std::string, std::string>>("", "unspecified");
    auto* validate = corpus_cmd->add_subcommand("validate", "Parse a corpus and check every invariant");
    validate->add_option("file", args->first, "SemEval-style XML file")->required();
    validate->add_option("--domain", args->second, "Domain name (default: unspecified)");
    validate->callback([args, &action] { action = [args] { return cmd_corpus_validate(args->first, args->second); }; });
    auto* stats = corpus_cmd->add_subcommand("stats", "Print corpus statistics as JSON");
    stats->add_option("file", args->first, "SemEval-style XML file")->required();
    stats->add_option("--domain", args->second, "Domain name (default: unspecified)");
    stats->callback([args, &action] { action = [args] { return cmd_corpus_stats(args->first, args->second); }; });
  }

  // knowledge
  auto* knowledge_cmd = app.add_subcommand("knowledge", "Inspect knowledge-source files");
  knowledge_cmd->require_subcommand(1);
  {
    auto file = std::make_shared<std::string>();
    auto* check = knowledge_cmd->add_subcommand("check", "Load a knowledge file and report its size");
    check->add_option("file", *file, "knowledge file")->required();
    check->callback([file, &action] { action = [file] { return cmd_knowledge_check(*file); }; });
  }

  // extract
  {
    auto args = std::make_shared<ExtractArgs>();
    auto out = std::make_shared<std::string>();
    auto* extract_cmd = app.add_subcommand("extract", "Extract aspect predictions from a corpus");
    extract_cmd->add_option("--corpus", args->corpus_file, "corpus XML")->required();
    extract_cmd->add_option("--domain", args->domain, "corpus domain")->required();
    extract_cmd->add_option("--knowledge", args->knowledge_file, "knowledge file");
    extract_cmd->add_option("--backend", args->backend, "lexicon|mock|llm");
    extract_cmd->add_option("--mock-fixture", args->mock_fixture, "fixture for the mock backend");
    extract_cmd->add_option("--template", args->template_file, "prompt template for the llm backend");
    extract_cmd->add_option("--endpoint", args->endpoint, "chat-completion endpoint");
    extract_cmd->add_option("--model", args->model, "model name");
    extract_cmd->add_option("--max-tokens", args->max_tokens, "completion budget");
    extract_cmd->add_option("--max-ngram", args->max_ngram, "lexicon n-gram cap");
    extract_cmd->add_option("--cache-dir", args->cache_dir, "LLM response cache directory");
    extract_cmd->add_option("--out", *out, "output file ('-' for stdout)");
    extract_cmd->callback([args, out, &action] {
      action = [args, out] {
        if (!out->empty()) args->out = *out;
        return cmd_extract(*args);
      };
    });
  }

  // train
  {
    auto args = std::make_shared<TrainArgs>();
    auto* train_cmd = app.add_subcommand("train", "Train a polarity classifier on gold aspects");
    train_cmd->add_option("--corpus", args->corpus_file, "corpus XML")->required();
    train_cmd->add_option("--domain", args->domain, "corpus domain")->required();
    train_cmd->add_option("--model", args->model_kind, "nb|lr|encoder");
    train_cmd->add_option("--window", args->window, "context window (tokens per side)");
    train_cmd->add_option("--alpha", args->nb_alpha, "NB smoothing");
    train_cmd->add_option("--learning-rate", args->learning_rate, "LR step size");
    train_cmd->add_option("--epochs", args->epochs, "LR epochs");
    train_cmd->add_option("--batch-size", args->batch_size, "LR batch size");
    train_cmd->add_option("--l2", args->l2, "LR ridge strength");
    train_cmd->add_option("--d-model", args->d_model, "encoder width");
    train_cmd->add_option("--n-layers", args->n_layers, "encoder depth");
    train_cmd->add_option("--d-ff", args->d_ff, "encoder feed-forward width");
    train_cmd->add_option("--max-len", args->max_len, "encoder sequence cap");
    train_cmd->add_option("--encoder-learning-rate", args->encoder_lr, "encoder max step");
    train_cmd->add_option("--encoder-epochs", args->encoder_epochs, "encoder epochs");
    train_cmd->add_option("--seed", args->seed, "training seed");
    train_cmd->add_option("--out", args->out, "model output file")->required();
    train_cmd->callback([args, &action] { action = [args] { return cmd_train(*args); }; });
  }

  // predict
  {
    auto args = std::make_shared<PredictArgs>();
    auto out = std::make_shared<std::string>();
    auto* predict_cmd = app.add_subcommand("predict", "Classify polarity with a trained model");
    predict_cmd->add_option("--model", args->model_file, "model JSON from train")->required();
    predict_cmd->add_option("--corpus", args->corpus_file, "corpus XML")->required();
    predict_cmd->add_option("--domain", args->domain, "corpus domain")->required();
    predict_cmd->add_option("--aspects", args->aspects_file,
                            "extraction output; classify at predicted spans instead of gold ones");
    predict_cmd->add_option("--out", *out, "output file ('-' for stdout)");
    predict_cmd->callback([args, out, &action] {
      action = [args, out] {
        if (!out->empty()) args->out = *out;
        return cmd_predict(*args);
      };
    });
  }

  // evaluate
  {
    auto args = std::make_shared<EvaluateArgs>();
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against a gold corpus");
    eval_cmd->add_option("--gold", args->gold_file, "gold corpus XML")->required();
    eval_cmd->add_option("--domain", args->domain, "corpus domain")->required();
    eval_cmd->add_option("--pred", args->pred_file, "prediction file")->required();
    eval_cmd->add_option("--mode", args->mode, "gold-aspect|joint");
    eval_cmd->add_option("--span-match", args->span_match, "exact|overlap");
    eval_cmd->callback([args, &action] { action = [args] { return cmd_evaluate(*args); }; });
  }

  // matrix
  {
    auto args = std::make_shared<MatrixArgs>();
    auto* matrix_cmd = app.add_subcommand("matrix", "Run the cross-domain train/test matrix");
    matrix_cmd->add_option("--config", args->config_file, "run configuration file")->required();
    matrix_cmd->add_option("--out", args->out_dir, "output directory (default from config)");
    matrix_cmd->add_option("--format", args->format, "json|csv|table|all");
    matrix_cmd->add_option("--set", args->overrides, "key=value overrides of config entries");
    matrix_cmd->callback([args, &action] { action = [args] { return cmd_matrix(*args); }; });
  }

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Robustness probes");
  probe_cmd->require_subcommand(1);
  {
    auto args = std::make_shared<ProbeArgs>();
    auto* mask_cmd = probe_cmd->add_subcommand("mask", "Re-evaluate with masked test corpora");
    mask_cmd->add_option("--config", args->config_file, "run configuration file")->required();
    mask_cmd->add_option("--fractions", args->fractions, "comma-separated fractions in [0,1]");
    mask_cmd->add_option("--out", args->out_dir, "output directory (default from config)");
    mask_cmd->callback([args, &action] { action = [args] { return cmd_probe_mask(*args); }; });
  }

  // gradcheck
  {
    auto args = std::make_shared<GradcheckArgs>();
    auto* grad_cmd = app.add_subcommand("gradcheck", "Verify encoder gradients by central differences");
    grad_cmd->add_option("--layers", args->layers, "layer count (with --d-model; default: grid)");
    grad_cmd->add_option("--d-model", args->d_model, "model width (with --layers; default: grid)");
    grad_cmd->add_option("--seed", args->seed, "seed");
    grad_cmd->add_option("--epsilon", args->epsilon, "finite-difference step");
    grad_cmd->add_option("--samples", args->samples, "sampled parameters");
    grad_cmd->add_option("--tolerance", args->tolerance, "pass threshold");
    grad_cmd->callback([args, &action] { action = [args] { return cmd_gradcheck(*args); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "absa: " << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const llm::SchemaError& e) {
    std::cerr << "absa: " << e.what() << "\npayload: " << e.payload << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "absa: " << e.what() << "\n";
    return 1;
  }
}
