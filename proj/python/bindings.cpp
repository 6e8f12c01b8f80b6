#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>
#include <pybind11/operators.h>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/encoder.hpp"
#include "absa/errors.hpp"
#include "absa/eval.hpp"
#include "absa/extract.hpp"
#include "absa/knowledge.hpp"
#include "absa/llm_client.hpp"
#include "absa/run_config.hpp"
#include "absa/sentiment.hpp"

namespace py = pybind11;
using namespace absa;

namespace {

encoder::Mat mat_from_rows(const std::vector<std::vector<double>>& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  encoder::Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) throw ValidationError("ragged matrix rows");
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> rows_from_mat(const encoder::Mat& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) rows[i][j] = m(i, j);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cross-domain aspect-based sentiment analysis toolkit";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<llm::SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<llm::TransportError>(m, "TransportError", PyExc_RuntimeError);

  // ---- corpus ----
  py::enum_<corpus::Polarity>(m, "Polarity")
      .value("positive", corpus::Polarity::positive)
      .value("negative", corpus::Polarity::negative)
      .value("neutral", corpus::Polarity::neutral);

  py::class_<corpus::Category>(m, "Category")
      .def_static("parse", &corpus::Category::parse)
      .def_readonly("entity", &corpus::Category::entity)
      .def_readonly("attribute", &corpus::Category::attribute)
      .def("__str__", &corpus::Category::str)
      .def("__repr__", [](const corpus::Category& c) { return "Category(" + c.str() + ")"; })
      .def(py::self == py::self);

  py::class_<corpus::Span>(m, "Span")
      .def(py::init<std::size_t, std::size_t>())
      .def_readonly("start", &corpus::Span::start)
      .def_readonly("end", &corpus::Span::end)
      .def("__repr__",
           [](const corpus::Span& s) {
             return "Span(" + std::to_string(s.start) + ", " + std::to_string(s.end) + ")";
           })
      .def(py::self == py::self);

  py::class_<corpus::Domain>(m, "Domain")
      .def(py::init([](const std::string& name) { return corpus::Domain::parse(name); }))
      .def_readonly("name", &corpus::Domain::name)
      .def("__repr__", [](const corpus::Domain& d) { return "Domain(" + d.name + ")"; })
      .def(py::self == py::self);

  py::class_<corpus::Opinion>(m, "Opinion")
      .def_readonly("target", &corpus::Opinion::target)
      .def_readonly("span", &corpus::Opinion::span)
      .def_readonly("category", &corpus::Opinion::category)
      .def_readonly("polarity", &corpus::Opinion::polarity);

  py::class_<corpus::Sentence>(m, "Sentence")
      .def(py::init([](const std::string& id, const std::string& text) {
             return corpus::Sentence{id, text, {}};
           }),
           py::arg("id"), py::arg("text"))
      .def_readonly("id", &corpus::Sentence::id)
      .def_readonly("text", &corpus::Sentence::text)
      .def_readonly("opinions", &corpus::Sentence::opinions);

  py::class_<corpus::Review>(m, "Review")
      .def_readonly("id", &corpus::Review::id)
      .def_readonly("sentences", &corpus::Review::sentences);

  py::class_<corpus::Dataset>(m, "Dataset")
      .def_readonly("domain", &corpus::Dataset::domain)
      .def_readonly("reviews", &corpus::Dataset::reviews)
      .def("sentence_count", &corpus::Dataset::sentence_count)
      .def("opinion_count", &corpus::Dataset::opinion_count)
      .def(py::self == py::self);

  py::class_<corpus::Token>(m, "Token")
      .def_readonly("text", &corpus::Token::text)
      .def_readonly("span", &corpus::Token::span);

  m.def("parse_semeval", &corpus::parse_semeval, py::arg("xml_text"), py::arg("domain"));
  m.def("serialize_semeval", &corpus::serialize_semeval);
  m.def("validate", &corpus::validate);
  m.def("tokenize", &corpus::tokenize);
  m.def("mask_tokens", &corpus::mask_tokens, py::arg("dataset"), py::arg("fraction"), py::arg("seed"),
        py::arg("include_aspect_tokens") = false);
  m.def("augment", &corpus::augment, py::arg("dataset"), py::arg("seed"), py::arg("ops_per_sentence"),
        py::arg("knowledge"));
  m.def("split", &corpus::split, py::arg("dataset"), py::arg("train_fraction"), py::arg("seed"));

  // ---- knowledge ----
  py::class_<knowledge::LexiconEntry>(m, "LexiconEntry")
      .def_readonly("term", &knowledge::LexiconEntry::term)
      .def_readonly("domain", &knowledge::LexiconEntry::domain)
      .def_readonly("category", &knowledge::LexiconEntry::category);

  py::class_<knowledge::KnowledgeSource>(m, "KnowledgeSource")
      .def(py::init<>())
      .def_static("load", &knowledge::KnowledgeSource::load)
      .def("resolve_term", &knowledge::KnowledgeSource::resolve_term)
      .def("map_category", &knowledge::KnowledgeSource::map_category)
      .def("terms_for", &knowledge::KnowledgeSource::terms_for)
      .def("lexicon", &knowledge::KnowledgeSource::lexicon)
      .def("without_category_map", &knowledge::KnowledgeSource::without_category_map);

  // ---- extract ----
  py::class_<extract::AspectPrediction>(m, "AspectPrediction")
      .def_readonly("term", &extract::AspectPrediction::term)
      .def_readonly("span", &extract::AspectPrediction::span)
      .def_readonly("category", &extract::AspectPrediction::category)
      .def_readonly("polarity", &extract::AspectPrediction::polarity)
      .def_readonly("confidence", &extract::AspectPrediction::confidence);

  m.def("align_span", &extract::align_span, py::arg("sentence_text"), py::arg("term"));
  m.def("extract_lexicon", &extract::extract_lexicon, py::arg("sentence"), py::arg("knowledge"),
        py::arg("domain"), py::arg("max_ngram") = 4);

  py::class_<extract::PromptTemplate>(m, "PromptTemplate")
      .def_static("load", &extract::PromptTemplate::load)
      .def("render", &extract::PromptTemplate::render, py::arg("sentence"), py::arg("domain"),
           py::arg("knowledge"));

  // ---- llm ----
  py::class_<llm::Message>(m, "Message")
      .def(py::init([](const std::string& role, const std::string& content) {
             return llm::Message{role, content};
           }),
           py::arg("role"), py::arg("content"))
      .def_readonly("role", &llm::Message::role)
      .def_readonly("content", &llm::Message::content);

  py::class_<llm::LlmRequest>(m, "LlmRequest")
      .def(py::init([](const std::string& endpoint, const std::string& model,
                       const std::vector<llm::Message>& messages, double temperature, int max_tokens) {
             return llm::LlmRequest{endpoint, model, messages, temperature, max_tokens};
           }),
           py::arg("endpoint_url") = "", py::arg("model_name") = "llama",
           py::arg("messages") = std::vector<llm::Message>{}, py::arg("temperature") = 0.0,
           py::arg("max_tokens") = 512);

  py::class_<llm::ExtractionRecord>(m, "ExtractionRecord")
      .def_readonly("term", &llm::ExtractionRecord::term)
      .def_readonly("category", &llm::ExtractionRecord::category)
      .def_readonly("polarity", &llm::ExtractionRecord::polarity);

  m.def("cache_key", &llm::cache_key);
  m.def("parse_extraction_payload", &llm::parse_extraction_payload);

  // ---- sentiment ----
  py::class_<sentiment::Vocabulary>(m, "Vocabulary")
      .def(py::init<>())
      .def_static("build", &sentiment::Vocabulary::build)
      .def("add", &sentiment::Vocabulary::add)
      .def("index_of", &sentiment::Vocabulary::index_of)
      .def("size", &sentiment::Vocabulary::size)
      .def("tokens", &sentiment::Vocabulary::tokens);

  py::class_<sentiment::LabeledExample>(m, "LabeledExample")
      .def(py::init([](const sentiment::FeatureVector& features, corpus::Polarity label) {
             return sentiment::LabeledExample{features, label};
           }),
           py::arg("features"), py::arg("label"));

  py::class_<sentiment::NBModel>(m, "NBModel")
      .def_readonly("class_log_prior", &sentiment::NBModel::class_log_prior)
      .def_readonly("alpha", &sentiment::NBModel::alpha);

  py::class_<sentiment::LRModel>(m, "LRModel").def_readonly("bias", &sentiment::LRModel::bias);

  py::class_<sentiment::Prediction>(m, "Prediction")
      .def_readonly("label", &sentiment::Prediction::label)
      .def_readonly("scores", &sentiment::Prediction::scores);

  py::class_<sentiment::LrHyper>(m, "LrHyper")
      .def(py::init<>())
      .def_readwrite("learning_rate", &sentiment::LrHyper::learning_rate)
      .def_readwrite("epochs", &sentiment::LrHyper::epochs)
      .def_readwrite("batch_size", &sentiment::LrHyper::batch_size)
      .def_readwrite("l2", &sentiment::LrHyper::l2)
      .def_readwrite("seed", &sentiment::LrHyper::seed);

  m.def("context_tokens", &sentiment::context_tokens, py::arg("sentence"), py::arg("aspect_span"),
        py::arg("window"));
  m.def("featurize", &sentiment::featurize, py::arg("sentence"), py::arg("aspect_span"),
        py::arg("window"), py::arg("vocabulary"));
  m.def("train_nb", &sentiment::train_nb, py::arg("examples"), py::arg("alpha"), py::arg("vocabulary"));
  m.def(
      "train_lr",
      [](const std::vector<sentiment::LabeledExample>& examples, const sentiment::LrHyper& hyper,
         const sentiment::Vocabulary& vocab) {
        const auto trained = sentiment::train_lr(examples, hyper, vocab);
        return py::make_tuple(trained.model, trained.loss_trace);
      },
      py::arg("examples"), py::arg("hyper"), py::arg("vocabulary"));
  m.def("predict_nb",
        [](const sentiment::NBModel& model, const sentiment::FeatureVector& f) {
          return sentiment::predict(model, f);
        });
  m.def("predict_lr",
        [](const sentiment::LRModel& model, const sentiment::FeatureVector& f) {
          return sentiment::predict(model, f);
        });
  m.def("save_model_json",
        [](const sentiment::NBModel& model) { return sentiment::save_model_json(model); });

  // ---- encoder ----
  py::class_<encoder::EncoderConfig>(m, "EncoderConfig")
      .def(py::init<>())
      .def_readwrite("d_model", &encoder::EncoderConfig::d_model)
      .def_readwrite("d_k", &encoder::EncoderConfig::d_k)
      .def_readwrite("n_layers", &encoder::EncoderConfig::n_layers)
      .def_readwrite("max_len", &encoder::EncoderConfig::max_len)
      .def_readwrite("vocab_size", &encoder::EncoderConfig::vocab_size)
      .def_readwrite("d_ff", &encoder::EncoderConfig::d_ff);

  py::class_<encoder::EncoderInput>(m, "EncoderInput")
      .def(py::init([](const std::vector<int>& token_ids, const std::vector<int>& segment_ids) {
             return encoder::EncoderInput{token_ids, segment_ids};
           }),
           py::arg("token_ids"), py::arg("segment_ids"));

  py::class_<encoder::EncoderParams>(m, "EncoderParams");

  m.def(
      "attention",
      [](const std::vector<std::vector<double>>& q, const std::vector<std::vector<double>>& k,
         const std::vector<std::vector<double>>& v) {
        return rows_from_mat(encoder::attention(mat_from_rows(q), mat_from_rows(k), mat_from_rows(v)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"));
  m.def(
      "encoder_forward",
      [](const encoder::EncoderParams& params, const encoder::EncoderConfig& cfg,
         const encoder::EncoderInput& x) { return encoder::encoder_forward(params, cfg, x).logits; },
      py::arg("params"), py::arg("config"), py::arg("input"));
  m.def(
      "train_encoder",
      [](const std::vector<encoder::TrainingExample>& examples, const encoder::EncoderConfig& cfg,
         double learning_rate, int epochs, std::uint64_t seed) {
        const auto trained = encoder::train_encoder(examples, cfg, {learning_rate, epochs, seed});
        return py::make_tuple(trained.params, trained.loss_trace);
      },
      py::arg("examples"), py::arg("config"), py::arg("learning_rate") = 0.5, py::arg("epochs") = 100,
      py::arg("seed") = 0);
  m.def("grad_check", &encoder::grad_check, py::arg("config"), py::arg("seed"), py::arg("epsilon"),
        py::arg("samples") = 200);
  m.def("encoder_init", &encoder::EncoderParams::init, py::arg("config"), py::arg("seed"));
  m.def("save_encoder_json", &encoder::save_params_json, py::arg("params"), py::arg("config"));

  // ---- eval ----
  py::class_<eval::OpinionKey>(m, "OpinionKey")
      .def(py::init([](const std::string& sentence_id, int opinion_index) {
             return eval::OpinionKey{sentence_id, opinion_index};
           }),
           py::arg("sentence_id"), py::arg("opinion_index"));

  py::enum_<eval::SpanMatch>(m, "SpanMatch")
      .value("exact", eval::SpanMatch::exact)
      .value("overlap", eval::SpanMatch::overlap);

  py::class_<eval::Prf>(m, "Prf")
      .def_readonly("precision", &eval::Prf::precision)
      .def_readonly("recall", &eval::Prf::recall)
      .def_readonly("f1", &eval::Prf::f1);

  py::class_<eval::RunResult>(m, "RunResult")
      .def_readonly("train_domain", &eval::RunResult::train_domain)
      .def_readonly("test_domain", &eval::RunResult::test_domain)
      .def_readonly("extractor", &eval::RunResult::extractor)
      .def_readonly("classifier", &eval::RunResult::classifier)
      .def_readonly("mode", &eval::RunResult::mode)
      .def_readonly("accuracy", &eval::RunResult::accuracy)
      .def_readonly("macro_f1", &eval::RunResult::macro_f1)
      .def_readonly("aspect_precision", &eval::RunResult::aspect_precision)
      .def_readonly("aspect_recall", &eval::RunResult::aspect_recall)
      .def_readonly("aspect_f1", &eval::RunResult::aspect_f1)
      .def_readonly("n_gold", &eval::RunResult::n_gold)
      .def_readonly("n_predicted", &eval::RunResult::n_predicted);

  py::class_<eval::BaselineRow>(m, "BaselineRow")
      .def_readonly("label", &eval::BaselineRow::label)
      .def_readonly("domain", &eval::BaselineRow::domain)
      .def_readonly("accuracy", &eval::BaselineRow::accuracy);

  py::class_<eval::EvalReport>(m, "EvalReport")
      .def_readonly("runs", &eval::EvalReport::runs)
      .def_readonly("baselines", &eval::EvalReport::baselines)
      .def_readonly("config_digest", &eval::EvalReport::config_digest)
      .def_readonly("seed", &eval::EvalReport::seed);

  py::class_<eval::MatrixConfig>(m, "MatrixConfig")
      .def_readwrite("mode", &eval::MatrixConfig::mode)
      .def_readwrite("use_category_map", &eval::MatrixConfig::use_category_map)
      .def_readwrite("seed", &eval::MatrixConfig::seed);

  m.def("polarity_accuracy", &eval::polarity_accuracy, py::arg("predictions"), py::arg("gold"));
  m.def("macro_f1", &eval::macro_f1, py::arg("predictions"), py::arg("gold"));
  m.def("aspect_prf", &eval::aspect_prf, py::arg("pred_spans"), py::arg("gold"), py::arg("mode"));
  m.def("table1_baselines", &eval::table1_baselines);
  m.def("run_matrix", &eval::run_matrix);
  m.def("mask_probe", &eval::mask_probe, py::arg("config"), py::arg("fractions"));
  m.def(
      "emit_report",
      [](const eval::EvalReport& report, const std::string& format) {
        if (format == "json") return eval::emit_report(report, eval::ReportFormat::json);
        if (format == "csv") return eval::emit_report(report, eval::ReportFormat::csv);
        if (format == "table") return eval::emit_report(report, eval::ReportFormat::table);
        throw ValidationError("format must be json, csv or table");
      },
      py::arg("report"), py::arg("format"));
  m.def(
      "load_run_config",
      [](const std::filesystem::path& path) {
        return cli::RunConfig::load_file(path).build_matrix_config();
      },
      py::arg("path"), "Load a key=value run configuration into a MatrixConfig");
}
