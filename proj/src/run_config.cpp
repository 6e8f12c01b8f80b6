#include "absa/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "absa/errors.hpp"

namespace absa::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "knowledge.file",
      "matrix.extractor",
      "matrix.classifier",
      "matrix.mode",
      "matrix.span_match",
      "matrix.window",
      "matrix.use_category_map",
      "matrix.max_ngram",
      "extract.mock_fixture",
      "llm.endpoint",
      "llm.model",
      "llm.prompt_template",
      "llm.max_tokens",
      "llm.cache_dir",
      "nb.alpha",
      "lr.learning_rate",
      "lr.epochs",
      "lr.batch_size",
      "lr.l2",
      "encoder.d_model",
      "encoder.n_layers",
      "encoder.d_ff",
      "encoder.max_len",
      "encoder.learning_rate",
      "encoder.epochs",
      "probe.train",
      "probe.test",
      "probe.mode",
      "probe.include_aspect_tokens",
      "probe.fractions",
      "output.dir",
  };
  return keys;
}

bool is_known_key(const std::string& key) {
  if (known_keys().count(key) != 0) return true;
  return key.rfind("corpus.", 0) == 0 && key.size() > 7;  // corpus.<domain>
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

long parse_long(const std::string& key, const std::string& value) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("config: " + key + "='" + value + "' is not an integer");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ParseError("config: " + key + "='" + value + "' is not a number");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ParseError("config: " + key + "='" + value + "' must be true or false");
}

std::string read_text_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ParseError(what + ": cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

RunConfig RunConfig::load_file(const std::filesystem::path& path) {
  return parse(read_text_file(path, "config"), path.has_parent_path() ? path.parent_path() : ".");
}

RunConfig RunConfig::parse(std::string_view text, std::filesystem::path base_dir) {
  RunConfig config;
  config.base_dir_ = std::move(base_dir);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (!is_known_key(key)) {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (config.values_.count(key) != 0) {
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    config.values_[key] = value;
  }
  // Referenced files must resolve at load.
  for (const auto& [key, value] : config.values_) {
    const bool is_path = key.rfind("corpus.", 0) == 0 || key == "knowledge.file" ||
                         key == "extract.mock_fixture" || key == "llm.prompt_template";
    if (is_path && !std::filesystem::exists(config.resolve(value))) {
      throw ParseError("config: " + key + " references missing file " +
                       config.resolve(value).string());
    }
  }
  return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ParseError("config: unknown key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::filesystem::path RunConfig::resolve(const std::string& value) const {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base_dir_ / p;
}

eval::MatrixConfig RunConfig::build_matrix_config() const {
  eval::MatrixConfig cfg;
  for (const auto& [key, value] : values_) {
    if (key.rfind("corpus.", 0) != 0) continue;
    const corpus::Domain domain = corpus::Domain::parse(key.substr(7));
    cfg.corpora.push_back(
        corpus::parse_semeval(read_text_file(resolve(value), "corpus " + domain.name), domain));
  }
  if (cfg.corpora.empty()) throw ParseError("config: no corpus.<domain> entries");
  if (const auto it = values_.find("knowledge.file"); it != values_.end()) {
    cfg.ks = knowledge::KnowledgeSource::load(read_text_file(resolve(it->second), "knowledge"));
  }
  cfg.extractor = get_or("matrix.extractor", "lexicon");
  cfg.classifier = get_or("matrix.classifier", "nb");
  cfg.mode = get_or("matrix.mode", "both");
  const std::string span_match = get_or("matrix.span_match", "exact");
  if (span_match == "exact") {
    cfg.span_match = eval::SpanMatch::exact;
  } else if (span_match == "overlap") {
    cfg.span_match = eval::SpanMatch::overlap;
  } else {
    throw ParseError("config: matrix.span_match must be exact or overlap");
  }
  cfg.window = static_cast<int>(parse_long("matrix.window", get_or("matrix.window", "5")));
  cfg.use_category_map = parse_bool("matrix.use_category_map", get_or("matrix.use_category_map", "true"));
  cfg.max_ngram = static_cast<int>(parse_long("matrix.max_ngram", get_or("matrix.max_ngram", "4")));
  cfg.seed = static_cast<std::uint64_t>(parse_long("seed", get_or("seed", "0")));

  if (const auto it = values_.find("extract.mock_fixture"); it != values_.end()) {
    cfg.mock_fixture =
        extract::MockFixture::load_json(read_text_file(resolve(it->second), "mock fixture"));
  }
  if (const auto it = values_.find("llm.prompt_template"); it != values_.end()) {
    cfg.prompt_template =
        extract::PromptTemplate::load(read_text_file(resolve(it->second), "prompt template"));
  }
  cfg.llm.endpoint_url = get_or("llm.endpoint", "");
  cfg.llm.model_name = get_or("llm.model", "llama");
  cfg.llm.max_tokens = static_cast<int>(parse_long("llm.max_tokens", get_or("llm.max_tokens", "512")));
  std::string cache_dir = get_or("llm.cache_dir", "");
  if (cache_dir.empty()) {
    const char* env = std::getenv("ABSA_CACHE_DIR");
    cache_dir = env != nullptr && env[0] != '\0' ? env : ".absa-cache";
    cfg.cache_dir = cache_dir;
  } else {
    cfg.cache_dir = resolve(cache_dir);
  }

  cfg.nb_alpha = parse_double("nb.alpha", get_or("nb.alpha", "1.0"));
  cfg.lr_hyper.learning_rate = parse_double("lr.learning_rate", get_or("lr.learning_rate", "0.1"));
  cfg.lr_hyper.epochs = static_cast<int>(parse_long("lr.epochs", get_or("lr.epochs", "50")));
  cfg.lr_hyper.batch_size = static_cast<int>(parse_long("lr.batch_size", get_or("lr.batch_size", "8")));
  cfg.lr_hyper.l2 = parse_double("lr.l2", get_or("lr.l2", "0.0"));
  cfg.encoder_d_model = static_cast<int>(parse_long("encoder.d_model", get_or("encoder.d_model", "8")));
  cfg.encoder_n_layers = static_cast<int>(parse_long("encoder.n_layers", get_or("encoder.n_layers", "2")));
  cfg.encoder_d_ff = static_cast<int>(parse_long("encoder.d_ff", get_or("encoder.d_ff", "16")));
  cfg.encoder_max_len = static_cast<int>(parse_long("encoder.max_len", get_or("encoder.max_len", "16")));
  cfg.encoder_hyper.learning_rate =
      parse_double("encoder.learning_rate", get_or("encoder.learning_rate", "0.5"));
  cfg.encoder_hyper.epochs = static_cast<int>(parse_long("encoder.epochs", get_or("encoder.epochs", "100")));

  cfg.probe_train = get_or("probe.train", "");
  cfg.probe_test = get_or("probe.test", "");
  cfg.probe_mode = get_or("probe.mode", "gold-aspect");
  cfg.probe_include_aspect_tokens =
      parse_bool("probe.include_aspect_tokens", get_or("probe.include_aspect_tokens", "false"));
  return cfg;
}

std::vector<double> RunConfig::probe_fractions() const {
  const std::string raw = get_or("probe.fractions", "0,0.5");
  std::vector<double> fractions;
  std::istringstream in(raw);
  std::string part;
  while (std::getline(in, part, ',')) {
    fractions.push_back(parse_double("probe.fractions", strip(part)));
  }
  if (fractions.empty()) throw ParseError("config: probe.fractions is empty");
  return fractions;
}

std::filesystem::path RunConfig::output_dir() const {
  return resolve(get_or("output.dir", "."));
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw ValidationError("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace absa::cli
