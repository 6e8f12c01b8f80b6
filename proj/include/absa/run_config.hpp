#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "absa/eval.hpp"

namespace absa::cli {

// Flat key=value run declaration with section prefixes (llm.endpoint=...,
// matrix.mode=...). Unknown keys are rejected; referenced paths resolve
// relative to the config file and must exist at load.
class RunConfig {
 public:
  static RunConfig load_file(const std::filesystem::path& path);
  static RunConfig parse(std::string_view text, std::filesystem::path base_dir);

  // Flag overrides use the same key grammar and precedence over the file.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Loads corpora, knowledge, fixtures and templates into a MatrixConfig.
  eval::MatrixConfig build_matrix_config() const;

  std::vector<double> probe_fractions() const;
  std::filesystem::path output_dir() const;

 private:
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::filesystem::path resolve(const std::string& value) const;

  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

// Writes via a temp file in the target directory plus rename.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace absa::cli
