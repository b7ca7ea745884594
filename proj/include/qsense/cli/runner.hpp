#pragma once

// Batch experiment runner: typed configs, the experiment registry, and runs
// that write CSV data, a JSON summary and a manifest into one directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qsense::cli {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

enum class ParamType { Number, Integer, Boolean, Choice };

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Number;
  Json fallback;  ///< null marks a required parameter
  std::optional<double> min;
  std::optional<double> max;
  bool min_exclusive = false;
  std::vector<std::string> choices;
  std::string description;

  bool required() const { return fallback.is_null(); }
};

struct ValidationIssue {
  std::string path;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ValidationIssue> issues);
  ConfigError(std::string path, std::string message);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

struct ExperimentConfig {
  std::string experiment;
  Json parameters = Json::object();  ///< every schema parameter, defaults filled in
  std::uint64_t seed = 0;
  std::size_t trials = 1000;
  std::filesystem::path output_dir = "qsense_out";

  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string choice(const std::string& key) const;

  /// Canonical document, accepted again by validate_config.
  Json to_json() const;
};

/// Writes data files into the staging directory and returns the summary.
using ExperimentFn = std::function<Json(const ExperimentConfig&, const std::filesystem::path&)>;
using CrossCheckFn = std::function<void(const Json&, std::vector<ValidationIssue>&)>;

struct ExperimentEntry {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  bool uses_trials = false;
  CrossCheckFn cross_check;
  ExperimentFn run;
};

const std::vector<ExperimentEntry>& experiment_registry();
const ExperimentEntry& find_experiment(const std::string& name);

/// Every experiment with its parameter schema.
Json list_experiments();

/// Levenshtein distance.
std::size_t edit_distance(const std::string& a, const std::string& b);
/// Closest candidate within a distance of half the longer name, if any.
std::optional<std::string> closest_match(const std::string& key,
                                         const std::vector<std::string>& candidates);

/// Collects every violation before throwing ConfigError.
ExperimentConfig validate_config(const Json& document);
/// Parses JSON text, then validates. Parse failures become a ConfigError at path "".
ExperimentConfig validate_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct OutputFile {
  std::string name;
  std::string sha256;
};

struct RunManifest {
  Json config;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
  std::vector<OutputFile> outputs;

  Json to_json() const;
};

struct RunResult {
  Json summary;
  RunManifest manifest;
  std::filesystem::path output_dir;
};

/// Runs into a staging directory inside output_dir and moves the files into
/// place on success; manifest.json is written last. On failure the staging
/// directory is removed and the error is rethrown.
RunResult run_experiment(const ExperimentConfig& config);

std::string sha256_hex(const std::filesystem::path& path);

}  // namespace qsense::cli
