#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qsense/cli/runner.hpp"
#include "qsense/common/csv.hpp"

namespace qsense::cli {
namespace {

const std::vector<std::string> kTopLevelKeys{"experiment", "parameters", "seed", "trials",
                                             "output_dir"};

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::string out = "invalid config:";
  for (const auto& i : issues) out += "\n  " + (i.path.empty() ? "<root>" : i.path) + ": " + i.message;
  return out;
}

std::string unknown_key_message(const std::string& key, const std::vector<std::string>& known) {
  std::string msg = "unknown key \"" + key + "\"";
  if (auto s = closest_match(key, known)) msg += "; did you mean \"" + *s + "\"?";
  return msg;
}

std::string bound_text(double v) { return format_double(v); }

void check_param(const ParamSpec& spec, const Json& value, const std::string& path,
                 std::vector<ValidationIssue>& issues) {
  auto fail = [&](std::string msg) { issues.push_back({path, std::move(msg)}); };
  switch (spec.type) {
    case ParamType::Boolean:
      if (!value.is_boolean()) fail("expected a boolean");
      return;
    case ParamType::Choice: {
      if (!value.is_string()) return fail("expected a string");
      const auto s = value.get<std::string>();
      if (std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
        std::string msg = "\"" + s + "\" is not one of";
        for (const auto& c : spec.choices) msg += " " + c;
        if (auto m = closest_match(s, spec.choices)) msg += "; did you mean \"" + *m + "\"?";
        fail(msg);
      }
      return;
    }
    case ParamType::Integer:
      if (!value.is_number_integer()) return fail("expected an integer");
      break;
    case ParamType::Number:
      if (!value.is_number()) return fail("expected a number");
      if (!std::isfinite(value.get<double>())) return fail("must be finite");
      break;
  }
  const double v = value.get<double>();
  if (spec.min) {
    if (spec.min_exclusive && !(v > *spec.min)) fail("must be > " + bound_text(*spec.min));
    if (!spec.min_exclusive && !(v >= *spec.min)) fail("must be >= " + bound_text(*spec.min));
  }
  if (spec.max && !(v <= *spec.max)) fail("must be <= " + bound_text(*spec.max));
}

Json param_schema(const ParamSpec& p) {
  Json j;
  j["name"] = p.name;
  switch (p.type) {
    case ParamType::Number: j["type"] = "number"; break;
    case ParamType::Integer: j["type"] = "integer"; break;
    case ParamType::Boolean: j["type"] = "boolean"; break;
    case ParamType::Choice: j["type"] = "string"; j["enum"] = p.choices; break;
  }
  j["required"] = p.required();
  if (!p.required()) j["default"] = p.fallback;
  if (p.min) j[p.min_exclusive ? "exclusiveMinimum" : "minimum"] = *p.min;
  if (p.max) j["maximum"] = *p.max;
  j["description"] = p.description;
  return j;
}

}  // namespace

ConfigError::ConfigError(std::vector<ValidationIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ConfigError::ConfigError(std::string path, std::string message)
    : ConfigError(std::vector<ValidationIssue>{{std::move(path), std::move(message)}}) {}

double ExperimentConfig::number(const std::string& key) const { return parameters.at(key).get<double>(); }
long long ExperimentConfig::integer(const std::string& key) const {
  return parameters.at(key).get<long long>();
}
bool ExperimentConfig::flag(const std::string& key) const { return parameters.at(key).get<bool>(); }
std::string ExperimentConfig::choice(const std::string& key) const {
  return parameters.at(key).get<std::string>();
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["trials"] = trials;
  j["output_dir"] = output_dir.generic_string();
  j["parameters"] = parameters;
  return j;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<std::string> closest_match(const std::string& key,
                                         const std::vector<std::string>& candidates) {
  std::optional<std::string> best;
  std::size_t best_d = 0;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (2 * d > std::max(key.size(), c.size())) continue;
    if (!best || d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

const ExperimentEntry& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return e;
  throw ConfigError("experiment", "unknown experiment \"" + name + "\"");
}

Json list_experiments() {
  Json out;
  out["version"] = kVersion;
  Json top = Json::array();
  top.push_back({{"name", "experiment"}, {"type", "string"}, {"required", true}});
  top.push_back({{"name", "parameters"}, {"type", "object"}, {"required", false}});
  top.push_back({{"name", "seed"}, {"type", "integer"}, {"required", false}, {"default", 0}, {"minimum", 0}});
  top.push_back({{"name", "trials"}, {"type", "integer"}, {"required", false}, {"default", 1000}, {"minimum", 1}});
  top.push_back({{"name", "output_dir"}, {"type", "string"}, {"required", false}, {"default", "qsense_out"}});
  out["config"] = top;
  Json list = Json::array();
  for (const auto& e : experiment_registry()) {
    Json j;
    j["name"] = e.name;
    j["description"] = e.description;
    j["uses_trials"] = e.uses_trials;
    j["outputs"] = {e.name + ".csv", "summary.json", "manifest.json"};
    Json params = Json::array();
    for (const auto& p : e.params) params.push_back(param_schema(p));
    j["parameters"] = params;
    list.push_back(j);
  }
  out["experiments"] = list;
  return out;
}

ExperimentConfig validate_config(const Json& doc) {
  std::vector<ValidationIssue> issues;
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");

  for (const auto& [key, value] : doc.items())
    if (std::find(kTopLevelKeys.begin(), kTopLevelKeys.end(), key) == kTopLevelKeys.end())
      issues.push_back({key, unknown_key_message(key, kTopLevelKeys)});

  ExperimentConfig cfg;
  const ExperimentEntry* entry = nullptr;
  if (!doc.contains("experiment")) {
    issues.push_back({"experiment", "required"});
  } else if (!doc["experiment"].is_string()) {
    issues.push_back({"experiment", "expected a string"});
  } else {
    cfg.experiment = doc["experiment"].get<std::string>();
    for (const auto& e : experiment_registry())
      if (e.name == cfg.experiment) entry = &e;
    if (!entry) {
      std::vector<std::string> names;
      for (const auto& e : experiment_registry()) names.push_back(e.name);
      std::string msg = "unknown experiment \"" + cfg.experiment + "\"";
      if (auto s = closest_match(cfg.experiment, names)) msg += "; did you mean \"" + *s + "\"?";
      issues.push_back({"experiment", msg});
    }
  }

  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (s.is_number_unsigned()) cfg.seed = s.get<std::uint64_t>();
    else issues.push_back({"seed", "expected a non-negative integer"});
  }
  if (doc.contains("trials")) {
    const auto& t = doc["trials"];
    if (!t.is_number_integer()) issues.push_back({"trials", "expected an integer"});
    else if (t.get<long long>() < 1 || t.get<long long>() > 100000000)
      issues.push_back({"trials", "must be in [1, 100000000]"});
    else cfg.trials = t.get<std::size_t>();
  }
  if (doc.contains("output_dir")) {
    const auto& o = doc["output_dir"];
    if (!o.is_string() || o.get<std::string>().empty())
      issues.push_back({"output_dir", "expected a non-empty path string"});
    else cfg.output_dir = o.get<std::string>();
  }

  Json params = Json::object();
  if (doc.contains("parameters")) {
    if (doc["parameters"].is_object()) params = doc["parameters"];
    else issues.push_back({"parameters", "expected an object"});
  }

  if (entry) {
    std::vector<std::string> names;
    for (const auto& p : entry->params) names.push_back(p.name);
    for (const auto& [key, value] : params.items())
      if (std::find(names.begin(), names.end(), key) == names.end())
        issues.push_back({"parameters." + key, unknown_key_message(key, names)});

    const std::size_t before = issues.size();
    for (const auto& p : entry->params) {
      const std::string path = "parameters." + p.name;
      if (!params.contains(p.name)) {
        if (p.required()) issues.push_back({path, "required parameter missing"});
        else cfg.parameters[p.name] = p.fallback;
        continue;
      }
      check_param(p, params[p.name], path, issues);
      cfg.parameters[p.name] = params[p.name];
    }
    if (issues.size() == before && entry->cross_check) entry->cross_check(cfg.parameters, issues);
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

ExperimentConfig validate_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  return validate_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config_text(ss.str());
}

}  // namespace qsense::cli
