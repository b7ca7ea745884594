#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qsense/cli/runner.hpp"
#include "qsense/common/csv.hpp"

using namespace qsense::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = QSENSE_GOLDEN_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("qsense_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<ValidationIssue> issues_of(const Json& doc) {
  try {
    validate_config(doc);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<ValidationIssue>& issues, const std::string& path,
               const std::string& fragment = "") {
  for (const auto& i : issues)
    if (i.path == path && i.message.find(fragment) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("edit distance and suggestions") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("same", "same") == 0);
  CHECK(closest_match("omega_zero", {"omega0", "gamma", "t_start", "t_stop"}) == "omega0");
  CHECK_FALSE(closest_match("zzzzzz", {"omega0", "gamma"}).has_value());
}

TEST_CASE("sha256 of known inputs") {
  const auto dir = scratch("sha");
  fs::create_directories(dir);
  std::ofstream(dir / "abc") << "abc";
  std::ofstream(dir / "empty");
  CHECK(sha256_hex(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(dir / "empty") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  fs::remove_all(dir);
}

TEST_CASE("registry listing") {
  const auto dump = list_experiments().dump();
  const auto parsed = Json::parse(dump);
  const auto& exps = parsed.at("experiments");
  CHECK(exps.size() == 14);
  std::vector<std::string> names;
  for (const auto& e : exps) names.push_back(e.at("name"));
  for (const char* n : {"ramsey", "rabi", "multipulse", "correlation", "walsh", "continuous_sampling",
                        "noise_spectroscopy", "relaxometry", "sensitivity", "allan",
                        "phase_estimation", "dynamic_range", "ghz", "squeezing"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  bool allan_ts = false;
  for (const auto& e : exps)
    if (e.at("name") == "allan")
      for (const auto& p : e.at("parameters"))
        if (p.at("name") == "t_s") allan_ts = true;
  CHECK(allan_ts);
}

TEST_CASE("config validation") {
  SUBCASE("minimal ramsey config") {
    const auto cfg = validate_config({{"experiment", "ramsey"}, {"parameters", {{"omega0", 1.0}}}});
    CHECK(cfg.experiment == "ramsey");
    CHECK(cfg.number("omega0") == 1.0);
    CHECK(cfg.integer("points") == 20);
    CHECK(cfg.seed == 0);
    CHECK(cfg.trials == 1000);
    // The canonical form validates to the same config.
    CHECK(validate_config(cfg.to_json()).to_json() == cfg.to_json());
  }
  SUBCASE("non-positive tau") {
    const auto issues = issues_of({{"experiment", "multipulse"},
                                   {"parameters", {{"n", 8}, {"tau", 0.0}, {"v", 0.1}}}});
    CHECK(has_issue(issues, "parameters.tau", "> 0"));
  }
  SUBCASE("unknown key suggests the closest name") {
    const auto issues = issues_of({{"experiment", "ramsey"},
                                   {"parameters", {{"omega_zero", 1.0}}}});
    CHECK(has_issue(issues, "parameters.omega_zero", "\"omega0\""));
    CHECK(has_issue(issues, "parameters.omega0", "required"));
  }
  SUBCASE("all violations reported together") {
    const auto issues = issues_of({{"experiment", "multipulse"},
                                   {"sed", 3},
                                   {"trials", 0},
                                   {"parameters",
                                    {{"n", 3}, {"tau", -1.0}, {"v", "big"}, {"model", "random"}}}});
    CHECK(has_issue(issues, "sed", "\"seed\""));
    CHECK(has_issue(issues, "trials"));
    CHECK(has_issue(issues, "parameters.tau"));
    CHECK(has_issue(issues, "parameters.v", "number"));
    CHECK(has_issue(issues, "parameters.model", "not one of"));
    CHECK(issues.size() == 5);
  }
  SUBCASE("cross-field checks") {
    const auto issues = issues_of({{"experiment", "multipulse"},
                                   {"parameters", {{"n", 3}, {"tau", 1.0}, {"v", 0.1}}}});
    CHECK(has_issue(issues, "parameters.n", "even"));
    CHECK(has_issue(issues_of({{"experiment", "correlation"},
                               {"parameters",
                                {{"tau", 1.0}, {"v_pk", 1.0}, {"f_ac", 0.5}, {"t1_start", 1.0},
                                 {"t1_step", 0.1}}}}),
                    "parameters.t1_start", "n*tau"));
  }
  SUBCASE("experiment errors") {
    CHECK(has_issue(issues_of({{"experiment", "ramsy"}}), "experiment", "\"ramsey\""));
    CHECK(has_issue(issues_of({{"parameters", Json::object()}}), "experiment", "required"));
    CHECK(has_issue(issues_of(Json::array()), ""));
    CHECK(has_issue(issues_of({{"experiment", "ramsey"}, {"seed", -1},
                               {"parameters", {{"omega0", 1}}}}),
                    "seed"));
    CHECK(has_issue(issues_of({{"experiment", "allan"}, {"parameters", {{"t_s", 1.0}, {"samples", 1.5}}}}),
                    "parameters.samples", "integer"));
  }
  SUBCASE("parse errors") {
    CHECK_THROWS_AS(validate_config_text("{\"experiment\": "), ConfigError);
    CHECK_NOTHROW(validate_config_text(R"({"experiment": "walsh", "parameters": {"t": 1, "f_ac": 2}})"));
  }
}

TEST_CASE("golden outputs for every registry entry") {
  std::size_t checked = 0;
  for (const auto& e : experiment_registry()) {
    CAPTURE(e.name);
    const auto dir = kGolden / e.name;
    REQUIRE(fs::exists(dir / "config.json"));
    auto cfg = load_config(dir / "config.json");
    cfg.output_dir = scratch(e.name);
    const auto result = run_experiment(cfg);

    for (const char* f : {"summary.json", "manifest.json"}) CHECK(fs::exists(cfg.output_dir / f));
    CHECK(fs::exists(cfg.output_dir / (e.name + ".csv")));
    CHECK_FALSE(fs::exists(cfg.output_dir / ".staging"));
    for (const auto& entry : fs::directory_iterator(dir / "expected")) {
      const auto name = entry.path().filename();
      CAPTURE(name);
      CHECK(slurp(cfg.output_dir / name) == slurp(entry.path()));
    }
    const auto manifest = Json::parse(slurp(cfg.output_dir / "manifest.json"));
    CHECK(manifest.at("seed") == cfg.seed);
    CHECK(manifest.at("version") == kVersion);
    CHECK(manifest.at("config") == cfg.to_json());
    CHECK(manifest.at("outputs").size() == 2);
    for (const auto& o : manifest.at("outputs"))
      CHECK(o.at("sha256") == sha256_hex(cfg.output_dir / o.at("file").get<std::string>()));
    fs::remove_all(cfg.output_dir);
    ++checked;
  }
  CHECK(checked == 14);
}

TEST_CASE("repeat runs are byte-identical, also across thread counts") {
  auto cfg = load_config(kGolden / "multipulse" / "config.json");
  cfg.output_dir = scratch("repeat_a");
  run_experiment(cfg);
  setenv("QSENSE_THREADS", "3", 1);
  auto cfg_b = cfg;
  cfg_b.output_dir = scratch("repeat_b");
  run_experiment(cfg_b);
  unsetenv("QSENSE_THREADS");
  for (const char* f : {"multipulse.csv", "summary.json"})
    CHECK(slurp(cfg.output_dir / f) == slurp(cfg_b.output_dir / f));

  // A different seed changes the Monte-Carlo data.
  auto cfg_c = cfg;
  cfg_c.seed += 1;
  cfg_c.output_dir = scratch("repeat_c");
  run_experiment(cfg_c);
  CHECK(slurp(cfg.output_dir / "multipulse.csv") != slurp(cfg_c.output_dir / "multipulse.csv"));
  for (const auto& d : {cfg.output_dir, cfg_b.output_dir, cfg_c.output_dir}) fs::remove_all(d);
}

TEST_CASE("failed runs leave no partial output") {
  // Lorentzian far above the noise Nyquist frequency.
  auto cfg = validate_config({{"experiment", "noise_spectroscopy"},
                              {"trials", 10},
                              {"parameters",
                               {{"s0", 1.0}, {"half_width", 50.0}, {"tau_min", 0.5},
                                {"tau_max", 1.0}, {"noise_dt", 0.1}}}});
  cfg.output_dir = scratch("failure");
  CHECK_THROWS(run_experiment(cfg));
  CHECK(fs::exists(cfg.output_dir));
  CHECK(fs::is_empty(cfg.output_dir));
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("summaries agree with closed forms") {
  auto run = [](const std::string& name) {
    auto cfg = load_config(kGolden / name / "config.json");
    cfg.output_dir = scratch("summary_" + name);
    auto s = run_experiment(cfg).summary;
    fs::remove_all(cfg.output_dir);
    return s;
  };
  const auto sens = run("sensitivity");
  CHECK(sens.at("v_min").get<double>() ==
        doctest::Approx(sens.at("v_min_closed_form").get<double>()).epsilon(1e-6));
  CHECK(sens.at("t_opt").get<double>() == doctest::Approx(1.0).epsilon(1e-6));

  const auto ghz = run("ghz");
  CHECK(ghz.at("frequency_ratio").get<double>() == doctest::Approx(5.0));
  CHECK(ghz.at("qcrb_ratio").get<double>() == doctest::Approx(std::sqrt(5.0)));

  const auto sq = run("squeezing");
  CHECK(sq.at("css_xi_r").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sq.at("min_xi_r").get<double>() < 1.0);

  const auto ns = run("noise_spectroscopy");
  for (const auto& r : ns.at("rel_error")) CHECK(std::abs(r.get<double>()) < 0.2);

  const auto rx = run("relaxometry");
  CHECK(std::abs(rx.at("rel_error").get<double>()) < 0.2);

  const auto dr = run("dynamic_range");
  CHECK(dr.at("exponent_fixed").get<double>() == doctest::Approx(0.5));
  CHECK(dr.at("exponent_schedule").get<double>() == doctest::Approx(1.0).epsilon(0.02));

  for (const char* name : {"ramsey", "rabi", "multipulse", "correlation"}) {
    CAPTURE(name);
    CHECK(run(name).at("within_5_sigma").get<bool>());
  }

  const auto ram = load_config(kGolden / "ramsey" / "config.json");
  const auto csv = qsense::CsvTable::read(kGolden / "ramsey" / "expected" / "ramsey.csv");
  CHECK(csv.columns == std::vector<std::string>{"t_s", "p_hat", "sigma_p", "p_analytic"});
  CHECK(csv.rows.size() == static_cast<std::size_t>(ram.integer("points")));
}
