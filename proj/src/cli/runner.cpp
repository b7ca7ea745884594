#include "qsense/cli/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <memory>
#include <system_error>

namespace qsense::cli {
namespace fs = std::filesystem;
namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::string sha256_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

Json RunManifest::to_json() const {
  Json j;
  j["config"] = config;
  j["version"] = version;
  j["seed"] = seed;
  j["wall_clock_s"] = wall_clock_s;
  Json files = Json::array();
  for (const auto& f : outputs) files.push_back({{"file", f.name}, {"sha256", f.sha256}});
  j["outputs"] = files;
  return j;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const auto& entry = find_experiment(config.experiment);
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = config.output_dir;
  const fs::path stage = out / ".staging";
  std::vector<fs::path> placed;

  auto cleanup = [&] {
    std::error_code ec;
    fs::remove_all(stage, ec);
    for (const auto& p : placed) fs::remove(p, ec);
  };

  RunResult result;
  result.output_dir = out;
  try {
    fs::create_directories(out);
    fs::remove_all(stage);
    fs::create_directories(stage);

    Json summary = entry.run(config, stage);
    summary["experiment"] = config.experiment;
    summary["seed"] = config.seed;
    write_text(stage / "summary.json", summary.dump(2) + "\n");

    std::vector<std::string> names;
    for (const auto& f : fs::directory_iterator(stage))
      if (f.is_regular_file()) names.push_back(f.path().filename().string());
    std::sort(names.begin(), names.end());

    RunManifest& m = result.manifest;
    m.config = config.to_json();
    m.seed = config.seed;
    for (const auto& n : names) m.outputs.push_back({n, sha256_hex(stage / n)});

    for (const auto& n : names) {
      fs::rename(stage / n, out / n);
      placed.push_back(out / n);
    }
    m.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(stage / "manifest.json", m.to_json().dump(2) + "\n");
    fs::rename(stage / "manifest.json", out / "manifest.json");
    fs::remove_all(stage);
    result.summary = std::move(summary);
  } catch (...) {
    cleanup();
    throw;
  }
  return result;
}

}  // namespace qsense::cli
