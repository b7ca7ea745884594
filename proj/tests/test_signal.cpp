#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "qsense/common/errors.hpp"
#include "qsense/signal/signal.hpp"

using namespace qsense;
using std::numbers::pi;

namespace {

// Averages the Welch estimate over `traces` realizations.
SampledFunction mean_psd(const SpectralDensity& psd, double dt, std::size_t n, int traces,
                         std::uint64_t seed, std::size_t segment = 256) {
  SampledFunction acc;
  for (int i = 0; i < traces; ++i) {
    RandomStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const auto est = estimate_psd(synthesize_noise(psd, n * dt, dt, rng), segment);
    if (acc.x.empty()) {
      acc = est;
    } else {
      for (std::size_t k = 0; k < est.y.size(); ++k) acc.y[k] += est.y[k];
    }
  }
  for (auto& v : acc.y) v /= traces;
  return acc;
}

// Mean relative deviation over bins with lo <= ω <= hi, in bands of `band` bins.
double band_error(const SampledFunction& est, const SpectralDensity& psd, double lo, double hi,
                  std::size_t band) {
  double worst = 0.0;
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k < est.x.size(); ++k)
    if (est.x[k] >= lo && est.x[k] <= hi) bins.push_back(k);
  for (std::size_t i = 0; i + band <= bins.size(); i += band) {
    double e = 0.0, s = 0.0;
    for (std::size_t j = i; j < i + band; ++j) {
      e += est.y[bins[j]];
      s += psd.evaluate(est.x[bins[j]]);
    }
    worst = std::max(worst, std::abs(e / s - 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("tones") {
  const ToneSpec tone{2.0, 3.0, 0.0};
  CHECK(sample_waveform(std::span(&tone, 1), 0.0) == 2.0);
  const ToneSpec shifted{2.0, 1.0, pi / 4};
  CHECK(std::abs(sample_waveform(std::span(&shifted, 1), 1.0 / 8.0)) < 1e-15);
  const std::vector<ToneSpec> pair{{1.5, 2.0, 0.0}, {1.5, 2.0, pi}};
  for (double t : {0.0, 0.13, 0.77}) CHECK(std::abs(sample_waveform(pair, t)) < 1e-14);
}

TEST_CASE("spectral density shapes") {
  const auto l = SpectralDensity::lorentzian(2.0, 3.0, 0.5);
  CHECK(l.evaluate(3.0) == doctest::Approx(0.5 * 2.0 * (1.0 + 0.25 / (36.0 + 0.25))));
  CHECK(l.evaluate(-1.2) == l.evaluate(1.2));
  CHECK(*l.autocorrelation(0.0) == doctest::Approx(0.5 * 2.0 * 0.5));
  const auto p = SpectralDensity::power_law(1.0, 1.0, 0.1, 10.0);
  CHECK(p.evaluate(0.05) == 0.0);
  CHECK(p.evaluate(1.0) == doctest::Approx(0.1));
  CHECK(p.evaluate(11.0) == 0.0);
  CHECK_FALSE(p.autocorrelation(0.0).has_value());
  CHECK((l + p).evaluate(1.0) == doctest::Approx(l.evaluate(1.0) + p.evaluate(1.0)));
  CHECK_THROWS_AS(SpectralDensity::power_law(1.0, 1.0, 0.0, 10.0).validate(), ModelError);
  CHECK_THROWS_AS(SpectralDensity::lorentzian(1.0, 0.0, 0.0).validate(), ModelError);
}

TEST_CASE("zero spectrum gives a zero trace") {
  RandomStream rng(1);
  const auto trace = synthesize_noise(SpectralDensity::zero(), 128.0, 1.0, rng);
  CHECK(trace.samples.size() == 128);
  for (double v : trace.samples) CHECK(v == 0.0);
}

TEST_CASE("synthesis preconditions") {
  RandomStream rng(1);
  CHECK_THROWS_AS(synthesize_noise(SpectralDensity::white(1.0), 32.0, 1.0, rng), ArgumentError);
  CHECK_THROWS_AS(synthesize_noise(SpectralDensity::white(1.0), 100.5, 1.0, rng), ArgumentError);
  CHECK_THROWS_AS(
      synthesize_noise(SpectralDensity::power_law(1.0, 1.0, 0.1, 4.0), 128.0, 1.0, rng),
      AliasingError);
  CHECK_THROWS_AS(synthesize_noise(SpectralDensity::lorentzian(1.0, 0.0, 1.0), 128.0, 1.0, rng),
                  AliasingError);
  CHECK_NOTHROW(synthesize_noise(SpectralDensity::lorentzian(1.0, 0.0, 1.0), 128.0, 0.01, rng));
}

TEST_CASE("identical seeds give identical traces") {
  RandomStream a(42), b(42), c(43);
  const auto psd = SpectralDensity::lorentzian(1.0, 2.0, 0.2);
  const auto ta = synthesize_noise(psd, 51.2, 0.1, a);
  const auto tb = synthesize_noise(psd, 51.2, 0.1, b);
  const auto tc = synthesize_noise(psd, 51.2, 0.1, c);
  CHECK(ta.samples == tb.samples);
  CHECK(ta.samples != tc.samples);
}

TEST_CASE("white noise periodogram is flat at S0") {
  const double s0 = 0.7, dt = 0.05;
  const auto est = mean_psd(SpectralDensity::white(s0), dt, 4096, 200, 101);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 1; k + 1 < est.y.size(); ++k) {
    sum += est.y[k];
    ++count;
    if (k % 16 == 0) {
      CHECK(std::abs(sum / count / s0 - 1.0) < 0.05);
      sum = 0.0;
      count = 0;
    }
  }
}

TEST_CASE("round trip within 10 percent for all three families") {
  const double dt = 0.02;
  SUBCASE("white") {
    const auto psd = SpectralDensity::white(1.3);
    const auto est = mean_psd(psd, dt, 8192, 200, 5);
    CHECK(band_error(est, psd, 1.0, pi / dt * 0.95, 8) < 0.10);
  }
  SUBCASE("lorentzian") {
    const auto psd = SpectralDensity::lorentzian(1.0, 20.0, 2.0);
    const auto est = mean_psd(psd, dt, 8192, 200, 6);
    CHECK(band_error(est, psd, 8.0, 32.0, 4) < 0.10);
  }
  SUBCASE("power law") {
    const auto psd = SpectralDensity::power_law(2.0, 1.0, 5.0, 100.0);
    const auto est = mean_psd(psd, dt, 8192, 200, 7);
    CHECK(band_error(est, psd, 8.0, 90.0, 4) < 0.10);
  }
}

TEST_CASE("synthesized samples are Gaussian") {
  RandomStream rng(77);
  double m2 = 0.0, m4 = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < 16; ++i) {
    const auto trace = synthesize_noise(SpectralDensity::lorentzian(1.0, 3.0, 0.5), 65536 * 0.05,
                                        0.05, rng);
    for (double v : trace.samples) {
      m2 += v * v;
      m4 += v * v * v * v;
      ++n;
    }
  }
  m2 /= n;
  m4 /= n;
  CHECK(n >= 1000000);
  CHECK(std::abs(m4 / (m2 * m2) - 3.0) < 0.2);
}

TEST_CASE("lorentzian autocorrelation recovers the correlation time") {
  const double tc = 2.0, dt = 0.05;
  const auto psd = SpectralDensity::lorentzian(1.0, 0.0, 1.0 / tc);
  std::vector<double> mean;
  std::vector<double> lags;
  const int traces = 100;
  for (int i = 0; i < traces; ++i) {
    RandomStream rng(derive_seed(9, i));
    const auto g = estimate_autocorrelation(synthesize_noise(psd, 16384 * dt, dt, rng), 3.0 * tc);
    if (mean.empty()) {
      mean.assign(g.y.size(), 0.0);
      lags = g.x;
    }
    for (std::size_t k = 0; k < g.y.size(); ++k) mean[k] += g.y[k] / traces;
  }
  // Least-squares slope of ln G against lag.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    if (lags[k] > 2.0 * tc) break;
    const double y = std::log(mean[k]);
    sx += lags[k];
    sy += y;
    sxx += lags[k] * lags[k];
    sxy += lags[k] * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(-1.0 / slope / tc - 1.0) < 0.10);
  CHECK(mean[0] == doctest::Approx(*psd.autocorrelation(0.0)).epsilon(0.05));
}

TEST_CASE("autocorrelation of simple traces") {
  NoiseTrace constant{0.1, std::vector<double>(400, 1.5), 0};
  const auto g = estimate_autocorrelation(constant, 5.0);
  for (double v : g.y) CHECK(v == doctest::Approx(2.25).epsilon(1e-12));

  NoiseTrace tone{0.01, {}, 0};
  const double f = 2.0;
  for (int i = 0; i < 20000; ++i) tone.samples.push_back(std::cos(2 * pi * f * i * 0.01));
  const auto gt = estimate_autocorrelation(tone, 1.0);
  for (std::size_t k = 0; k < gt.x.size(); k += 7)
    CHECK(gt.y[k] == doctest::Approx(0.5 * std::cos(2 * pi * f * gt.x[k])).epsilon(0.02));

  RandomStream rng(4);
  const double s0 = 1.0, dt = 0.1;
  const auto white = synthesize_noise(SpectralDensity::white(s0), 65536 * dt, dt, rng);
  const auto gw = estimate_autocorrelation(white, 2.0);
  const double var = s0 / dt;
  const double se = var / std::sqrt(65536.0);
  for (std::size_t k = 2; k < gw.y.size(); ++k) CHECK(std::abs(gw.y[k]) < 5.0 * se);
  CHECK(gw.y[0] == doctest::Approx(var).epsilon(0.03));

  CHECK_THROWS_AS(estimate_autocorrelation(white, white.duration() / 3.0), ArgumentError);
}

TEST_CASE("psd of a tone peaks at its frequency") {
  NoiseTrace tone{0.01, {}, 0};
  const double f = 3.5;
  for (int i = 0; i < 8192; ++i) tone.samples.push_back(std::cos(2 * pi * f * i * 0.01));
  const auto est = estimate_psd(tone, 1024);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < est.y.size(); ++k)
    if (est.y[k] > est.y[peak]) peak = k;
  CHECK(std::abs(est.x[peak] - 2 * pi * f) <= est.x[1]);

  NoiseTrace zero{0.01, std::vector<double>(256, 0.0), 0};
  for (double v : estimate_psd(zero).y) CHECK(v == 0.0);
}

TEST_CASE("noise trace CSV round trip and periodic lookup") {
  RandomStream rng(8);
  const auto trace = synthesize_noise(SpectralDensity::white(1.0), 6.4, 0.1, rng);
  const auto path = std::filesystem::temp_directory_path() / "qsense_trace_test.csv";
  trace.write_csv(path);
  const auto back = NoiseTrace::read_csv(path);
  std::filesystem::remove(path);
  CHECK(back.samples == trace.samples);
  CHECK(back.dt == doctest::Approx(0.1));
  CHECK(trace.value_at(0.05) == trace.samples[0]);
  CHECK(trace.value_at(6.4 + 0.15) == trace.samples[1]);
  CHECK(trace.value_at(-0.05) == trace.samples.back());
}
