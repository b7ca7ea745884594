#include "qsense/signal/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "qsense/common/csv.hpp"
#include "qsense/common/errors.hpp"
#include "qsense/common/fft.hpp"

namespace qsense {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double lorentz(double x, double w) { return w * w / (x * x + w * w); }

// ∫_lo^hi ω^{−a} dω
double power_integral(double a, double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (std::abs(a - 1.0) < 1e-12) return std::log(hi / lo);
  return (std::pow(hi, 1.0 - a) - std::pow(lo, 1.0 - a)) / (1.0 - a);
}

// Total power ∫ S dω over the whole line, and the part with |ω| > omega.
struct PowerSplit {
  double total = 0.0;
  double above = 0.0;
};

PowerSplit power_split(const SpectralDensity::Component& c, double omega) {
  return std::visit(
      overloaded{
          [](const WhiteNoise&) { return PowerSplit{}; },
          [omega](const LorentzianNoise& l) {
            const double w = l.half_width;
            const double total = kPi * w * l.s0;
            const double frac = ((kPi / 2 - std::atan((omega - l.omega_c) / w)) +
                                 (kPi / 2 - std::atan((omega + l.omega_c) / w))) /
                                kPi;
            return PowerSplit{total, total * frac};
          },
          [omega](const PowerLawNoise& p) {
            const double scale = 2.0 * p.amplitude * std::pow(p.omega_min, p.exponent);
            const double total = scale * power_integral(p.exponent, p.omega_min, p.omega_max);
            const double lo = std::max(omega, p.omega_min);
            return PowerSplit{total, scale * power_integral(p.exponent, lo, p.omega_max)};
          }},
      c);
}

}  // namespace

double sample_waveform(std::span<const ToneSpec> tones, double t) {
  double v = 0.0;
  for (const auto& tone : tones) v += tone.v_pk * std::cos(2.0 * kPi * tone.f_ac * t + tone.alpha);
  return v;
}

SpectralDensity::SpectralDensity(Component c) { components_.push_back(c); }

SpectralDensity SpectralDensity::operator+(const SpectralDensity& other) const {
  SpectralDensity sum = *this;
  sum.components_.insert(sum.components_.end(), other.components_.begin(),
                         other.components_.end());
  return sum;
}

SpectralDensity SpectralDensity::scaled(double factor) const {
  SpectralDensity out = *this;
  for (auto& c : out.components_) {
    std::visit(overloaded{[factor](WhiteNoise& w) { w.s0 *= factor; },
                          [factor](LorentzianNoise& l) { l.s0 *= factor; },
                          [factor](PowerLawNoise& p) { p.amplitude *= factor; }},
               c);
  }
  return out;
}

double SpectralDensity::evaluate(double omega) const {
  const double a = std::abs(omega);
  double s = 0.0;
  for (const auto& c : components_) {
    s += std::visit(
        overloaded{[](const WhiteNoise& w) { return w.s0; },
                   [a](const LorentzianNoise& l) {
                     return l.s0 * 0.5 *
                            (lorentz(a - l.omega_c, l.half_width) +
                             lorentz(a + l.omega_c, l.half_width));
                   },
                   [a](const PowerLawNoise& p) {
                     if (a < p.omega_min || a > p.omega_max) return 0.0;
                     return p.amplitude * std::pow(p.omega_min / a, p.exponent);
                   }},
        c);
  }
  return s;
}

std::optional<double> SpectralDensity::autocorrelation(double tau) const {
  double g = 0.0;
  for (const auto& c : components_) {
    if (const auto* l = std::get_if<LorentzianNoise>(&c)) {
      g += l->s0 * 0.5 * l->half_width * std::exp(-l->half_width * std::abs(tau)) *
           std::cos(l->omega_c * tau);
    } else {
      return std::nullopt;
    }
  }
  return g;
}

double SpectralDensity::support() const {
  double s = 0.0;
  for (const auto& c : components_) {
    if (const auto* l = std::get_if<LorentzianNoise>(&c))
      s = std::max(s, l->omega_c + 10.0 * l->half_width);
    else if (const auto* p = std::get_if<PowerLawNoise>(&c))
      s = std::max(s, p->omega_max);
  }
  return s;
}

std::vector<double> SpectralDensity::breakpoints() const {
  std::vector<double> b;
  for (const auto& c : components_) {
    if (const auto* p = std::get_if<PowerLawNoise>(&c)) {
      b.push_back(p->omega_min);
      b.push_back(p->omega_max);
    } else if (const auto* l = std::get_if<LorentzianNoise>(&c)) {
      if (l->omega_c > 0) b.push_back(l->omega_c);
    }
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

double SpectralDensity::power_fraction_above(double omega) const {
  double total = 0.0, above = 0.0;
  for (const auto& c : components_) {
    const auto split = power_split(c, omega);
    total += split.total;
    above += split.above;
  }
  return total > 0.0 ? above / total : 0.0;
}

bool SpectralDensity::is_zero() const {
  for (const auto& c : components_) {
    const bool zero = std::visit(overloaded{[](const WhiteNoise& w) { return w.s0 == 0.0; },
                                            [](const LorentzianNoise& l) { return l.s0 == 0.0; },
                                            [](const PowerLawNoise& p) {
                                              return p.amplitude == 0.0;
                                            }},
                                 c);
    if (!zero) return false;
  }
  return true;
}

bool SpectralDensity::has_white() const {
  for (const auto& c : components_)
    if (std::holds_alternative<WhiteNoise>(c) && std::get<WhiteNoise>(c).s0 != 0.0) return true;
  return false;
}

void SpectralDensity::validate() const {
  for (const auto& c : components_) {
    std::visit(overloaded{[](const WhiteNoise& w) {
                            if (!(w.s0 >= 0.0) || !std::isfinite(w.s0))
                              throw ModelError("white noise: S0 must be finite and >= 0");
                          },
                          [](const LorentzianNoise& l) {
                            if (!(l.s0 >= 0.0) || !std::isfinite(l.s0))
                              throw ModelError("lorentzian: S0 must be finite and >= 0");
                            if (!(l.half_width > 0.0) || !std::isfinite(l.half_width))
                              throw ModelError("lorentzian: half_width must be > 0");
                            if (!(l.omega_c >= 0.0) || !std::isfinite(l.omega_c))
                              throw ModelError("lorentzian: omega_c must be >= 0");
                          },
                          [](const PowerLawNoise& p) {
                            if (!(p.amplitude >= 0.0) || !std::isfinite(p.amplitude))
                              throw ModelError("power law: amplitude must be finite and >= 0");
                            if (!std::isfinite(p.exponent))
                              throw ModelError("power law: exponent must be finite");
                            if (!(p.omega_min > 0.0) || !(p.omega_max > p.omega_min) ||
                                !std::isfinite(p.omega_max))
                              throw ModelError(
                                  "power law: need 0 < omega_min < omega_max < inf (unbounded "
                                  "1/f is not supported)");
                          }},
               c);
  }
}

// --------------------------------------------------------------------------

double NoiseTrace::value_at(double t) const {
  if (samples.empty()) return 0.0;
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  auto i = static_cast<std::ptrdiff_t>(std::floor(t / dt));
  i %= n;
  if (i < 0) i += n;
  return samples[static_cast<std::size_t>(i)];
}

void NoiseTrace::write_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"time_s", "value"};
  for (std::size_t i = 0; i < samples.size(); ++i)
    table.add_row({static_cast<double>(i) * dt, samples[i]});
  table.write(path);
}

NoiseTrace NoiseTrace::read_csv(const std::filesystem::path& path) {
  const auto table = CsvTable::read(path);
  if (table.columns.size() != 2 || table.rows.size() < 2)
    throw ArgumentError("noise trace CSV needs columns time_s,value and >= 2 rows");
  NoiseTrace trace;
  trace.dt = table.rows[1][0] - table.rows[0][0];
  if (!(trace.dt > 0.0)) throw ArgumentError("noise trace CSV: time column must increase");
  for (const auto& row : table.rows) trace.samples.push_back(row[1]);
  return trace;
}

void check_band_limit(const SpectralDensity& psd, double dt) {
  psd.validate();
  const double nyquist = kPi / dt;
  for (const auto& c : psd.components()) {
    if (const auto* p = std::get_if<PowerLawNoise>(&c)) {
      if (p->amplitude > 0.0 && p->omega_max > nyquist * (1.0 + 1e-12))
        throw AliasingError("power-law cutoff " + std::to_string(p->omega_max) +
                            " rad/s exceeds Nyquist " + std::to_string(nyquist) +
                            " rad/s; reduce dt");
    } else if (const auto* l = std::get_if<LorentzianNoise>(&c)) {
      if (l->s0 > 0.0) {
        const auto split = power_split(c, nyquist);
        if (split.above > 0.01 * split.total)
          throw AliasingError("lorentzian puts " + std::to_string(100.0 * split.above / split.total) +
                              "% of its power above Nyquist " + std::to_string(nyquist) +
                              " rad/s; reduce dt");
      }
    }
  }
}

NoiseTrace synthesize_noise(const SpectralDensity& psd, double duration, double dt,
                            RandomStream& rng) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw ArgumentError("synthesize_noise: dt, duration > 0");
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 64)
    throw ArgumentError("synthesize_noise: duration/dt must be an integer >= 64");
  check_band_limit(psd, dt);
  const auto n = static_cast<std::size_t>(rounded);
  NoiseTrace trace{dt, std::vector<double>(n, 0.0), rng.seed()};
  if (psd.is_zero()) return trace;

  std::vector<std::complex<double>> half(n / 2 + 1);
  const double dw = 2.0 * kPi / (static_cast<double>(n) * dt);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < half.size(); ++k) {
    const double amp = std::sqrt(nd * psd.evaluate(static_cast<double>(k) * dw) / dt);
    const bool real_bin = k == 0 || (n % 2 == 0 && k == n / 2);
    if (real_bin) {
      half[k] = amp * rng.normal();
    } else {
      const double g1 = rng.normal();
      const double g2 = rng.normal();
      half[k] = amp * M_SQRT1_2 * std::complex<double>(g1, g2);
    }
  }
  trace.samples = fft::inverse_real(half, n);
  for (auto& v : trace.samples) v /= nd;
  return trace;
}

SampledFunction estimate_autocorrelation(const NoiseTrace& trace, double max_lag) {
  const std::size_t n = trace.samples.size();
  if (n < 2) throw ArgumentError("estimate_autocorrelation: need >= 2 samples");
  if (!(max_lag >= 0.0) || max_lag >= trace.duration() / 4.0)
    throw ArgumentError("estimate_autocorrelation: max_lag must be below duration/4");
  const auto lags = static_cast<std::size_t>(std::floor(max_lag / trace.dt + 1e-9));

  std::vector<double> padded(2 * n, 0.0);
  std::copy(trace.samples.begin(), trace.samples.end(), padded.begin());
  auto spectrum = fft::forward_real(padded);
  for (auto& x : spectrum) x = std::norm(x);
  const auto sums = fft::inverse_real(spectrum, 2 * n);

  SampledFunction out;
  for (std::size_t k = 0; k <= lags; ++k) {
    out.x.push_back(static_cast<double>(k) * trace.dt);
    out.y.push_back(sums[k] / (2.0 * static_cast<double>(n)) / static_cast<double>(n - k));
  }
  return out;
}

SampledFunction estimate_psd(const NoiseTrace& trace, std::size_t segment_length) {
  const std::size_t n = trace.samples.size();
  if (n < 64) throw ArgumentError("estimate_psd: need >= 64 samples");
  std::size_t len = segment_length;
  if (len == 0) {
    len = 64;
    while (len * 2 <= n / 8) len *= 2;
  }
  len = std::min(len, n);
  if (len < 4) throw ArgumentError("estimate_psd: segment too short");

  std::vector<double> window(len);
  double wsum = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(len)));
    wsum += window[i] * window[i];
  }
  const std::size_t hop = std::max<std::size_t>(1, len / 2);
  std::vector<double> acc(len / 2 + 1, 0.0);
  std::vector<double> segment(len);
  std::size_t count = 0;
  for (std::size_t start = 0; start + len <= n; start += hop) {
    for (std::size_t i = 0; i < len; ++i) segment[i] = trace.samples[start + i] * window[i];
    const auto spectrum = fft::forward_real(segment);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::norm(spectrum[k]);
    ++count;
  }
  SampledFunction out;
  const double norm = trace.dt / (wsum * static_cast<double>(count));
  for (std::size_t k = 0; k < acc.size(); ++k) {
    out.x.push_back(2.0 * kPi * static_cast<double>(k) / (static_cast<double>(len) * trace.dt));
    out.y.push_back(acc[k] * norm);
  }
  return out;
}

}  // namespace qsense
