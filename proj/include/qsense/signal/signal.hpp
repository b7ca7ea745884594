#pragma once

// Deterministic tones and stationary Gaussian noise with a prescribed
// two-sided power spectral density.
//
// PSD convention: S(ω) = ∫ G(τ) e^{−iωτ} dτ with G(τ) = <V(t)V(t+τ)>, so that
// Var V = (1/2π) ∫ S(ω) dω over (−∞, ∞).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qsense/common/random.hpp"

namespace qsense {

/// V(t) = v_pk cos(2π f_ac t + alpha).
struct ToneSpec {
  double v_pk = 0.0;
  double f_ac = 0.0;  ///< Hz
  double alpha = 0.0;
};

double sample_waveform(std::span<const ToneSpec> tones, double t);

struct WhiteNoise {
  double s0 = 0.0;
};

/// S0·½[L(ω−ωc) + L(ω+ωc)], L(x) = w²/(x² + w²). Correlation time 1/w.
struct LorentzianNoise {
  double s0 = 0.0;
  double omega_c = 0.0;
  double half_width = 1.0;
};

/// amplitude·(omega_min/|ω|)^exponent for omega_min ≤ |ω| ≤ omega_max, else 0.
struct PowerLawNoise {
  double amplitude = 0.0;
  double exponent = 1.0;
  double omega_min = 1.0;
  double omega_max = 10.0;
};

/// Sum of parametric components. An empty sum is the zero spectrum.
class SpectralDensity {
 public:
  using Component = std::variant<WhiteNoise, LorentzianNoise, PowerLawNoise>;

  SpectralDensity() = default;
  explicit SpectralDensity(Component c);

  static SpectralDensity zero() { return {}; }
  static SpectralDensity white(double s0) { return SpectralDensity(WhiteNoise{s0}); }
  static SpectralDensity lorentzian(double s0, double omega_c, double half_width) {
    return SpectralDensity(LorentzianNoise{s0, omega_c, half_width});
  }
  static SpectralDensity power_law(double amplitude, double exponent, double omega_min,
                                   double omega_max) {
    return SpectralDensity(PowerLawNoise{amplitude, exponent, omega_min, omega_max});
  }

  SpectralDensity operator+(const SpectralDensity& other) const;
  SpectralDensity scaled(double factor) const;

  double evaluate(double omega) const;
  double operator()(double omega) const { return evaluate(omega); }

  /// G(τ) when every component has a closed form (white noise has none).
  std::optional<double> autocorrelation(double tau) const;

  /// Frequency above which no component has structure: Lorentzian ωc + 10w,
  /// power law omega_max, white 0.
  double support() const;

  /// Points where S is not smooth (power-law cutoffs).
  std::vector<double> breakpoints() const;

  /// Fraction of total power above |ω| > omega (white noise excluded).
  double power_fraction_above(double omega) const;

  bool is_zero() const;
  bool has_white() const;
  const std::vector<Component>& components() const { return components_; }

  /// Throws ModelError on negative levels, non-positive widths or cutoffs.
  void validate() const;

 private:
  std::vector<Component> components_;
};

struct NoiseTrace {
  double dt = 1.0;
  std::vector<double> samples;
  std::uint64_t seed = 0;

  double duration() const { return dt * static_cast<double>(samples.size()); }
  /// Sample held over [i·dt, (i+1)·dt); the trace repeats with period duration().
  double value_at(double t) const;

  /// Two columns: time_s, value.
  void write_csv(const std::filesystem::path& path) const;
  static NoiseTrace read_csv(const std::filesystem::path& path);
};

/// Frequency-domain synthesis: independent complex Gaussian coefficients with
/// Hermitian symmetry, scaled so the trace has two-sided PSD `psd` up to π/dt.
/// Throws AliasingError when the spectrum reaches past Nyquist.
NoiseTrace synthesize_noise(const SpectralDensity& psd, double duration, double dt,
                            RandomStream& rng);

/// Checks the aliasing rules without drawing anything.
void check_band_limit(const SpectralDensity& psd, double dt);

struct SampledFunction {
  std::vector<double> x;
  std::vector<double> y;
};

/// Unbiased lag-product estimate (1/(N−k)) Σ x_i x_{i+k}; no mean subtraction.
/// Lags 0, dt, … up to max_lag, which must be below duration/4.
SampledFunction estimate_autocorrelation(const NoiseTrace& trace, double max_lag);

/// Welch estimate on ω ≥ 0 (Hann window, 50% overlap), two-sided normalization.
/// segment_length 0 picks N/8 rounded down to a power of two (at least 64).
SampledFunction estimate_psd(const NoiseTrace& trace, std::size_t segment_length = 0);

}  // namespace qsense
