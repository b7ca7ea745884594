#pragma once

// Modulation functions of π-pulse sequences, their filter functions, AC
// weighting functions and the decoherence integral.
//
// The filter function is normalized as Y(ω) = ½ ∫₀^t y(t') e^{iωt'} dt', so that
// a Ramsey sequence has |Y|² = sin²(ωt/2)/ω² and
//   χ(t) = (2/π) ∫₀^∞ γ² S(ω) |Y(ω)|² dω
// gives χ = ½γ²S0 t for white noise.

#include <complex>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsense/signal/signal.hpp"

namespace qsense {

/// y(t') ∈ {+1, −1} on [0, t], starting at +1 and flipping at each switch time.
class ModulationFunction {
 public:
  ModulationFunction(std::vector<double> switches, double total_time);

  static ModulationFunction ramsey(double t);
  /// One π pulse at t/2.
  static ModulationFunction echo(double t);
  /// Pulses at (2j − 1)τ/2, j = 1..n; t = nτ.
  static ModulationFunction cp(int n, double tau);
  /// Pulses at jτ, j = 1..n; the last one coincides with t = nτ.
  static ModulationFunction pdd(int n, double tau);

  double total_time() const { return total_time_; }
  const std::vector<double>& switches() const { return switches_; }
  /// Number of π pulses (for PDD includes the one at t).
  int pulse_count() const { return pulses_; }

  double value(double t) const;
  /// ∫₀^t y dt'.
  double net_area() const;
  bool balanced() const;

  /// ∫_a^b y(t') dt' for 0 ≤ a ≤ b ≤ t.
  double integral(double a, double b) const;
  /// ∫ y(t') cos(ω t' + alpha) dt' over [0, t], exact.
  double integral_cos(double omega, double alpha) const;
  /// Weights w_i = ∫ y over [i·dt, (i+1)·dt] ∩ [0, t] for i = 0..count−1.
  std::vector<double> bin_weights(double dt, std::size_t count) const;

  /// Y(ω) = ½ ∫₀^t y e^{iωt'} dt', summed segment by segment.
  std::complex<double> filter(double omega) const;

  /// Segments [a, b) with constant sign.
  struct Segment {
    double a, b;
    int sign;
  };
  std::vector<Segment> segments() const;

 private:
  std::vector<double> switches_;
  double total_time_;
  int pulses_ = 0;
};

struct FilterFunctionCurve {
  std::vector<double> omega;
  std::vector<double> value;  ///< |Y(ω)|²

  /// Columns omega_rad_s, value.
  void write_csv(const std::filesystem::path& path) const;
};

FilterFunctionCurve filter_curve(const ModulationFunction& y, std::span<const double> omegas);

enum class SequenceKind { CP, PDD };

/// Phase per unit γ·V_pk·t for a tone at f_ac (Hz) and phase alpha.
/// n must be even and >= 2. Poles of sec/tan are evaluated through the exact
/// ratio sin(nx)/cos(x) around each pole, so resonant queries are finite.
double weighting_function(SequenceKind kind, double f_ac, double alpha, int n, double tau);

/// α-average of W²: ½[sinc(nx)(1 − sec x)]² (CP) or ½[sinc(nx) tan x]² (PDD).
double averaged_weighting(SequenceKind kind, double f_ac, int n, double tau);

/// Nearest odd harmonic k of 2·f_ac·τ (at least 1).
int harmonic_order(double f_ac, double tau);

struct DecoherenceResult {
  double chi = 0.0;
  double tail = 0.0;           ///< analytic estimate beyond the quadrature band
  double abs_error = 0.0;      ///< quadrature error estimate
  double upper_limit = 0.0;
  bool tail_warning = false;   ///< tail above 1e-3 of the total
};

/// χ = (2/π) ∫₀^∞ γ² S(ω)|Y(ω)|² dω by adaptive Gauss–Kronrod over chunks of
/// width 4π/t, plus an analytic tail using the mean |Y|² ≈ (1 + 2n)/(2ω²).
/// Throws EstimationError when the quadrature does not reach 1e-6 relative.
DecoherenceResult decoherence_from_psd(const SpectralDensity& psd, const ModulationFunction& y,
                                       double gamma);

/// Same integral for an arbitrary spectrum callable. `support` is the
/// frequency beyond which the spectrum has no structure.
DecoherenceResult decoherence_from_function(const std::function<double(double)>& psd,
                                            const ModulationFunction& y, double gamma,
                                            double support);

/// Weights c_k for odd k ≤ k_max: 1/k², with the last one carrying
/// Σ_{k ≥ k_max, odd} 1/k² so that white noise is exact. k_max = 1 gives the
/// bare first harmonic, c_1 = 1.
std::vector<double> harmonic_weights(int k_max);

/// χ ≈ (4t/π²) Σ_k γ² S(kπ/τ) c_k for an n-pulse CP sequence (t = nτ).
double decoherence_delta(const SpectralDensity& psd, int n, double tau, double gamma,
                         int k_max = 5);

struct ChiMeasurement {
  double tau = 0.0;
  int n = 0;
  double chi = 0.0;
};

struct ReconstructedSpectrum {
  std::vector<double> omega;  ///< nodes π/τ, ascending
  std::vector<double> value;  ///< S at the nodes
  double condition = 1.0;
  bool regularized = false;   ///< ridge term mattered (ill-conditioned system)
  std::string warning;

  /// Linear interpolation between nodes, constant outside.
  double at(double omega) const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Inverts the delta model for S at ω = π/τ. k_max = 1 maps each point
/// directly, S = χπ²/(4tγ²). Otherwise harmonic frequencies between nodes are
/// linearly interpolated and the system is solved with a relative ridge term.
ReconstructedSpectrum reconstruct_psd(std::span<const ChiMeasurement> measurements, double gamma,
                                      int k_max = 5, double ridge = 1e-8);

enum class RelaxationKind { T1, T2Star, SpinLockResonant, SpinLockDetuned };

/// Rates in s⁻¹:
///   T1: ½γ²S⊥(ω0)
///   T2*: ¼γ²S⊥(ω0) + ½γ²S∥(0)
///   spin lock: ¼γ²S⊥(ω0) + ½γ²S∥(ω1)
///   detuned: ¼[1 + Δω²/ω_eff²]γ²S⊥(ω0) + ½(ω1²/ω_eff²)γ²S∥(ω_eff)
double relaxation_rate(RelaxationKind kind, const SpectralDensity& psd_par,
                       const SpectralDensity& psd_perp, double gamma, double omega0,
                       double omega1 = 0.0, double delta_omega = 0.0);

/// Γ = 2γ² S(ω01) |<1|Ĥ|0>|².
double golden_rule_rate(double matrix_element_sq, const SpectralDensity& psd, double gamma,
                        double omega01);

}  // namespace qsense
