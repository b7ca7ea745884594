#pragma once

// Closed-form responses and Monte-Carlo simulation of sensing sequences.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qsense/filter/filter.hpp"
#include "qsense/qubit/qubit.hpp"
#include "qsense/signal/signal.hpp"

namespace qsense {

/// p = sin²(ω0 t/2).
double ramsey_probability(double omega0, double t);

/// p = ω1²/(ω1² + ω0²) · sin²(√(ω1² + ω0²) t). With the simulation convention
/// H = ½ω0σz + ½ω1σx the excited population is rabi_probability(ω0/2, ω1/2, t).
double rabi_probability(double omega0, double omega1, double t);

enum class DetectionMode { Slope, Variance };

/// Slope: δp = ½γ·v·t around p0 = ½. Variance: p = ½[1 − exp(−γ²v²t²/2)], v = V_rms.
double slope_variance_response(DetectionMode mode, double gamma, double v, double t);

/// γ ∫₀^t V(t') y(t') dt' for a sum of tones, evaluated exactly.
double phase_integral(std::span<const ToneSpec> tones, const ModulationFunction& y, double gamma,
                      double t_start = 0.0);

/// Echo phase ∫₀^{t/2} γV − ∫_{t/2}^t γV.
double spin_echo_phase(const ToneSpec& tone, double t, double gamma = 1.0);

namespace seq {
struct Ramsey {
  double t = 0.0;
  bool slope_bias = false;  ///< readout π/2 about x, p0 = ½
};
struct Rabi {
  double t = 0.0;
  double omega1 = 0.0;
};
struct SpinEcho {
  double t = 0.0;
};
struct CP {
  int n = 2;
  double tau = 1.0;
};
struct PDD {
  int n = 2;
  double tau = 1.0;
};
/// Two CP(n, τ) blocks starting t1 apart; coherence is stored as population
/// in between and fully dephased.
struct Correlation {
  int n = 2;
  double tau = 1.0;
  double t1 = 0.0;
};
struct SpinLock {
  double omega1 = 0.0;
  double delta_omega = 0.0;
  double t = 0.0;
};
struct T1 {
  double t = 0.0;
};
}  // namespace seq

using SequenceSpec = std::variant<seq::Ramsey, seq::Rabi, seq::SpinEcho, seq::CP, seq::PDD,
                                  seq::Correlation, seq::SpinLock, seq::T1>;

/// Total time from initialization to readout.
double sequence_duration(const SequenceSpec& spec);

/// Modulation function of the phase-accumulating block, if the sequence has one.
std::optional<ModulationFunction> sequence_modulation(const SequenceSpec& spec);

void validate_sequence(const SequenceSpec& spec);

/// φ = Σ_m γ V_pk,m t W(f_m, α_m) for CP/PDD. n = 0 is the Ramsey integral over tau.
double multipulse_phase(std::span<const ToneSpec> tones, const SequenceSpec& spec, double gamma);

enum class AmplitudeModel { FixedPhase, RandomPhase, RandomAmplitude };

/// Response of a CP/PDD sequence to one tone at f_ac.
///   FixedPhase (v = V_pk):      ½[1 − cos(W γ V_pk t)]
///   RandomPhase (v = V_rms):    ½[1 − J0(2 W̄ γ V_rms t)]
///   RandomAmplitude (v = V_rms): ½[1 − e^{−z} I0(z)], z = W̄²γ²V_rms²t²/(2k²)
/// t defaults to the sequence duration.
double multipulse_response(const SequenceSpec& spec, AmplitudeModel model, double gamma, double v,
                           double f_ac, double alpha = 0.0, std::optional<double> t = {});

/// Sequency-ordered Walsh function w_n(x) on [0, 1).
double walsh_function(std::size_t n, double x);

/// V_n = (1/t) ∫₀^t V(t') w_n(t'/t) dt' for n = 0..N−1 (N a power of two).
std::vector<double> walsh_coefficients(const std::function<double(double)>& signal, std::size_t n,
                                       double t);

/// Partial sum Σ V_n w_n(t'/t), piecewise constant on N slots.
class WalshSeries {
 public:
  WalshSeries(std::vector<double> coefficients, double t);
  double operator()(double t_prime) const;
  const std::vector<double>& slot_values() const { return slots_; }

 private:
  std::vector<double> coefficients_;
  std::vector<double> slots_;
  double t_;
};

WalshSeries walsh_reconstruct(std::vector<double> coefficients, double t);

struct CorrelationPhase {
  bool random = false;
  double alpha = 0.0;
};

/// Fixed: ½{1 − sin(Φ cos α) sin(Φ cos(α + 2πf t1))}.
/// Random (small Φ): ½{1 − (Φ²/2) cos(2πf t1)}.
double correlation_response(double phi, double f_ac, double t1, CorrelationPhase phase);

/// Samples `record` every t_s over `duration` and returns the frequency of the
/// strongest non-DC Fourier component (the alias of the signal frequency).
/// A constant record yields 0; a flat spectrum throws EstimationError.
double continuous_sampling_estimate(const std::function<double(double)>& record, double t_s,
                                    double duration);

// --------------------------------------------------------------------------
// Monte-Carlo simulation

struct ProtocolSetup {
  double omega0 = 0.0;
  double gamma = 1.0;
  /// Parallel tones. Under RandomPhase each trial draws α uniformly; under
  /// RandomAmplitude v_pk is the rms of a Gaussian amplitude and α is uniform.
  std::vector<ToneSpec> tones;
  AmplitudeModel tone_model = AmplitudeModel::FixedPhase;
  /// Extra deterministic parallel signal.
  SignalHamiltonian::Waveform v_par;
  std::optional<SpectralDensity> noise_par;
  std::optional<SpectralDensity> noise_perp;  ///< couples through σx
  double noise_dt = 0.0;
  ReadoutModel readout = ReadoutModel::ideal();
  std::size_t trials = 1000;
  double step = 0.0;  ///< evolution step, 0 = automatic
  /// Skip the phase-integral shortcut even when it applies.
  bool force_full_evolution = false;
};

struct ProtocolResult {
  std::vector<double> sweep;
  std::vector<double> p_hat;
  std::vector<double> sigma_p;
  std::vector<std::size_t> n_trials;
  std::uint64_t seed = 0;

  /// Columns sweep_value, p_hat, sigma_p, n_trials.
  void write_csv(const std::filesystem::path& path) const;
};

/// Runs `trials` independent cycles per point (fresh noise per cycle) and
/// estimates p with the readout model. Trial i of point j draws from
/// derive_seed(seed, j, i), so results do not depend on the thread count.
ProtocolResult simulate_protocol(std::span<const SequenceSpec> points,
                                 std::span<const double> sweep_values, const ProtocolSetup& setup,
                                 std::uint64_t seed);

/// Excited-state probability of one cycle (no readout noise) for a fixed
/// realization drawn from `rng`. Exposed for tests.
double simulate_cycle(const SequenceSpec& spec, const ProtocolSetup& setup, RandomStream& rng);

}  // namespace qsense
