#pragma once

// Two-level sensor: density matrix, Hamiltonians, ideal pulses and unitary
// time evolution. Units: angular frequencies in rad/s, times in s, hbar = 1.
//
// Basis ordering is (|0>, |1>). The internal Hamiltonian is
//   H0 = ½ω0 (|1><1| − |0><0|)
// and the signal couples as
//   H_V = ½γ V∥ (|1><1| − |0><0|) + ½γ (V⊥x σx + V⊥y σy),
// so a parallel signal shifts the transition frequency by γV∥ and a constant
// transverse drive γV⊥ = ω1 gives Rabi oscillation p = sin²(ω1 t/2).

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qsense/common/random.hpp"

namespace qsense {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

class QubitState {
 public:
  /// |0><0|.
  QubitState();

  /// Validates trace, Hermiticity and positivity (tolerance 1e-9).
  static QubitState from_matrix(const Matrix2c& rho);
  static QubitState from_amplitudes(Complex c0, Complex c1);
  static QubitState ground() { return QubitState(); }
  static QubitState excited() { return from_amplitudes(0.0, 1.0); }
  /// |x+> = (|0> + |1>)/√2.
  static QubitState plus_x() { return from_amplitudes(M_SQRT1_2, M_SQRT1_2); }

  double rho00() const { return rho_(0, 0).real(); }
  double rho11() const { return rho_(1, 1).real(); }
  /// <0|ρ|1>.
  Complex rho01() const { return rho_(0, 1); }
  /// <1|ρ|0> = conj(rho01); carries the e^{-iω0 t} free-precession factor.
  Complex rho10() const { return rho_(1, 0); }

  const Matrix2c& matrix() const { return rho_; }
  double trace() const { return rho_.trace().real(); }
  double purity() const { return (rho_ * rho_).trace().real(); }
  /// rho00·rho11 − |rho01|²; non-negative for a physical state.
  double positivity_margin() const { return rho00() * rho11() - std::norm(rho01()); }

  /// Conjugation by a unitary, U ρ U†.
  QubitState transformed(const Matrix2c& unitary) const;
  /// Drops the coherences (complete dephasing in the energy basis).
  QubitState dephased() const;

 private:
  explicit QubitState(const Matrix2c& rho) : rho_(rho) {}
  Matrix2c rho_;
};

struct InternalHamiltonian {
  double omega0 = 0.0;
};

/// Time-dependent signal. Empty callables mean the component is identically 0.
struct SignalHamiltonian {
  using Waveform = std::function<double(double)>;
  double gamma = 1.0;
  Waveform v_par;
  Waveform v_perp_x;
  Waveform v_perp_y;

  bool has_transverse() const { return static_cast<bool>(v_perp_x) || static_cast<bool>(v_perp_y); }
};

enum class Axis { X, Y, Z };

/// Instantaneous rotation exp(−i·angle·σ_axis/2) applied at `time`.
struct ControlPulse {
  Axis axis = Axis::X;
  double angle = 0.0;
  double time = 0.0;
};

/// Pauli matrices in the (|0>, |1>) basis.
Matrix2c pauli(Axis axis);

/// exp(−i·angle·σ_axis/2).
Matrix2c rotation(Axis axis, double angle);

/// exp(−i·dt·½(hx σx + hy σy + hz σz)), evaluated in closed form.
Matrix2c su2_step(double hx, double hy, double hz, double dt);

/// Step used when none is given: (1/200)·min(2π/ω0, 2π/ω1_eff).
/// `max_signal_rate` is γ·max|V| (pass 0 when unknown).
double default_step(const InternalHamiltonian& h0, double max_signal_rate, double duration);

/// Propagator over [t_start, t_start + duration] with piecewise-constant H
/// evaluated at each step midpoint. Throws EvolutionError on non-finite samples.
Matrix2c propagator(const InternalHamiltonian& h0, const SignalHamiltonian& hv, double t_start,
                    double duration, double step);

QubitState evolve(const QubitState& state, const InternalHamiltonian& h0,
                  const SignalHamiltonian& hv, double duration, double step);

/// Same as evolve, for a window starting at absolute time `t_start`.
QubitState evolve_from(const QubitState& state, const InternalHamiltonian& h0,
                       const SignalHamiltonian& hv, double t_start, double duration, double step);

QubitState apply_pulse(const QubitState& state, const ControlPulse& pulse);

// --------------------------------------------------------------------------
// Readout

struct IdealReadout {};

/// Two Gaussian peaks at xbar0/xbar1 of width sigma_x, assigned by threshold.
struct SingleShotReadout {
  double xbar0 = 0.0;
  double xbar1 = 1.0;
  double sigma_x = 0.1;
  double x_threshold = 0.5;
};

/// Unresolvable peaks: p is estimated from the mean reading.
struct AveragedReadout {
  double xbar0 = 0.0;
  double xbar1 = 1.0;
  double sigma_x = 1.0;
};

struct ReadoutModel {
  std::variant<IdealReadout, SingleShotReadout, AveragedReadout> variant = IdealReadout{};
  /// Initialization fidelity, multiplies the excited-state probability at readout.
  double beta = 1.0;

  static ReadoutModel ideal(double beta = 1.0) { return {IdealReadout{}, beta}; }
  static ReadoutModel single_shot(double xbar0, double xbar1, double sigma_x, double x_threshold,
                                  double beta = 1.0) {
    return {SingleShotReadout{xbar0, xbar1, sigma_x, x_threshold}, beta};
  }
  static ReadoutModel averaged(double xbar0, double xbar1, double sigma_x, double beta = 1.0) {
    return {AveragedReadout{xbar0, xbar1, sigma_x}, beta};
  }

  /// Throws ModelError for degenerate peaks, sigma_x <= 0 or beta outside (0, 1].
  void validate() const;
};

struct ReadoutParameters {
  double kappa0 = 0.0;  ///< fraction of |0> readings assigned to "1"
  double kappa1 = 0.0;  ///< fraction of |1> readings assigned to "0"
  double R = 0.0;       ///< classical-to-projection noise ratio (per shot)
  double C = 1.0;       ///< overall readout efficiency
};

ReadoutParameters readout_parameters(const ReadoutModel& model);

/// Shot-noise-limited optical readout with x̄1 photons per shot and relative
/// contrast ε = |1 − x̄0/x̄1|: exact R = 2√(1−ε/2)/(ε√x̄1).
double optical_readout_ratio(double xbar1, double epsilon);
/// Small-contrast approximation R ≈ 2/(ε√x̄1).
double optical_readout_ratio_approx(double xbar1, double epsilon);

/// Draws one physical reading for the state.
double readout_sample(const QubitState& state, const ReadoutModel& model, RandomStream& rng);
/// Same, given the excited-state probability directly.
double readout_sample(double p_excited, const ReadoutModel& model, RandomStream& rng);

struct ProbabilityEstimate {
  double p_hat = 0.0;
  double sigma_p = 0.0;
  std::size_t n = 0;
};

/// Ideal/SingleShot: threshold counting p = N1/N. Averaged: p = (x̄ − x̄0)/(x̄1 − x̄0).
/// sigma_p combines projection noise with the model's classical readout noise.
ProbabilityEstimate estimate_probability(std::span<const double> readings, const ReadoutModel& model);

/// Total readout standard error predicted for N readings at probability p.
double predicted_sigma_p(double p, std::size_t n, const ReadoutModel& model);

}  // namespace qsense
