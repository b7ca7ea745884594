#include "qsense/qubit/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qsense/common/errors.hpp"

namespace qsense {
namespace {

constexpr double kStateTolerance = 1e-9;
const Complex kI{0.0, 1.0};

void require_finite(double v, const char* component, double t) {
  if (!std::isfinite(v))
    throw EvolutionError(std::string("non-finite ") + component + " signal sample at t = " +
                         std::to_string(t));
}

}  // namespace

QubitState::QubitState() : rho_(Matrix2c::Zero()) { rho_(0, 0) = 1.0; }

QubitState QubitState::from_matrix(const Matrix2c& rho) {
  if (!rho.allFinite()) throw ArgumentError("QubitState: non-finite matrix entries");
  if (std::abs(rho.trace() - Complex(1.0)) > kStateTolerance)
    throw ArgumentError("QubitState: trace must be 1");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance)
    throw ArgumentError("QubitState: matrix must be Hermitian");
  const double margin = rho(0, 0).real() * rho(1, 1).real() - std::norm(rho(0, 1));
  if (margin < -kStateTolerance || rho(0, 0).real() < -kStateTolerance ||
      rho(1, 1).real() < -kStateTolerance)
    throw ArgumentError("QubitState: matrix must be positive semidefinite");
  Matrix2c h = 0.5 * (rho + rho.adjoint());
  return QubitState(h);
}

QubitState QubitState::from_amplitudes(Complex c0, Complex c1) {
  const double norm = std::norm(c0) + std::norm(c1);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ArgumentError("QubitState: zero amplitude vector");
  Eigen::Vector2cd psi(c0, c1);
  psi /= std::sqrt(norm);
  return QubitState(psi * psi.adjoint());
}

QubitState QubitState::transformed(const Matrix2c& unitary) const {
  Matrix2c rho = unitary * rho_ * unitary.adjoint();
  // Re-Hermitize to keep round-off from accumulating over long sequences.
  return QubitState(0.5 * (rho + rho.adjoint()));
}

QubitState QubitState::dephased() const {
  Matrix2c rho = Matrix2c::Zero();
  rho(0, 0) = rho_(0, 0);
  rho(1, 1) = rho_(1, 1);
  return QubitState(rho);
}

Matrix2c pauli(Axis axis) {
  Matrix2c s;
  switch (axis) {
    case Axis::X: s << 0, 1, 1, 0; break;
    case Axis::Y: s << 0, -kI, kI, 0; break;
    case Axis::Z: s << 1, 0, 0, -1; break;
  }
  return s;
}

Matrix2c rotation(Axis axis, double angle) {
  if (!std::isfinite(angle)) throw ArgumentError("rotation: angle must be finite");
  return std::cos(angle / 2) * Matrix2c::Identity() - kI * std::sin(angle / 2) * pauli(axis);
}

Matrix2c su2_step(double hx, double hy, double hz, double dt) {
  const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
  if (norm == 0.0) return Matrix2c::Identity();
  const double theta = 0.5 * norm * dt;
  const double c = std::cos(theta);
  const double s = std::sin(theta) / norm;
  Matrix2c u;
  u(0, 0) = Complex(c, -s * hz);
  u(1, 1) = Complex(c, s * hz);
  u(0, 1) = Complex(-s * hy, -s * hx);
  u(1, 0) = Complex(s * hy, -s * hx);
  return u;
}

double default_step(const InternalHamiltonian& h0, double max_signal_rate, double duration) {
  const double rate = std::hypot(h0.omega0, max_signal_rate);
  if (rate > 0.0) return (2.0 * std::numbers::pi / rate) / 200.0;
  return duration > 0.0 ? duration / 200.0 : 1.0;
}

Matrix2c propagator(const InternalHamiltonian& h0, const SignalHamiltonian& hv, double t_start,
                    double duration, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ArgumentError("evolve: step must be > 0");
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw ArgumentError("evolve: duration must be >= 0");
  if (!std::isfinite(h0.omega0)) throw ArgumentError("evolve: omega0 must be finite");
  Matrix2c total = Matrix2c::Identity();
  if (duration == 0.0) return total;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / step - 1e-9));
  const double gamma = hv.gamma;
  for (std::size_t i = 0; i < steps; ++i) {
    const double a = static_cast<double>(i) * step;
    const double b = std::min(duration, a + step);
    const double h = b - a;
    if (h <= 0.0) break;
    const double t_mid = t_start + 0.5 * (a + b);
    double v_par = 0.0, vx = 0.0, vy = 0.0;
    if (hv.v_par) {
      v_par = hv.v_par(t_mid);
      require_finite(v_par, "parallel", t_mid);
    }
    if (hv.v_perp_x) {
      vx = hv.v_perp_x(t_mid);
      require_finite(vx, "transverse-x", t_mid);
    }
    if (hv.v_perp_y) {
      vy = hv.v_perp_y(t_mid);
      require_finite(vy, "transverse-y", t_mid);
    }
    // |1><1| − |0><0| = −σz.
    total = su2_step(gamma * vx, gamma * vy, -(h0.omega0 + gamma * v_par), h) * total;
  }
  return total;
}

QubitState evolve(const QubitState& state, const InternalHamiltonian& h0,
                  const SignalHamiltonian& hv, double duration, double step) {
  return evolve_from(state, h0, hv, 0.0, duration, step);
}

QubitState evolve_from(const QubitState& state, const InternalHamiltonian& h0,
                       const SignalHamiltonian& hv, double t_start, double duration, double step) {
  if (duration == 0.0) {
    if (!(step > 0.0)) throw ArgumentError("evolve: step must be > 0");
    return state;
  }
  return state.transformed(propagator(h0, hv, t_start, duration, step));
}

QubitState apply_pulse(const QubitState& state, const ControlPulse& pulse) {
  return state.transformed(rotation(pulse.axis, pulse.angle));
}

// --------------------------------------------------------------------------

void ReadoutModel::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ModelError("readout: beta must lie in (0, 1]");
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (!std::is_same_v<T, IdealReadout>) {
          if (!std::isfinite(m.xbar0) || !std::isfinite(m.xbar1) || m.xbar0 == m.xbar1)
            throw ModelError("readout: degenerate peaks (xbar0 == xbar1)");
          if (!(m.sigma_x > 0.0)) throw ModelError("readout: sigma_x must be > 0");
        }
      },
      variant);
}

ReadoutParameters readout_parameters(const ReadoutModel& model) {
  model.validate();
  return std::visit(
      [](const auto& m) -> ReadoutParameters {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IdealReadout>) {
          return {0.0, 0.0, 0.0, 1.0};
        } else if constexpr (std::is_same_v<T, SingleShotReadout>) {
          ReadoutParameters r;
          r.kappa0 = 0.5 * std::erfc(std::abs(m.xbar0 - m.x_threshold) / (M_SQRT2 * m.sigma_x));
          r.kappa1 = 0.5 * std::erfc(std::abs(m.xbar1 - m.x_threshold) / (M_SQRT2 * m.sigma_x));
          const double kappa = 0.5 * (r.kappa0 + r.kappa1);
          r.R = std::sqrt(4.0 * kappa);
          r.C = 1.0 / std::sqrt(1.0 + 4.0 * kappa);
          return r;
        } else {
          ReadoutParameters r;
          const double contrast = std::abs(m.xbar1 - m.xbar0);
          r.kappa0 = r.kappa1 = 0.5 * std::erfc(contrast / (2.0 * M_SQRT2 * m.sigma_x));
          r.R = 2.0 * m.sigma_x / contrast;
          r.C = 1.0 / std::sqrt(1.0 + r.R * r.R);
          return r;
        }
      },
      model.variant);
}

double optical_readout_ratio(double xbar1, double epsilon) {
  if (!(xbar1 > 0.0) || !(epsilon > 0.0 && epsilon < 1.0))
    throw ArgumentError("optical readout: need xbar1 > 0 and 0 < epsilon < 1");
  return 2.0 * std::sqrt(1.0 - epsilon / 2.0) / (epsilon * std::sqrt(xbar1));
}

double optical_readout_ratio_approx(double xbar1, double epsilon) {
  if (!(xbar1 > 0.0) || !(epsilon > 0.0 && epsilon < 1.0))
    throw ArgumentError("optical readout: need xbar1 > 0 and 0 < epsilon < 1");
  return 2.0 / (epsilon * std::sqrt(xbar1));
}

double readout_sample(double p_excited, const ReadoutModel& model, RandomStream& rng) {
  const double p = std::clamp(p_excited * model.beta, 0.0, 1.0);
  const bool excited = rng.bernoulli(p);
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IdealReadout>) {
          return excited ? 1.0 : 0.0;
        } else {
          return rng.normal(excited ? m.xbar1 : m.xbar0, m.sigma_x);
        }
      },
      model.variant);
}

double readout_sample(const QubitState& state, const ReadoutModel& model, RandomStream& rng) {
  return readout_sample(state.rho11(), model, rng);
}

namespace {

double clamp_for_variance(double p, std::size_t n) {
  const double floor = 0.5 / static_cast<double>(n);
  return std::clamp(p, floor, 1.0 - floor);
}

}  // namespace

double predicted_sigma_p(double p, std::size_t n, const ReadoutModel& model) {
  if (n == 0) throw ArgumentError("predicted_sigma_p: n must be >= 1");
  const double nd = static_cast<double>(n);
  const double pv = clamp_for_variance(p, n);
  double var = pv * (1.0 - pv) / nd;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SingleShotReadout>) {
          const auto r = readout_parameters(model);
          var += (r.kappa0 * (1 - r.kappa0) * pv + r.kappa1 * (1 - r.kappa1) * (1 - pv)) / nd;
        } else if constexpr (std::is_same_v<T, AveragedReadout>) {
          const double contrast = m.xbar1 - m.xbar0;
          var += m.sigma_x * m.sigma_x / (nd * contrast * contrast);
        }
      },
      model.variant);
  return std::sqrt(var);
}

ProbabilityEstimate estimate_probability(std::span<const double> readings,
                                         const ReadoutModel& model) {
  if (readings.empty()) throw ArgumentError("estimate_probability: no readings");
  model.validate();
  const std::size_t n = readings.size();
  double p_hat = std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AveragedReadout>) {
          double sum = 0.0;
          for (double x : readings) sum += x;
          return (sum / static_cast<double>(n) - m.xbar0) / (m.xbar1 - m.xbar0);
        } else {
          double threshold = 0.5;
          bool upper_is_one = true;
          if constexpr (std::is_same_v<T, SingleShotReadout>) {
            threshold = m.x_threshold;
            upper_is_one = m.xbar1 > m.xbar0;
          }
          std::size_t ones = 0;
          for (double x : readings) ones += ((x > threshold) == upper_is_one) ? 1 : 0;
          return static_cast<double>(ones) / static_cast<double>(n);
        }
      },
      model.variant);
  p_hat = std::clamp(p_hat, 0.0, 1.0);
  return {p_hat, predicted_sigma_p(p_hat, n, model), n};
}

}  // namespace qsense
