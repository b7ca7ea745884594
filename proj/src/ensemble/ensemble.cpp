#include "qsense/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "qsense/common/csv.hpp"
#include "qsense/common/errors.hpp"

namespace qsense {
namespace {

constexpr double kPi = std::numbers::pi;

void check_qubits(int m) {
  if (m < 1) throw ArgumentError("ensemble: M must be >= 1");
}

Eigen::Vector3d unit(const Eigen::Vector3d& n, const char* what) {
  const double len = n.norm();
  if (!(len > 0.0) || std::abs(len - 1.0) > 1e-9)
    throw ArgumentError(std::string(what) + " must be a unit vector");
  return n / len;
}

// Transverse basis (e1, e2) for mean-spin direction n.
std::pair<Eigen::Vector3d, Eigen::Vector3d> transverse_basis(const Eigen::Vector3d& n) {
  Eigen::Vector3d e1 = Eigen::Vector3d::UnitZ().cross(n);
  if (e1.norm() < 1e-12) e1 = Eigen::Vector3d::UnitX();
  e1.normalize();
  Eigen::Vector3d e2 = n.cross(e1);
  return {e1, e2.normalized()};
}

}  // namespace

double ghz_probability(int m_qubits, double omega0, double t) {
  check_qubits(m_qubits);
  const double s = std::sin(0.5 * m_qubits * omega0 * t);
  return s * s;
}

double qcrb_scaling(int m_qubits, std::size_t n, double t, double chi, double gamma,
                    EnsembleKind kind) {
  check_qubits(m_qubits);
  if (n == 0 || !(t > 0.0) || !(gamma > 0.0) || !(chi >= 0.0))
    throw ArgumentError("qcrb_scaling: need N >= 1, t > 0, gamma > 0, chi >= 0");
  const double m = m_qubits;
  const double nn = static_cast<double>(n);
  if (kind == EnsembleKind::Uncorrelated) return std::exp(chi) / (gamma * t * std::sqrt(m * nn));
  return std::exp(chi) / (gamma * m * t * std::sqrt(nn));
}

EnsembleOptimum ensemble_optimum(int m_qubits, double t2, double total_time, double gamma,
                                 EnsembleKind kind) {
  check_qubits(m_qubits);
  if (!(t2 > 0.0) || !(total_time > 0.0) || !(gamma > 0.0))
    throw ArgumentError("ensemble_optimum: T2, T and gamma must be > 0");
  const double m = m_qubits;
  const double rate = kind == EnsembleKind::Ghz ? m / t2 : 1.0 / t2;
  EnsembleOptimum o;
  o.t_opt = 0.5 / rate;
  const double reps = total_time / o.t_opt;
  const double chi = rate * o.t_opt;
  o.delta_v = kind == EnsembleKind::Ghz
                  ? std::exp(chi) / (gamma * m * o.t_opt * std::sqrt(reps))
                  : std::exp(chi) / (gamma * o.t_opt * std::sqrt(m * reps));
  return o;
}

CollectiveSpinState::CollectiveSpinState(int m_qubits, Eigen::VectorXcd amplitudes)
    : m_(m_qubits), amp_(std::move(amplitudes)) {
  check_qubits(m_qubits);
  if (amp_.size() != m_qubits + 1)
    throw ArgumentError("collective state: need M + 1 amplitudes");
  if (std::abs(amp_.norm() - 1.0) > 1e-12)
    throw ArgumentError("collective state: amplitudes must be normalized");
}

SpinOperators spin_operators(int m_qubits) {
  check_qubits(m_qubits);
  const int d = m_qubits + 1;
  const double j = 0.5 * m_qubits;
  Eigen::MatrixXcd jp = Eigen::MatrixXcd::Zero(d, d);
  SpinOperators ops;
  ops.z = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = i - j;
    ops.z(i, i) = m;
    if (i + 1 < d) jp(i + 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  const Eigen::MatrixXcd jm = jp.adjoint();
  ops.x = 0.5 * (jp + jm);
  ops.y = std::complex<double>(0.0, -0.5) * (jp - jm);
  return ops;
}

Eigen::Vector3d CollectiveSpinState::mean_spin() const {
  return {expectation(Eigen::Vector3d::UnitX()), expectation(Eigen::Vector3d::UnitY()),
          expectation(Eigen::Vector3d::UnitZ())};
}

double CollectiveSpinState::expectation(const Eigen::Vector3d& n) const {
  const auto op = spin_operators(m_).along(n);
  return amp_.dot(op * amp_).real();
}

double CollectiveSpinState::variance(const Eigen::Vector3d& n) const {
  const auto op = spin_operators(m_).along(n);
  const Eigen::VectorXcd v = op * amp_;
  const double mean = amp_.dot(v).real();
  return std::max(0.0, v.squaredNorm() - mean * mean);
}

double CollectiveSpinState::j_squared() const {
  const auto ops = spin_operators(m_);
  return (ops.x * amp_).squaredNorm() + (ops.y * amp_).squaredNorm() +
         (ops.z * amp_).squaredNorm();
}

CollectiveSpinState css(int m_qubits, const Eigen::Vector3d& direction) {
  check_qubits(m_qubits);
  const Eigen::Vector3d n = unit(direction, "css direction");
  const double theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  const double phi = std::atan2(n.y(), n.x());
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  Eigen::VectorXcd amp(m_qubits + 1);
  for (int i = 0; i <= m_qubits; ++i) {
    const int up = i;                // J + m
    const int down = m_qubits - i;   // J − m
    const double log_binom =
        std::lgamma(m_qubits + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
    const double mag = std::exp(0.5 * log_binom) * std::pow(c, up) * std::pow(s, down);
    amp(i) = std::polar(mag, down * phi);
  }
  amp.normalize();
  return CollectiveSpinState(m_qubits, amp);
}

CollectiveSpinState one_axis_twisting(const CollectiveSpinState& state, double chi_t) {
  if (!std::isfinite(chi_t)) throw ArgumentError("one_axis_twisting: chi_t must be finite");
  Eigen::VectorXcd amp = state.amplitudes();
  const double j = state.j();
  for (Eigen::Index i = 0; i < amp.size(); ++i) {
    const double m = static_cast<double>(i) - j;
    amp(i) *= std::polar(1.0, -chi_t * m * m);
  }
  return CollectiveSpinState(state.qubits(), amp);
}

CollectiveSpinState rotated(const CollectiveSpinState& state, const Eigen::Vector3d& axis,
                            double angle) {
  const Eigen::Vector3d n = unit(axis, "rotation axis");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(spin_operators(state.qubits()).along(n));
  Eigen::VectorXcd phases(eig.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::polar(1.0, -angle * eig.eigenvalues()(i));
  const Eigen::MatrixXcd& v = eig.eigenvectors();
  Eigen::VectorXcd amp = v * phases.asDiagonal() * (v.adjoint() * state.amplitudes());
  amp.normalize();
  return CollectiveSpinState(state.qubits(), amp);
}

SqueezingParameters metrology_squeezing(const CollectiveSpinState& state) {
  const Eigen::Vector3d mean = state.mean_spin();
  const double len = mean.norm();
  if (len < 1e-12 * std::max(1.0, state.j()))
    throw EstimationError("squeezing: mean spin vanishes, xi_R undefined");
  const Eigen::Vector3d n = mean / len;
  const auto [e1, e2] = transverse_basis(n);

  // Symmetrized covariance in the (e1, e2) plane.
  const auto ops = spin_operators(state.qubits());
  const Eigen::VectorXcd& a = state.amplitudes();
  const Eigen::VectorXcd v1 = ops.along(e1) * a;
  const Eigen::VectorXcd v2 = ops.along(e2) * a;
  const double m1 = a.dot(v1).real(), m2 = a.dot(v2).real();
  const double c11 = v1.squaredNorm() - m1 * m1;
  const double c22 = v2.squaredNorm() - m2 * m2;
  const double c12 = v1.dot(v2).real() - m1 * m2;
  auto var = [&](double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    return c * c * c11 + 2.0 * c * s * c12 + s * s * c22;
  };

  constexpr int kScan = 256;
  int best = 0;
  double best_v = var(0.0);
  for (int k = 1; k < kScan; ++k) {
    const double v = var(kPi * k / kScan);
    if (v < best_v) {
      best_v = v;
      best = k;
    }
  }
  const double step = kPi / kScan;
  double lo = kPi * best / kScan - step, hi = kPi * best / kScan + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = var(x1), f2 = var(x2);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = var(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = var(x2);
    }
  }
  double angle = 0.5 * (lo + hi);
  angle = std::fmod(angle + kPi, kPi);
  SqueezingParameters out;
  out.min_variance = std::max(0.0, var(angle));
  out.angle = angle;
  out.min_axis = std::cos(angle) * e1 + std::sin(angle) * e2;
  out.xi_r = std::sqrt(static_cast<double>(state.qubits()) * out.min_variance) / len;
  return out;
}

SqueezingParameters squeezing_parameters(const CollectiveSpinState& state,
                                         const Eigen::Vector3d& alpha_axis,
                                         const Eigen::Vector3d& gamma_axis) {
  const Eigen::Vector3d a = unit(alpha_axis, "alpha axis");
  const Eigen::Vector3d g = unit(gamma_axis, "gamma axis");
  const double mean_g = std::abs(state.expectation(g));
  if (mean_g < 1e-12 * std::max(1.0, state.j()))
    throw EstimationError("squeezing: <J_gamma> vanishes, xi undefined");
  SqueezingParameters out = metrology_squeezing(state);
  out.xi = std::sqrt(state.variance(a)) / std::sqrt(0.5 * mean_g);
  return out;
}

void TwistingScan::write_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"chi_t", "xi_R"};
  for (std::size_t i = 0; i < chi_t.size(); ++i) table.add_row({chi_t[i], xi_r[i]});
  table.write(path);
}

TwistingScan twisting_scan(int m_qubits, std::span<const double> chi_t) {
  if (chi_t.empty()) throw ArgumentError("twisting_scan: no chi_t values");
  const auto start = css(m_qubits, Eigen::Vector3d::UnitX());
  TwistingScan scan;
  for (double x : chi_t) {
    const auto p = metrology_squeezing(one_axis_twisting(start, x));
    scan.chi_t.push_back(x);
    scan.xi_r.push_back(p.xi_r);
    scan.angle.push_back(p.angle);
    if (p.xi_r < scan.xi_r[scan.best]) scan.best = scan.xi_r.size() - 1;
  }
  return scan;
}

}  // namespace qsense
