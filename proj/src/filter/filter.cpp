#include "qsense/filter/filter.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>

#include "qsense/common/csv.hpp"
#include "qsense/common/errors.hpp"

namespace qsense {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// sin(nx)/cos(x) for even n, finite at the poles x = π/2 + jπ.
double sin_n_over_cos(int n, double x) {
  const double c = std::cos(x);
  if (std::abs(c) > 0.5) return std::sin(n * x) / c;
  const double j = std::round((x - kPi / 2) / kPi);
  const double eps = x - (kPi / 2 + j * kPi);
  // cos(n·x_p) = (−1)^{n/2} for even n.
  const double cos_nxp = ((n / 2) % 2 == 0) ? 1.0 : -1.0;
  const double sign_j = (static_cast<long long>(j) % 2 == 0) ? 1.0 : -1.0;
  const double ratio = std::abs(eps) < 1e-9 ? static_cast<double>(n)
                                            : std::sin(n * eps) / std::sin(eps);
  return cos_nxp * ratio / (-sign_j);
}

void check_pulse_args(int n, double tau, double f_ac) {
  if (n < 2 || n % 2 != 0) throw ArgumentError("weighting function: n must be even and >= 2");
  if (!(tau > 0.0)) throw ArgumentError("weighting function: tau must be > 0");
  if (!(f_ac >= 0.0) || !std::isfinite(f_ac)) throw ArgumentError("weighting function: f_ac >= 0");
}

// Amplitude B with W = B·cos(α + nx) (CP) or B·sin(α + nx) (PDD).
double weighting_amplitude(SequenceKind kind, double f_ac, int n, double tau) {
  check_pulse_args(n, tau, f_ac);
  const double x = kPi * f_ac * tau;
  const double nx = n * x;
  const bool near_pole = std::abs(std::cos(x)) <= 0.5;
  if (kind == SequenceKind::CP) {
    if (!near_pole) return sinc(nx) * (1.0 - 1.0 / std::cos(x));
    return sinc(nx) - sin_n_over_cos(n, x) / nx;
  }
  if (!near_pole) return sinc(nx) * std::tan(x);
  return sin_n_over_cos(n, x) * std::sin(x) / nx;
}

template <class F>
double gk_integrate(F&& f, double a, double b, double* error) {
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 5, 1e-10, &err);
  if (error) *error += err;
  return v;
}

}  // namespace

ModulationFunction::ModulationFunction(std::vector<double> switches, double total_time)
    : switches_(std::move(switches)), total_time_(total_time) {
  if (!(total_time > 0.0) || !std::isfinite(total_time))
    throw ArgumentError("modulation function: total time must be > 0");
  double last = 0.0;
  for (double s : switches_) {
    if (!(s > last) || !(s < total_time))
      throw ArgumentError("modulation function: switch times must satisfy 0 < t1 < ... < t");
    last = s;
  }
  pulses_ = static_cast<int>(switches_.size());
}

ModulationFunction ModulationFunction::ramsey(double t) { return ModulationFunction({}, t); }

ModulationFunction ModulationFunction::echo(double t) { return ModulationFunction({t / 2}, t); }

ModulationFunction ModulationFunction::cp(int n, double tau) {
  if (n < 1 || !(tau > 0.0)) throw ArgumentError("cp: need n >= 1 and tau > 0");
  std::vector<double> s;
  for (int j = 1; j <= n; ++j) s.push_back((2.0 * j - 1.0) * tau / 2.0);
  return ModulationFunction(std::move(s), n * tau);
}

ModulationFunction ModulationFunction::pdd(int n, double tau) {
  if (n < 1 || !(tau > 0.0)) throw ArgumentError("pdd: need n >= 1 and tau > 0");
  std::vector<double> s;
  for (int j = 1; j < n; ++j) s.push_back(j * tau);
  ModulationFunction y(std::move(s), n * tau);
  y.pulses_ = n;
  return y;
}

double ModulationFunction::value(double t) const {
  const auto flips = std::upper_bound(switches_.begin(), switches_.end(), t) - switches_.begin();
  return flips % 2 == 0 ? 1.0 : -1.0;
}

std::vector<ModulationFunction::Segment> ModulationFunction::segments() const {
  std::vector<Segment> out;
  double a = 0.0;
  int sign = 1;
  for (double s : switches_) {
    out.push_back({a, s, sign});
    a = s;
    sign = -sign;
  }
  out.push_back({a, total_time_, sign});
  return out;
}

double ModulationFunction::net_area() const {
  double area = 0.0;
  for (const auto& seg : segments()) area += seg.sign * (seg.b - seg.a);
  return area;
}

bool ModulationFunction::balanced() const {
  return std::abs(net_area()) <= 1e-12 * total_time_;
}

double ModulationFunction::integral(double a, double b) const {
  double sum = 0.0;
  for (const auto& seg : segments()) {
    const double lo = std::max(a, seg.a);
    const double hi = std::min(b, seg.b);
    if (hi > lo) sum += seg.sign * (hi - lo);
  }
  return sum;
}

double ModulationFunction::integral_cos(double omega, double alpha) const {
  double sum = 0.0;
  for (const auto& seg : segments()) {
    const double len = seg.b - seg.a;
    sum += seg.sign * len * sinc(0.5 * omega * len) *
           std::cos(0.5 * omega * (seg.a + seg.b) + alpha);
  }
  return sum;
}

std::vector<double> ModulationFunction::bin_weights(double dt, std::size_t count) const {
  if (!(dt > 0.0)) throw ArgumentError("bin_weights: dt must be > 0");
  std::vector<double> w(count, 0.0);
  for (const auto& seg : segments()) {
    for (auto i = static_cast<std::size_t>(std::floor(seg.a / dt)); i < count; ++i) {
      const double lo = std::max(seg.a, static_cast<double>(i) * dt);
      const double hi = std::min(seg.b, static_cast<double>(i + 1) * dt);
      if (lo >= seg.b) break;
      if (hi > lo) w[i] += seg.sign * (hi - lo);
    }
  }
  return w;
}

std::complex<double> ModulationFunction::filter(double omega) const {
  std::complex<double> y{0.0, 0.0};
  double a = 0.0, sign = 1.0;
  auto add = [&](double b) {
    const double len = b - a;
    y += sign * len * sinc(0.5 * omega * len) * std::polar(1.0, 0.5 * omega * (a + b));
  };
  for (double s : switches_) {
    add(s);
    a = s;
    sign = -sign;
  }
  add(total_time_);
  return 0.5 * y;
}

void FilterFunctionCurve::write_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"omega_rad_s", "value"};
  for (std::size_t i = 0; i < omega.size(); ++i) table.add_row({omega[i], value[i]});
  table.write(path);
}

FilterFunctionCurve filter_curve(const ModulationFunction& y, std::span<const double> omegas) {
  FilterFunctionCurve curve;
  for (double w : omegas) {
    if (!(w >= 0.0)) throw ArgumentError("filter_curve: omega must be >= 0");
    curve.omega.push_back(w);
    curve.value.push_back(std::norm(y.filter(w)));
  }
  return curve;
}

double weighting_function(SequenceKind kind, double f_ac, double alpha, int n, double tau) {
  const double amp = weighting_amplitude(kind, f_ac, n, tau);
  const double phase = alpha + n * kPi * f_ac * tau;
  return kind == SequenceKind::CP ? amp * std::cos(phase) : amp * std::sin(phase);
}

double averaged_weighting(SequenceKind kind, double f_ac, int n, double tau) {
  const double amp = weighting_amplitude(kind, f_ac, n, tau);
  return 0.5 * amp * amp;
}

int harmonic_order(double f_ac, double tau) {
  const double r = 2.0 * f_ac * tau;
  const int k = 2 * static_cast<int>(std::round((r - 1.0) / 2.0)) + 1;
  return std::max(1, k);
}

namespace {

DecoherenceResult decoherence_integral(const std::function<double(double)>& psd,
                                       const ModulationFunction& y, double gamma, double support,
                                       std::span<const double> breakpoints) {
  const double t = y.total_time();
  const double n_switch = static_cast<double>(y.switches().size());
  const double upper =
      std::max({2000.0 / t, 20.0 * kPi * (n_switch + 1.0) / t, 2.0 * support});
  const double width = 4.0 * kPi / t;
  const auto chunks = static_cast<std::size_t>(std::ceil(upper / width));

  std::vector<double> edges;
  edges.reserve(chunks + breakpoints.size() + 1);
  for (std::size_t c = 0; c <= chunks; ++c) edges.push_back(static_cast<double>(c) * width);
  for (double b : breakpoints)
    if (b > 0.0 && b < edges.back()) edges.push_back(b);
  std::sort(edges.begin(), edges.end());

  auto integrand = [&](double w) { return psd(w) * std::norm(y.filter(w)); };
  DecoherenceResult r;
  r.upper_limit = edges.back();
  double body = 0.0, err = 0.0;
  for (std::size_t c = 0; c + 1 < edges.size(); ++c)
    if (edges[c + 1] > edges[c]) body += gk_integrate(integrand, edges[c], edges[c + 1], &err);

  // ∫_Ω^∞ S/ω² dω with u = 1/ω.
  double tail_err = 0.0;
  const double tail_integral = gk_integrate(
      [&](double u) { return psd(u > 0.0 ? 1.0 / u : std::numeric_limits<double>::max()); }, 0.0,
      1.0 / r.upper_limit, &tail_err);
  const double pref = 2.0 / kPi * gamma * gamma;
  r.tail = pref * 0.5 * (1.0 + 2.0 * n_switch) * tail_integral;
  r.chi = pref * body + r.tail;
  r.abs_error = pref * err;
  r.tail_warning = std::abs(r.tail) > 1e-3 * std::abs(r.chi);
  if (!std::isfinite(r.chi) || r.abs_error > 1e-6 * std::abs(r.chi) + 1e-300)
    throw EstimationError("decoherence integral did not converge: chi = " +
                          std::to_string(r.chi) + ", error estimate " +
                          std::to_string(r.abs_error));
  return r;
}

}  // namespace

DecoherenceResult decoherence_from_function(const std::function<double(double)>& psd,
                                            const ModulationFunction& y, double gamma,
                                            double support) {
  return decoherence_integral(psd, y, gamma, support, {});
}

DecoherenceResult decoherence_from_psd(const SpectralDensity& psd, const ModulationFunction& y,
                                       double gamma) {
  psd.validate();
  if (psd.is_zero()) return {};
  const auto breaks = psd.breakpoints();
  return decoherence_integral([&psd](double w) { return psd.evaluate(w); }, y, gamma,
                              psd.support(), breaks);
}

std::vector<double> harmonic_weights(int k_max) {
  if (k_max < 1 || k_max % 2 == 0) throw ArgumentError("k_max must be odd and >= 1");
  if (k_max == 1) return {1.0};
  std::vector<double> c;
  double partial = 0.0;
  for (int k = 1; k < k_max; k += 2) {
    c.push_back(1.0 / (k * k));
    partial += 1.0 / (k * k);
  }
  c.push_back(kPi * kPi / 8.0 - partial);
  return c;
}

double decoherence_delta(const SpectralDensity& psd, int n, double tau, double gamma, int k_max) {
  if (n < 1 || !(tau > 0.0)) throw ArgumentError("decoherence_delta: need n >= 1, tau > 0");
  const auto c = harmonic_weights(k_max);
  const double t = n * tau;
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double k = 2.0 * static_cast<double>(i) + 1.0;
    sum += c[i] * psd.evaluate(k * kPi / tau);
  }
  return 4.0 * t / (kPi * kPi) * gamma * gamma * sum;
}

double ReconstructedSpectrum::at(double w) const {
  if (omega.empty()) return 0.0;
  if (w <= omega.front()) return value.front();
  if (w >= omega.back()) return value.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(omega.begin(), omega.end(), w) -
                                           omega.begin());
  const double f = (w - omega[hi - 1]) / (omega[hi] - omega[hi - 1]);
  return (1.0 - f) * value[hi - 1] + f * value[hi];
}

void ReconstructedSpectrum::write_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"omega_rad_s", "value"};
  for (std::size_t i = 0; i < omega.size(); ++i) table.add_row({omega[i], value[i]});
  table.write(path);
}

ReconstructedSpectrum reconstruct_psd(std::span<const ChiMeasurement> measurements, double gamma,
                                      int k_max, double ridge) {
  if (measurements.empty()) throw ArgumentError("reconstruct_psd: no measurements");
  if (!(gamma > 0.0)) throw ArgumentError("reconstruct_psd: gamma must be > 0");
  for (const auto& m : measurements)
    if (!(m.tau > 0.0) || m.n < 1 || !std::isfinite(m.chi))
      throw ArgumentError("reconstruct_psd: each point needs tau > 0, n >= 1, finite chi");
  const auto c = harmonic_weights(k_max);

  std::map<double, std::size_t> index;
  for (const auto& m : measurements) index.emplace(kPi / m.tau, 0);
  ReconstructedSpectrum out;
  for (auto& [w, i] : index) {
    i = out.omega.size();
    out.omega.push_back(w);
  }
  const auto nodes = static_cast<Eigen::Index>(out.omega.size());
  const auto rows = static_cast<Eigen::Index>(measurements.size());

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, nodes);
  Eigen::VectorXd chi(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& m = measurements[static_cast<std::size_t>(r)];
    const double scale = 4.0 * m.n * m.tau / (kPi * kPi) * gamma * gamma;
    chi(r) = m.chi;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double w = (2.0 * static_cast<double>(i) + 1.0) * kPi / m.tau;
      if (w <= out.omega.front()) {
        a(r, 0) += scale * c[i];
      } else if (w >= out.omega.back()) {
        a(r, nodes - 1) += scale * c[i];
      } else {
        const auto hi = std::upper_bound(out.omega.begin(), out.omega.end(), w) - out.omega.begin();
        const double f = (w - out.omega[static_cast<std::size_t>(hi - 1)]) /
                         (out.omega[static_cast<std::size_t>(hi)] -
                          out.omega[static_cast<std::size_t>(hi - 1)]);
        a(r, hi - 1) += scale * c[i] * (1.0 - f);
        a(r, hi) += scale * c[i] * f;
      }
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();

  Eigen::MatrixXd normal = a.transpose() * a;
  const double lambda = ridge * normal.trace() / static_cast<double>(nodes);
  normal.diagonal().array() += lambda;
  Eigen::VectorXd s = normal.ldlt().solve(a.transpose() * chi);
  out.value.assign(s.data(), s.data() + s.size());
  if (rows < nodes || out.condition > 1e8) {
    out.regularized = true;
    out.warning = "ill-conditioned reconstruction (condition " + std::to_string(out.condition) +
                  "); ridge-regularized least squares";
  }
  return out;
}

double relaxation_rate(RelaxationKind kind, const SpectralDensity& psd_par,
                       const SpectralDensity& psd_perp, double gamma, double omega0,
                       double omega1, double delta_omega) {
  const double g2 = gamma * gamma;
  const double perp = psd_perp.evaluate(omega0);
  switch (kind) {
    case RelaxationKind::T1:
      return 0.5 * g2 * perp;
    case RelaxationKind::T2Star:
      return 0.25 * g2 * perp + 0.5 * g2 * psd_par.evaluate(0.0);
    case RelaxationKind::SpinLockResonant:
      return 0.25 * g2 * perp + 0.5 * g2 * psd_par.evaluate(omega1);
    case RelaxationKind::SpinLockDetuned: {
      const double w_eff = std::hypot(omega1, delta_omega);
      if (!(w_eff > 0.0))
        throw ArgumentError("relaxation_rate: omega1 and delta_omega are both zero");
      const double r = delta_omega / w_eff;
      const double q = omega1 / w_eff;
      return 0.25 * (1.0 + r * r) * g2 * perp + 0.5 * q * q * g2 * psd_par.evaluate(w_eff);
    }
  }
  throw ArgumentError("relaxation_rate: unknown kind");
}

double golden_rule_rate(double matrix_element_sq, const SpectralDensity& psd, double gamma,
                        double omega01) {
  if (!(matrix_element_sq >= 0.0 && matrix_element_sq <= 1.0))
    throw ArgumentError("golden_rule_rate: matrix element squared must lie in [0, 1]");
  return 2.0 * gamma * gamma * psd.evaluate(omega01) * matrix_element_sq;
}

}  // namespace qsense
