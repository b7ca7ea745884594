#include "qsense/estimation/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "qsense/common/errors.hpp"

namespace qsense {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

// Ridders extrapolation of a difference quotient d(h) whose error is a series in h².
template <class D>
double extrapolate(D&& d, double h) {
  constexpr int kTab = 16;
  constexpr double kCon = 1.4, kCon2 = kCon * kCon, kSafe = 2.0;
  std::array<std::array<double, kTab>, kTab> a{};
  a[0][0] = d(h);
  double err = std::numeric_limits<double>::max();
  double ans = a[0][0];
  for (int i = 1; i < kTab; ++i) {
    h /= kCon;
    a[0][i] = d(h);
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kCon2;
      const double errt =
          std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (errt <= err) {
        err = errt;
        ans = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * err) break;
  }
  return ans;
}

}  // namespace

void SensitivityInputs::validate() const {
  if (!(gamma > 0.0)) throw ArgumentError("sensitivity: gamma must be > 0");
  if (!(contrast > 0.0 && contrast <= 1.0)) throw ArgumentError("sensitivity: C must be in (0, 1]");
  if (!(t_chi > 0.0)) throw ArgumentError("sensitivity: T_chi must be > 0");
  if (!(t_m >= 0.0)) throw ArgumentError("sensitivity: t_m must be >= 0");
  if (!(exponent > 0.0)) throw ArgumentError("sensitivity: decay exponent must be > 0");
  if (order != 1 && order != 2) throw ArgumentError("sensitivity: order must be 1 or 2");
}

double SensitivityInputs::chi(double t) const { return std::pow(t / t_chi, exponent); }

double SensitivityInputs::response(double t) const {
  const double x = gamma * t;
  return order == 1 ? 0.5 * x : 0.25 * x * x;
}

double snr(const SensitivityInputs& in, double delta_v, double t, double total_time) {
  return snr(in, delta_v, t, total_time, [&in](double s) { return in.chi(s); });
}

double snr(const SensitivityInputs& in, double delta_v, double t, double total_time,
           const std::function<double(double)>& chi_of_t) {
  in.validate();
  if (!(t > 0.0)) throw ArgumentError("snr: t must be > 0");
  if (!(total_time >= t + in.t_m)) throw ArgumentError("snr: T must be >= t + t_m");
  const double dp = std::pow(std::abs(delta_v), in.order) * in.response(t);
  return dp * std::exp(-chi_of_t(t)) * 2.0 * in.contrast * std::sqrt(total_time / (t + in.t_m));
}

double minimum_signal_at(const SensitivityInputs& in, double t) {
  in.validate();
  if (!(t > 0.0)) throw ArgumentError("minimum_signal_at: t must be > 0");
  const double vq =
      std::exp(in.chi(t)) * std::sqrt(t + in.t_m) / (2.0 * in.contrast * in.response(t));
  return in.order == 1 ? vq : std::sqrt(vq);
}

SensitivityOptimum minimum_detectable_signal(const SensitivityInputs& in) {
  in.validate();
  const double lo = std::log(1e-6 * in.t_chi);
  const double hi = std::log(1e3 * in.t_chi);
  auto f = [&](double u) { return std::log(minimum_signal_at(in, std::exp(u))); };
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  SensitivityOptimum out;
  const double u = 0.5 * (a + b);
  out.t_opt = std::exp(u);
  out.v_min = minimum_signal_at(in, out.t_opt);
  if (u - lo < 1e-6 || hi - u < 1e-6) {
    out.interior = false;
    out.note = "no interior optimum; value reported at the search boundary";
  }
  return out;
}

double vmin_slope_optimal(double gamma, double contrast, double t2star) {
  return std::sqrt(2.0 * kE) / (gamma * contrast * std::sqrt(t2star));
}

double vmin_variance(double gamma, double contrast, double t_chi) {
  return std::sqrt(2.0 * kE) / (gamma * std::sqrt(contrast) * std::pow(t_chi, 0.75));
}

double psd_min(double gamma, double contrast, double t_chi) {
  return kE / (gamma * gamma * contrast * std::sqrt(t_chi));
}

double vmin_integrated(double v_min, int order, double total_time) {
  if (order != 1 && order != 2) throw ArgumentError("vmin_integrated: order must be 1 or 2");
  if (!(total_time > 0.0)) throw ArgumentError("vmin_integrated: T must be > 0");
  return v_min * std::pow(total_time, -0.5 / order);
}

void AllanSeries::validate() const {
  if (samples.size() < 3) throw ArgumentError("allan series needs at least 3 samples");
  if (!(t_s > 0.0)) throw ArgumentError("allan series: t_s must be > 0");
}

double allan_variance(const AllanSeries& series, std::size_t m) {
  series.validate();
  const std::size_t n = series.samples.size();
  if (m < 1 || n < 2 * m + 1)
    throw ArgumentError("allan_variance: grouping m must satisfy 1 <= m and N - 2m >= 1");
  const std::size_t terms = n - 2 * m;
  double sum = 0.0;
  for (std::size_t j = 0; j < terms; ++j) {
    const double d = series.samples[j + m] - series.samples[j];
    sum += d * d;
  }
  const double md = static_cast<double>(m);
  return sum / (2.0 * static_cast<double>(terms) * md * md * series.t_s * series.t_s);
}

FisherResult fisher_information(const std::function<double(double)>& p_model, double v,
                                std::size_t n, double gamma, double h) {
  if (n == 0) throw ArgumentError("fisher_information: N must be >= 1");
  if (!(gamma > 0.0)) throw ArgumentError("fisher_information: gamma must be > 0");
  if (!(h > 0.0)) h = 1e-2 * std::max(1.0, std::abs(v));
  const double p = p_model(v);
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("fisher_information: p outside [0, 1]");

  FisherResult r;
  if (p * (1.0 - p) < 1e-12) {
    const double d2 = extrapolate(
        [&](double s) { return (p_model(v + s) - 2.0 * p + p_model(v - s)) / (s * s); }, h);
    r.f_v = 2.0 * std::abs(d2);
  } else {
    const double d1 =
        extrapolate([&](double s) { return (p_model(v + s) - p_model(v - s)) / (2.0 * s); }, h);
    r.f_v = d1 * d1 / (p * (1.0 - p));
  }
  r.f = r.f_v / (gamma * gamma);
  r.delta_v = r.f_v > 0.0 ? 1.0 / std::sqrt(static_cast<double>(n) * r.f_v)
                          : std::numeric_limits<double>::infinity();
  return r;
}

double ramsey_bias_probability(double gamma, double v, double t, double chi) {
  return 0.5 * (1.0 + std::exp(-chi) * std::sin(gamma * v * t));
}

double ramsey_fisher(double gamma, double v, double t, double chi) {
  const double c = std::cos(gamma * v * t);
  const double s = std::sin(gamma * v * t);
  const double e2 = std::exp(-2.0 * chi);
  return t * t * c * c * e2 / (1.0 - e2 * s * s);
}

double ramsey_qcrb(double gamma, double t, double chi, std::size_t n) {
  return std::exp(chi) / (gamma * t * std::sqrt(static_cast<double>(n)));
}

double quantum_fisher_information(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& drho) {
  if (rho.rows() != rho.cols() || drho.rows() != rho.rows() || drho.cols() != rho.cols())
    throw ArgumentError("quantum_fisher_information: matrix shapes differ");
  if (!drho.isApprox(drho.adjoint(), 1e-9) && drho.norm() > 0.0)
    throw ArgumentError("quantum_fisher_information: drho must be Hermitian");
  if (std::abs(drho.trace()) > 1e-9)
    throw ArgumentError("quantum_fisher_information: drho must be traceless");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho);
  const auto& lambda = eig.eigenvalues();
  const Eigen::MatrixXcd a = eig.eigenvectors().adjoint() * drho * eig.eigenvectors();
  double f = 0.0;
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double s = lambda(j) + lambda(k);
      if (s > 1e-14) f += 2.0 * std::norm(a(j, k)) / s;
    }
  return f;
}

double quantum_fisher_information(const QubitState& rho, const Matrix2c& drho) {
  return quantum_fisher_information(Eigen::MatrixXcd(rho.matrix()), Eigen::MatrixXcd(drho));
}

DynamicRange dynamic_range_fixed(double gamma, double t, double contrast, double t2star,
                                 double total_time) {
  if (!(gamma > 0.0 && t > 0.0 && contrast > 0.0 && t2star > 0.0 && total_time > 0.0))
    throw ArgumentError("dynamic_range: all arguments must be > 0");
  DynamicRange d;
  d.v_max = kPi / (gamma * t);
  d.v_min = 2.0 / (gamma * contrast * std::sqrt(t2star * total_time));
  d.ratio = d.v_max / d.v_min;
  return d;
}

DynamicRange dynamic_range_schedule(double gamma, double t0, double contrast, double total_time,
                                    int g, int f) {
  if (!(gamma > 0.0 && t0 > 0.0 && contrast > 0.0 && total_time > 0.0))
    throw ArgumentError("dynamic_range: all arguments must be > 0");
  if (g < 1 || f < 0) throw ArgumentError("dynamic_range: need G >= 1 and F >= 0");
  auto schedule_time = [&](int m_bits) {
    double s = 0.0;
    for (int m = 0; m < m_bits; ++m) s += (g + f * (m_bits - 1 - m)) * std::ldexp(1.0, m);
    return s * t0;
  };
  if (total_time < schedule_time(1))
    throw ArgumentError("dynamic_range: T shorter than the one-bit schedule");
  int m = 1;
  while (schedule_time(m + 1) <= total_time) ++m;
  const double lo = std::log(schedule_time(m));
  const double hi = std::log(schedule_time(m + 1));
  const double m_eff = m + (std::log(total_time) - lo) / (hi - lo);
  const double t_last = t0 * std::exp2(m_eff - 1.0);
  DynamicRange d;
  d.v_max = kPi / (gamma * t0);
  d.v_min = 2.0 / (gamma * contrast * std::sqrt(t_last * total_time));
  d.ratio = d.v_max / d.v_min;
  return d;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ArgumentError("fit_power_law: need at least two (x, y) pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ArgumentError("fit_power_law: values must be > 0");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) throw ArgumentError("fit_power_law: x values must differ");
  PowerLawFit fit;
  fit.exponent = (n * sxy - sx * sy) / den;
  fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
  return fit;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

}  // namespace qsense
