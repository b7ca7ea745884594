#include "qsense/estimation/phase_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>

#include "qsense/common/csv.hpp"
#include "qsense/common/errors.hpp"
#include "qsense/common/parallel.hpp"
#include "qsense/estimation/estimation.hpp"

namespace qsense {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// frac(2^m φ), exact for dyadic scaling.
double scaled_phase(double phi, int m) {
  const double x = std::ldexp(phi, m);
  return x - std::floor(x);
}

void check_bits(int bits, int max_bits) {
  if (bits < 1 || bits > max_bits)
    throw ArgumentError("phase estimation: bits must be in [1, " + std::to_string(max_bits) + "]");
}

std::vector<int> index_to_bits(std::size_t j, int bits) {
  std::vector<int> out(static_cast<std::size_t>(bits));
  for (int i = 0; i < bits; ++i) out[static_cast<std::size_t>(i)] = static_cast<int>((j >> (bits - 1 - i)) & 1U);
  return out;
}

}  // namespace

PhaseOracle::PhaseOracle(double phi, double contrast, RandomStream rng, double decay)
    : phi_(wrap_phase(phi)), contrast_(contrast), decay_(decay), rng_(std::move(rng)) {
  if (!(contrast >= 0.0 && contrast <= 1.0)) throw ArgumentError("phase oracle: C must be in [0, 1]");
  if (!(decay >= 0.0)) throw ArgumentError("phase oracle: decay must be >= 0");
}

double PhaseOracle::contrast_at(int m) const {
  return contrast_ * std::exp(-decay_ * std::ldexp(1.0, m));
}

double PhaseOracle::probability(int m, double theta) const {
  if (m < 0) throw ArgumentError("phase oracle: m must be >= 0");
  const double p =
      0.5 * (1.0 - contrast_at(m) * std::cos(kTwoPi * scaled_phase(phi_, m) + theta));
  return std::clamp(p, 0.0, 1.0);
}

int PhaseOracle::query(int m, double theta) {
  const double p = probability(m, theta);
  elapsed_ += std::ldexp(1.0, m);
  ++queries_;
  return rng_.uniform() < p ? 1 : 0;
}

void ResourceSchedule::validate() const {
  if (bits < 1) throw ArgumentError("schedule: M must be >= 1");
  if (g < 1 || f < 0) throw ArgumentError("schedule: need G >= 1 and F >= 0");
}

int ResourceSchedule::repeats(int m) const { return g + f * (bits - 1 - m); }

double ResourceSchedule::total_time() const {
  double t = 0.0;
  for (int m = 0; m < bits; ++m) t += repeats(m) * std::ldexp(1.0, m);
  return t;
}

double wrap_phase(double phi) {
  const double w = phi - std::floor(phi);
  return w >= 1.0 ? 0.0 : w;
}

double circular_distance(double a, double b) {
  const double d = std::abs(wrap_phase(a) - wrap_phase(b));
  return std::min(d, 1.0 - d);
}

double bits_to_phase(std::span<const int> bits) {
  double phi = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) phi += std::ldexp(1.0, -static_cast<int>(i) - 1);
  return phi;
}

std::string bits_to_string(std::span<const int> bits) {
  std::string s;
  for (int b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<double> qft_distribution(double phi, int bits) {
  check_bits(bits, 14);
  const std::size_t n = std::size_t{1} << bits;
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  // Qubit q (bit q of the index) holds (|0> + e^{2πi 2^q φ}|1>)/√2.
  std::vector<std::complex<double>> psi(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> a = norm;
    for (int q = 0; q < bits; ++q)
      if ((j >> q) & 1U) a *= std::polar(1.0, kTwoPi * scaled_phase(phi, q));
    psi[j] = a;
  }

  // Inverse QFT: bit reversal, then controlled phases and Hadamards.
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t r = 0;
    for (int q = 0; q < bits; ++q) r |= ((j >> q) & 1U) << (bits - 1 - q);
    if (r > j) std::swap(psi[j], psi[r]);
  }
  const double h = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < bits; ++a) {
    for (int b = 0; b < a; ++b) {
      const auto phase = std::polar(1.0, -kTwoPi / std::ldexp(1.0, a - b + 1));
      const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
      for (std::size_t j = 0; j < n; ++j)
        if ((j & mask) == mask) psi[j] *= phase;
    }
    const std::size_t bit = std::size_t{1} << a;
    for (std::size_t j = 0; j < n; ++j) {
      if (j & bit) continue;
      const auto u = psi[j], v = psi[j | bit];
      psi[j] = h * (u + v);
      psi[j | bit] = h * (u - v);
    }
  }
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = std::norm(psi[j]);
  return p;
}

std::vector<int> qft_phase_estimation(double phi, int bits) {
  const auto p = qft_distribution(phi, bits);
  const auto j = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  return index_to_bits(j, bits);
}

std::vector<int> qft_phase_estimation(double phi, int bits, RandomStream& rng) {
  const auto p = qft_distribution(phi, bits);
  double u = rng.uniform();
  std::size_t j = 0;
  for (; j + 1 < p.size(); ++j) {
    u -= p[j];
    if (u < 0.0) break;
  }
  return index_to_bits(j, bits);
}

double adaptive_phase_estimation(PhaseOracle& oracle, const ResourceSchedule& schedule) {
  schedule.validate();
  const int bits = schedule.bits;
  std::vector<int> b(static_cast<std::size_t>(bits), 0);  // b[k−1] ↔ 2^{−k}
  for (int m = bits - 1; m >= 0; --m) {
    double known = 0.0;
    for (int k = m + 2; k <= bits; ++k)
      if (b[static_cast<std::size_t>(k - 1)]) known += std::ldexp(1.0, -(k - m));
    const double theta = -kTwoPi * known;
    const int n = schedule.repeats(m);
    int ones = 0;
    for (int r = 0; r < n; ++r) ones += oracle.query(m, theta);
    b[static_cast<std::size_t>(m)] = 2 * ones > n ? 1 : 0;
  }
  return bits_to_phase(b);
}

std::vector<PlanStep> default_bayesian_plan(const ResourceSchedule& schedule) {
  schedule.validate();
  std::vector<PlanStep> plan;
  for (int m = schedule.bits - 1; m >= 0; --m)
    for (double theta : {0.0, kPi / 2}) plan.push_back({m, theta, schedule.repeats(m)});
  return plan;
}

PhasePosterior::PhasePosterior(std::size_t grid) : log_w_(grid, 0.0) {
  if (grid < 2) throw ArgumentError("phase posterior: grid must have at least 2 points");
  cos_.resize(grid);
  sin_.resize(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    cos_[i] = std::cos(kTwoPi * grid_point(i));
    sin_[i] = std::sin(kTwoPi * grid_point(i));
  }
}

double PhasePosterior::grid_point(std::size_t i) const {
  return static_cast<double>(i) / static_cast<double>(log_w_.size());
}

void PhasePosterior::update(int m, double theta, int outcome, double contrast, std::size_t count) {
  if (count == 0) return;
  if (m < 0 || m > 62) throw ArgumentError("phase posterior: m must be in [0, 62]");
  const std::size_t n = log_w_.size();
  const double c = static_cast<double>(count);
  const double ct = std::cos(theta), st = std::sin(theta);
  // Grid point i maps to index (i·2^m) mod n under φ → frac(2^m φ).
  const std::uint64_t stride = (std::uint64_t{1} << m) % n;
  double top = -std::numeric_limits<double>::infinity();
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cosine = cos_[k] * ct - sin_[k] * st;
    const double p1 = 0.5 * (1.0 - contrast * cosine);
    const double lik = std::max(outcome ? p1 : 1.0 - p1, 1e-300);
    log_w_[i] += c * std::log(lik);
    top = std::max(top, log_w_[i]);
    k = (k + stride) % n;
  }
  for (auto& v : log_w_) v -= top;
}

std::vector<double> PhasePosterior::weights() const {
  const double top = *std::max_element(log_w_.begin(), log_w_.end());
  std::vector<double> w(log_w_.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_w_[i] - top);
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

double PhasePosterior::mean() const {
  const auto w = weights();
  std::complex<double> z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * std::polar(1.0, kTwoPi * grid_point(i));
  if (std::abs(z) < 1e-14) return 0.0;
  return wrap_phase(std::arg(z) / kTwoPi);
}

BayesianResult bayesian_phase_estimation(PhaseOracle& oracle, std::span<const PlanStep> plan) {
  int max_m = 0;
  for (const auto& s : plan) {
    if (s.m < 0 || s.repeats < 0) throw ArgumentError("bayesian plan: m and repeats must be >= 0");
    max_m = std::max(max_m, s.m);
  }
  check_bits(max_m + 1, 24);
  const std::size_t grid = std::max<std::size_t>(4096, std::size_t{1} << (max_m + 5));
  BayesianResult r{PhasePosterior(grid), 0.0};
  for (const auto& s : plan) {
    int ones = 0;
    for (int i = 0; i < s.repeats; ++i) ones += oracle.query(s.m, s.theta);
    const double c = oracle.contrast_at(s.m);
    r.posterior.update(s.m, s.theta, 1, c, static_cast<std::size_t>(ones));
    r.posterior.update(s.m, s.theta, 0, c, static_cast<std::size_t>(s.repeats - ones));
  }
  r.phi_hat = r.posterior.mean();
  return r;
}

double fixed_time_phase_estimation(PhaseOracle& oracle, std::size_t shots) {
  if (shots == 0) throw ArgumentError("fixed-time estimation: shots must be >= 1");
  double ones0 = 0.0, ones1 = 0.0;
  for (std::size_t i = 0; i < shots; ++i) ones0 += oracle.query(0, 0.0);
  for (std::size_t i = 0; i < shots; ++i) ones1 += oracle.query(0, kPi / 2);
  const double n = static_cast<double>(shots);
  const double cos_part = 1.0 - 2.0 * ones0 / n;
  const double sin_part = 2.0 * ones1 / n - 1.0;
  return wrap_phase(std::atan2(sin_part, cos_part) / kTwoPi);
}

std::string to_string(PhaseEstimator e) {
  switch (e) {
    case PhaseEstimator::Adaptive:
      return "adaptive";
    case PhaseEstimator::Bayesian:
      return "bayesian";
    case PhaseEstimator::FixedTime:
      return "fixed_time";
  }
  return "unknown";
}

void ScalingBenchmark::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot open " + path.string());
  out << "T_total,median_error,quantile_10,quantile_90,estimator\n";
  for (const auto& p : points)
    out << format_double(p.total_time) << ',' << format_double(p.median_error) << ','
        << format_double(p.quantile_10) << ',' << format_double(p.quantile_90) << ','
        << to_string(estimator) << '\n';
  if (!out) throw ArgumentError("failed writing " + path.string());
}

ScalingBenchmark phase_estimation_scaling(PhaseEstimator estimator, std::span<const int> bits,
                                          const ScalingOptions& options) {
  if (bits.empty()) throw ArgumentError("phase_estimation_scaling: no bit counts");
  if (options.trials == 0) throw ArgumentError("phase_estimation_scaling: trials must be >= 1");
  ScalingBenchmark bench;
  bench.estimator = estimator;
  for (int m_bits : bits) {
    const ResourceSchedule schedule{m_bits, options.g, options.f};
    schedule.validate();
    const auto plan = default_bayesian_plan(schedule);
    const auto shots = static_cast<std::size_t>(std::ceil(schedule.total_time() / 2.0));
    std::vector<double> errors(options.trials);
    std::vector<double> times(options.trials);
    parallel_for(options.trials, [&](std::size_t i) {
      RandomStream rng(derive_seed(options.seed, static_cast<std::uint64_t>(m_bits), i));
      const double phi = rng.uniform();
      PhaseOracle oracle(phi, options.contrast, rng.split(1));
      double phi_hat = 0.0;
      switch (estimator) {
        case PhaseEstimator::Adaptive:
          phi_hat = adaptive_phase_estimation(oracle, schedule);
          break;
        case PhaseEstimator::Bayesian:
          phi_hat = bayesian_phase_estimation(oracle, plan).phi_hat;
          break;
        case PhaseEstimator::FixedTime:
          phi_hat = fixed_time_phase_estimation(oracle, shots);
          break;
      }
      errors[i] = circular_distance(phi_hat, phi);
      times[i] = oracle.elapsed();
    });
    ScalingPoint p;
    p.bits = m_bits;
    p.total_time = times.front();
    p.median_error = quantile(errors, 0.5);
    p.quantile_10 = quantile(errors, 0.1);
    p.quantile_90 = quantile(errors, 0.9);
    bench.points.push_back(p);
  }
  if (bench.points.size() >= 2) {
    std::vector<double> t, e;
    for (const auto& p : bench.points) {
      t.push_back(p.total_time);
      e.push_back(p.median_error);
    }
    bench.exponent = fit_power_law(t, e).exponent;
  }
  return bench;
}

}  // namespace qsense
