#include "qsense/protocols/protocols.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qsense/common/csv.hpp"
#include "qsense/common/errors.hpp"
#include "qsense/common/fft.hpp"
#include "qsense/common/parallel.hpp"

namespace qsense {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double integrate_segment(const SignalHamiltonian::Waveform& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-10);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 64;
  while (p < n) p *= 2;
  return p;
}

// ∫ trace(t) y(t − start) dt over the block, trace held constant per bin.
double trace_phase(const NoiseTrace& trace, const ModulationFunction& y, double start) {
  const double dt = trace.dt;
  const std::size_t n = trace.samples.size();
  double sum = 0.0;
  for (const auto& seg : y.segments()) {
    const double a = start + seg.a;
    const double b = start + seg.b;
    double acc = 0.0;
    for (auto i = static_cast<long long>(std::floor(a / dt));; ++i) {
      const double lo = std::max(a, static_cast<double>(i) * dt);
      const double hi = std::min(b, static_cast<double>(i + 1) * dt);
      if (lo >= b) break;
      if (hi > lo) acc += trace.samples[static_cast<std::size_t>(i) % n] * (hi - lo);
    }
    sum += seg.sign * acc;
  }
  return sum;
}

struct TrialSignal {
  std::vector<ToneSpec> tones;
  std::optional<NoiseTrace> par;
  std::optional<NoiseTrace> perp;
};

TrialSignal draw_signal(const SequenceSpec& spec, const ProtocolSetup& setup, RandomStream& rng) {
  TrialSignal s;
  s.tones = setup.tones;
  for (auto& tone : s.tones) {
    if (setup.tone_model == AmplitudeModel::RandomPhase) {
      tone.alpha = rng.uniform(0.0, 2.0 * kPi);
    } else if (setup.tone_model == AmplitudeModel::RandomAmplitude) {
      tone.v_pk = rng.normal(0.0, tone.v_pk);
      tone.alpha = rng.uniform(0.0, 2.0 * kPi);
    }
  }
  const double total = sequence_duration(spec);
  auto draw = [&](const SpectralDensity& psd) {
    const auto n = next_pow2(static_cast<std::size_t>(std::ceil(2.0 * total / setup.noise_dt)));
    return synthesize_noise(psd, static_cast<double>(n) * setup.noise_dt, setup.noise_dt, rng);
  };
  if (setup.noise_par && !setup.noise_par->is_zero()) s.par = draw(*setup.noise_par);
  if (setup.noise_perp && !setup.noise_perp->is_zero()) s.perp = draw(*setup.noise_perp);
  return s;
}

double block_phase(const ModulationFunction& y, double start, const ProtocolSetup& setup,
                   const TrialSignal& s) {
  double phase = setup.omega0 * y.net_area();
  double signal = 0.0;
  for (const auto& tone : s.tones)
    signal += tone.v_pk *
              y.integral_cos(2.0 * kPi * tone.f_ac, tone.alpha + 2.0 * kPi * tone.f_ac * start);
  if (setup.v_par) {
    for (const auto& seg : y.segments())
      signal += seg.sign * integrate_segment(setup.v_par, start + seg.a, start + seg.b);
  }
  if (s.par) signal += trace_phase(*s.par, y, start);
  return phase + setup.gamma * signal;
}

bool fast_path_applies(const SequenceSpec& spec, const ProtocolSetup& setup) {
  if (setup.force_full_evolution) return false;
  if (setup.noise_perp && !setup.noise_perp->is_zero()) return false;
  return std::holds_alternative<seq::Ramsey>(spec) || std::holds_alternative<seq::SpinEcho>(spec) ||
         std::holds_alternative<seq::CP>(spec) || std::holds_alternative<seq::PDD>(spec) ||
         std::holds_alternative<seq::Correlation>(spec);
}

double fast_cycle(const SequenceSpec& spec, const ProtocolSetup& setup, const TrialSignal& s) {
  if (const auto* c = std::get_if<seq::Correlation>(&spec)) {
    const auto y = ModulationFunction::cp(c->n, c->tau);
    const double p1 = block_phase(y, 0.0, setup, s);
    const double p2 = block_phase(y, c->t1, setup, s);
    return 0.5 * (1.0 - std::sin(p1) * std::sin(p2));
  }
  const auto y = *sequence_modulation(spec);
  const double phase = block_phase(y, 0.0, setup, s);
  if (const auto* r = std::get_if<seq::Ramsey>(&spec); r && r->slope_bias)
    return 0.5 * (1.0 + std::sin(phase));
  return 0.5 * (1.0 - std::cos(phase));
}

// Evolves through the block [start, start + t], applying x π pulses at the
// switch times (and at the end for PDD).
QubitState run_block(QubitState state, const ModulationFunction& y, bool pulse_at_end,
                     double start, const InternalHamiltonian& h0, const SignalHamiltonian& hv,
                     double step) {
  const auto pi_x = rotation(Axis::X, kPi);
  double t = 0.0;
  for (double s : y.switches()) {
    state = evolve_from(state, h0, hv, start + t, s - t, step);
    state = state.transformed(pi_x);
    t = s;
  }
  state = evolve_from(state, h0, hv, start + t, y.total_time() - t, step);
  if (pulse_at_end) state = state.transformed(pi_x);
  return state;
}

double full_cycle(const SequenceSpec& spec, const ProtocolSetup& setup, const TrialSignal& s) {
  SignalHamiltonian hv;
  hv.gamma = setup.gamma;
  const bool has_par = !s.tones.empty() || static_cast<bool>(setup.v_par) || s.par.has_value();
  if (has_par) {
    hv.v_par = [&](double t) {
      double v = sample_waveform(s.tones, t);
      if (setup.v_par) v += setup.v_par(t);
      if (s.par) v += s.par->value_at(t);
      return v;
    };
  }
  double drive = 0.0;
  InternalHamiltonian h0{setup.omega0};
  if (const auto* r = std::get_if<seq::Rabi>(&spec)) drive = r->omega1;
  if (const auto* l = std::get_if<seq::SpinLock>(&spec)) {
    drive = l->omega1;
    h0.omega0 = l->delta_omega;
  }
  if (drive != 0.0 || s.perp) {
    const double bias = drive / setup.gamma;
    hv.v_perp_x = [&s, bias](double t) { return bias + (s.perp ? s.perp->value_at(t) : 0.0); };
  }

  const double total = sequence_duration(spec);
  double step = setup.step;
  if (!(step > 0.0)) {
    double rate = std::abs(drive);
    for (const auto& tone : s.tones) rate += setup.gamma * std::abs(tone.v_pk);
    auto trace_max = [](const NoiseTrace& tr) {
      double m = 0.0;
      for (double v : tr.samples) m = std::max(m, std::abs(v));
      return m;
    };
    if (s.par) rate += setup.gamma * trace_max(*s.par);
    if (s.perp) rate += setup.gamma * trace_max(*s.perp);
    step = default_step(h0, rate, total);
    if (s.par || s.perp) step = setup.noise_dt / std::ceil(setup.noise_dt / step - 1e-9);
  }

  const auto ry_half = rotation(Axis::Y, kPi / 2);
  const auto ry_back = rotation(Axis::Y, -kPi / 2);
  QubitState state;
  return std::visit(
      overloaded{
          [&](const seq::Ramsey& r) {
            state = state.transformed(ry_half);
            state = evolve(state, h0, hv, r.t, step);
            state = state.transformed(r.slope_bias ? rotation(Axis::X, kPi / 2) : ry_back);
            return state.rho11();
          },
          [&](const seq::Rabi& r) { return evolve(state, h0, hv, r.t, step).rho11(); },
          [&](const seq::SpinEcho& e) {
            state = run_block(state.transformed(ry_half), ModulationFunction::echo(e.t), false, 0.0,
                              h0, hv, step);
            return state.transformed(ry_back).rho11();
          },
          [&](const seq::CP& c) {
            state = run_block(state.transformed(ry_half), ModulationFunction::cp(c.n, c.tau), false,
                              0.0, h0, hv, step);
            return state.transformed(ry_back).rho11();
          },
          [&](const seq::PDD& p) {
            state = run_block(state.transformed(ry_half), ModulationFunction::pdd(p.n, p.tau), true,
                              0.0, h0, hv, step);
            return state.transformed(ry_back).rho11();
          },
          [&](const seq::Correlation& c) {
            const auto y = ModulationFunction::cp(c.n, c.tau);
            const auto rx_half = rotation(Axis::X, kPi / 2);
            state = run_block(state.transformed(ry_half), y, false, 0.0, h0, hv, step);
            state = state.transformed(rx_half).dephased().transformed(rx_half);
            state = run_block(state, y, false, c.t1, h0, hv, step);
            return state.transformed(ry_back).rho11();
          },
          [&](const seq::SpinLock& l) {
            state = state.transformed(ry_half);
            state = evolve(state, h0, hv, l.t, step);
            return state.transformed(ry_back).rho11();
          },
          [&](const seq::T1& t1) { return evolve(state, h0, hv, t1.t, step).rho11(); }},
      spec);
}

}  // namespace

double ramsey_probability(double omega0, double t) {
  const double s = std::sin(0.5 * omega0 * t);
  return s * s;
}

double rabi_probability(double omega0, double omega1, double t) {
  const double w2 = omega0 * omega0 + omega1 * omega1;
  if (w2 == 0.0) return 0.0;
  const double s = std::sin(std::sqrt(w2) * t);
  return omega1 * omega1 / w2 * s * s;
}

double slope_variance_response(DetectionMode mode, double gamma, double v, double t) {
  if (mode == DetectionMode::Slope) return 0.5 * gamma * v * t;
  const double x = gamma * v * t;
  return 0.5 * (1.0 - std::exp(-0.5 * x * x));
}

double phase_integral(std::span<const ToneSpec> tones, const ModulationFunction& y, double gamma,
                      double t_start) {
  double sum = 0.0;
  for (const auto& tone : tones) {
    const double w = 2.0 * kPi * tone.f_ac;
    sum += tone.v_pk * y.integral_cos(w, tone.alpha + w * t_start);
  }
  return gamma * sum;
}

double spin_echo_phase(const ToneSpec& tone, double t, double gamma) {
  if (!(t > 0.0)) throw ArgumentError("spin_echo_phase: t must be > 0");
  return phase_integral(std::span(&tone, 1), ModulationFunction::echo(t), gamma);
}

double sequence_duration(const SequenceSpec& spec) {
  return std::visit(overloaded{[](const seq::Ramsey& s) { return s.t; },
                               [](const seq::Rabi& s) { return s.t; },
                               [](const seq::SpinEcho& s) { return s.t; },
                               [](const seq::CP& s) { return s.n * s.tau; },
                               [](const seq::PDD& s) { return s.n * s.tau; },
                               [](const seq::Correlation& s) { return s.t1 + s.n * s.tau; },
                               [](const seq::SpinLock& s) { return s.t; },
                               [](const seq::T1& s) { return s.t; }},
                    spec);
}

std::optional<ModulationFunction> sequence_modulation(const SequenceSpec& spec) {
  return std::visit(
      overloaded{
          [](const seq::Ramsey& s) -> std::optional<ModulationFunction> {
            return ModulationFunction::ramsey(s.t);
          },
          [](const seq::SpinEcho& s) -> std::optional<ModulationFunction> {
            return ModulationFunction::echo(s.t);
          },
          [](const seq::CP& s) -> std::optional<ModulationFunction> {
            return ModulationFunction::cp(s.n, s.tau);
          },
          [](const seq::PDD& s) -> std::optional<ModulationFunction> {
            return ModulationFunction::pdd(s.n, s.tau);
          },
          [](const seq::Correlation& s) -> std::optional<ModulationFunction> {
            return ModulationFunction::cp(s.n, s.tau);
          },
          [](const auto&) -> std::optional<ModulationFunction> { return std::nullopt; }},
      spec);
}

void validate_sequence(const SequenceSpec& spec) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(what) + " must be > 0");
  };
  std::visit(overloaded{[&](const seq::Ramsey& s) { positive(s.t, "ramsey t"); },
                        [&](const seq::Rabi& s) {
                          if (!(s.t >= 0.0)) throw ArgumentError("rabi t must be >= 0");
                          if (!std::isfinite(s.omega1)) throw ArgumentError("rabi omega1");
                        },
                        [&](const seq::SpinEcho& s) { positive(s.t, "echo t"); },
                        [&](const seq::CP& s) {
                          if (s.n < 1) throw ArgumentError("cp n must be >= 1");
                          positive(s.tau, "cp tau");
                        },
                        [&](const seq::PDD& s) {
                          if (s.n < 1) throw ArgumentError("pdd n must be >= 1");
                          positive(s.tau, "pdd tau");
                        },
                        [&](const seq::Correlation& s) {
                          if (s.n < 2 || s.n % 2 != 0)
                            throw ArgumentError("correlation n must be even and >= 2");
                          positive(s.tau, "correlation tau");
                          if (!(s.t1 >= s.n * s.tau))
                            throw ArgumentError("correlation t1 must be >= block length n*tau");
                        },
                        [&](const seq::SpinLock& s) {
                          positive(s.t, "spin lock t");
                          if (!std::isfinite(s.omega1) || !std::isfinite(s.delta_omega))
                            throw ArgumentError("spin lock frequencies must be finite");
                        },
                        [&](const seq::T1& s) { positive(s.t, "t1 t"); }},
             spec);
}

double multipulse_phase(std::span<const ToneSpec> tones, const SequenceSpec& spec, double gamma) {
  SequenceKind kind;
  int n;
  double tau;
  if (const auto* c = std::get_if<seq::CP>(&spec)) {
    kind = SequenceKind::CP;
    n = c->n;
    tau = c->tau;
  } else if (const auto* p = std::get_if<seq::PDD>(&spec)) {
    kind = SequenceKind::PDD;
    n = p->n;
    tau = p->tau;
  } else {
    throw UnsupportedError("multipulse_phase: sequence must be CP or PDD");
  }
  if (n == 0) return phase_integral(tones, ModulationFunction::ramsey(tau), gamma);
  const double t = n * tau;
  double phase = 0.0;
  for (const auto& tone : tones)
    phase += gamma * tone.v_pk * t * weighting_function(kind, tone.f_ac, tone.alpha, n, tau);
  return phase;
}

double multipulse_response(const SequenceSpec& spec, AmplitudeModel model, double gamma, double v,
                           double f_ac, double alpha, std::optional<double> t) {
  SequenceKind kind;
  int n;
  double tau;
  if (const auto* c = std::get_if<seq::CP>(&spec)) {
    kind = SequenceKind::CP;
    n = c->n;
    tau = c->tau;
  } else if (const auto* p = std::get_if<seq::PDD>(&spec)) {
    kind = SequenceKind::PDD;
    n = p->n;
    tau = p->tau;
  } else {
    throw UnsupportedError("multipulse_response: sequence must be CP or PDD");
  }
  const double time = t.value_or(n * tau);
  switch (model) {
    case AmplitudeModel::FixedPhase: {
      const double w = weighting_function(kind, f_ac, alpha, n, tau);
      return 0.5 * (1.0 - std::cos(w * gamma * v * time));
    }
    case AmplitudeModel::RandomPhase: {
      const double wbar = std::sqrt(averaged_weighting(kind, f_ac, n, tau));
      return 0.5 * (1.0 - std::cyl_bessel_j(0.0, 2.0 * wbar * gamma * v * time));
    }
    case AmplitudeModel::RandomAmplitude: {
      const double w2 = averaged_weighting(kind, f_ac, n, tau);
      const double k = harmonic_order(f_ac, tau);
      const double z = w2 * gamma * gamma * v * v * time * time / (2.0 * k * k);
      // e^{−z} I0(z) without overflow for large z.
      const double scaled = z < 700.0 ? std::exp(-z) * std::cyl_bessel_i(0.0, z)
                                      : 1.0 / std::sqrt(2.0 * kPi * z);
      return 0.5 * (1.0 - scaled);
    }
  }
  throw ArgumentError("multipulse_response: unknown amplitude model");
}

double walsh_function(std::size_t n, double x) {
  if (!(x >= 0.0 && x < 1.0)) throw ArgumentError("walsh_function: x must lie in [0, 1)");
  int exponent = 0;
  for (int k = 0; (n >> k) != 0; ++k) {
    const std::size_t bit_k = (n >> k) & 1U;
    const std::size_t bit_k1 = (n >> (k + 1)) & 1U;
    const auto digit = static_cast<std::size_t>(std::floor(x * std::ldexp(1.0, k + 1))) & 1U;
    exponent += static_cast<int>((bit_k ^ bit_k1) & digit);
  }
  return exponent % 2 == 0 ? 1.0 : -1.0;
}

std::vector<double> walsh_coefficients(const std::function<double(double)>& signal, std::size_t n,
                                       double t) {
  if (n == 0 || (n & (n - 1)) != 0) throw ArgumentError("walsh_coefficients: N must be 2^j");
  if (!(t > 0.0)) throw ArgumentError("walsh_coefficients: t must be > 0");
  std::vector<double> slot(n);
  const double width = t / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j)
    slot[j] = integrate_segment(signal, static_cast<double>(j) * width,
                                static_cast<double>(j + 1) * width) /
              width;
  std::vector<double> coeffs(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      sum += slot[j] * walsh_function(k, (static_cast<double>(j) + 0.5) / static_cast<double>(n));
    coeffs[k] = sum / static_cast<double>(n);
  }
  return coeffs;
}

WalshSeries::WalshSeries(std::vector<double> coefficients, double t)
    : coefficients_(std::move(coefficients)), t_(t) {
  const std::size_t n = coefficients_.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ArgumentError("walsh series: N must be 2^j");
  if (!(t > 0.0)) throw ArgumentError("walsh series: t must be > 0");
  slots_.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) slots_[j] += coefficients_[k] * walsh_function(k, x);
  }
}

double WalshSeries::operator()(double t_prime) const {
  const auto n = static_cast<double>(slots_.size());
  const double j = std::clamp(std::floor(t_prime / t_ * n), 0.0, n - 1.0);
  return slots_[static_cast<std::size_t>(j)];
}

WalshSeries walsh_reconstruct(std::vector<double> coefficients, double t) {
  return WalshSeries(std::move(coefficients), t);
}

double correlation_response(double phi, double f_ac, double t1, CorrelationPhase phase) {
  const double arg = 2.0 * kPi * f_ac * t1;
  if (phase.random) return 0.5 * (1.0 - 0.5 * phi * phi * std::cos(arg));
  return 0.5 * (1.0 - std::sin(phi * std::cos(phase.alpha)) *
                          std::sin(phi * std::cos(phase.alpha + arg)));
}

double continuous_sampling_estimate(const std::function<double(double)>& record, double t_s,
                                    double duration) {
  if (!(t_s > 0.0) || !(duration >= 8.0 * t_s))
    throw ArgumentError("continuous_sampling_estimate: need t_s > 0 and duration >= 8 t_s");
  const auto n = static_cast<std::size_t>(std::floor(duration / t_s + 1e-9));
  std::vector<double> x(n);
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = record(static_cast<double>(j) * t_s);
    mean += x[j];
  }
  mean /= static_cast<double>(n);
  double spread = 0.0;
  for (auto& v : x) {
    v -= mean;
    spread = std::max(spread, std::abs(v));
  }
  if (spread <= 1e-12 * (1.0 + std::abs(mean))) return 0.0;

  const auto spectrum = fft::forward_real(x);
  std::size_t peak = 1;
  double total = 0.0;
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    total += std::norm(spectrum[k]);
    if (std::norm(spectrum[k]) > std::norm(spectrum[peak])) peak = k;
  }
  const double others = (total - std::norm(spectrum[peak])) /
                        std::max<double>(1.0, static_cast<double>(spectrum.size() - 2));
  if (std::norm(spectrum[peak]) < 5.0 * others)
    throw EstimationError("continuous sampling: no spectral peak above the noise floor");
  return static_cast<double>(peak) / (static_cast<double>(n) * t_s);
}

// --------------------------------------------------------------------------

void ProtocolResult::write_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"sweep_value", "p_hat", "sigma_p", "n_trials"};
  for (std::size_t i = 0; i < sweep.size(); ++i)
    table.add_row({sweep[i], p_hat[i], sigma_p[i], static_cast<double>(n_trials[i])});
  table.write(path);
}

double simulate_cycle(const SequenceSpec& spec, const ProtocolSetup& setup, RandomStream& rng) {
  const TrialSignal s = draw_signal(spec, setup, rng);
  const double p = fast_path_applies(spec, setup) ? fast_cycle(spec, setup, s)
                                                  : full_cycle(spec, setup, s);
  return std::clamp(p, 0.0, 1.0);
}

ProtocolResult simulate_protocol(std::span<const SequenceSpec> points,
                                 std::span<const double> sweep_values, const ProtocolSetup& setup,
                                 std::uint64_t seed) {
  if (points.size() != sweep_values.size())
    throw ArgumentError("simulate_protocol: one sweep value per point required");
  if (setup.trials == 0) throw ArgumentError("simulate_protocol: trials must be >= 1");
  if (!(setup.gamma > 0.0)) throw ArgumentError("simulate_protocol: gamma must be > 0");
  setup.readout.validate();
  const bool noisy = (setup.noise_par && !setup.noise_par->is_zero()) ||
                     (setup.noise_perp && !setup.noise_perp->is_zero());
  if (noisy && !(setup.noise_dt > 0.0))
    throw ArgumentError("simulate_protocol: noise_dt must be > 0 when noise is present");
  for (const auto& spec : points) validate_sequence(spec);

  ProtocolResult result;
  result.seed = seed;
  constexpr std::size_t kBlock = 64;
  for (std::size_t j = 0; j < points.size(); ++j) {
    std::vector<double> readings(setup.trials);
    const std::size_t blocks = (setup.trials + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
      const std::size_t end = std::min(setup.trials, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        RandomStream rng(derive_seed(seed, j, i));
        const double p = simulate_cycle(points[j], setup, rng);
        readings[i] = readout_sample(p, setup.readout, rng);
      }
    });
    const auto est = estimate_probability(readings, setup.readout);
    result.sweep.push_back(sweep_values[j]);
    result.p_hat.push_back(est.p_hat);
    result.sigma_p.push_back(est.sigma_p);
    result.n_trials.push_back(setup.trials);
  }
  return result;
}

}  // namespace qsense
