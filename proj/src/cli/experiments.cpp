#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/tools/minima.hpp>

#include "qsense/cli/runner.hpp"
#include "qsense/common/csv.hpp"
#include "qsense/common/errors.hpp"
#include "qsense/ensemble/ensemble.hpp"
#include "qsense/estimation/estimation.hpp"
#include "qsense/estimation/phase_estimation.hpp"
#include "qsense/filter/filter.hpp"
#include "qsense/protocols/protocols.hpp"

namespace qsense::cli {
namespace fs = std::filesystem;
namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Schema helpers

ParamSpec real(std::string name, Json fallback, std::string desc) {
  ParamSpec p;
  p.name = std::move(name);
  p.fallback = std::move(fallback);
  p.description = std::move(desc);
  return p;
}

ParamSpec positive(std::string name, Json fallback, std::string desc) {
  auto p = real(std::move(name), std::move(fallback), std::move(desc));
  p.min = 0.0;
  p.min_exclusive = true;
  return p;
}

ParamSpec nonneg(std::string name, Json fallback, std::string desc) {
  auto p = real(std::move(name), std::move(fallback), std::move(desc));
  p.min = 0.0;
  return p;
}

ParamSpec fraction(std::string name, Json fallback, std::string desc) {
  auto p = positive(std::move(name), std::move(fallback), std::move(desc));
  p.max = 1.0;
  return p;
}

ParamSpec count(std::string name, Json fallback, double lo, double hi, std::string desc) {
  auto p = real(std::move(name), std::move(fallback), std::move(desc));
  p.type = ParamType::Integer;
  p.min = lo;
  p.max = hi;
  return p;
}

ParamSpec choice(std::string name, Json fallback, std::vector<std::string> choices,
                 std::string desc) {
  auto p = real(std::move(name), std::move(fallback), std::move(desc));
  p.type = ParamType::Choice;
  p.choices = std::move(choices);
  return p;
}

ParamSpec boolean(std::string name, bool fallback, std::string desc) {
  auto p = real(std::move(name), fallback, std::move(desc));
  p.type = ParamType::Boolean;
  return p;
}

const Json kRequired;

void require(bool ok, const std::string& key, const std::string& msg,
             std::vector<ValidationIssue>& issues) {
  if (!ok) issues.push_back({"parameters." + key, msg});
}

double get(const Json& p, const char* key) { return p.at(key).get<double>(); }

// ---------------------------------------------------------------------------
// Run helpers

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  auto v = linspace(std::log(a), std::log(b), n);
  for (auto& x : v) x = std::exp(x);
  return v;
}

void write_table(const fs::path& stage, const std::string& name, std::vector<std::string> columns,
                 const std::vector<std::vector<double>>& cols) {
  CsvTable t;
  t.columns = std::move(columns);
  for (std::size_t i = 0; i < cols.front().size(); ++i) {
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(c[i]);
    t.add_row(std::move(row));
  }
  t.write(stage / (name + ".csv"));
}

double max_abs_z(const std::vector<double>& p_hat, const std::vector<double>& p_ref, std::size_t n,
                 const ReadoutModel& readout) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p_hat.size(); ++i) {
    const double d = std::abs(p_hat[i] - p_ref[i]);
    const double s = predicted_sigma_p(p_ref[i], n, readout);
    if (s > 0.0) worst = std::max(worst, d / s);
    else if (d > 1e-12) worst = std::numeric_limits<double>::infinity();
  }
  return worst;
}

// Binomial estimate of p from n shots, one stream per index.
double sample_fraction(double p, std::size_t n, std::uint64_t seed, std::size_t index) {
  RandomStream rng(derive_seed(seed, index));
  std::binomial_distribution<long long> dist(static_cast<long long>(n), std::clamp(p, 0.0, 1.0));
  return static_cast<double>(dist(rng.engine())) / static_cast<double>(n);
}

double alias_frequency(double f, double t_s) {
  const double fs = 1.0 / t_s;
  return std::abs(f - std::round(f / fs) * fs);
}

Json sweep_summary(double z, std::size_t points) {
  return {{"points", points}, {"max_abs_z", z}, {"within_5_sigma", z <= 5.0}};
}

// ---------------------------------------------------------------------------
// Experiments

Json run_ramsey(const ExperimentConfig& c, const fs::path& stage) {
  const auto ts = linspace(c.number("t_start"), c.number("t_stop"), c.integer("points"));
  std::vector<SequenceSpec> specs;
  for (double t : ts) specs.push_back(seq::Ramsey{t});
  ProtocolSetup setup;
  setup.omega0 = c.number("omega0");
  setup.gamma = c.number("gamma");
  setup.readout = ReadoutModel::ideal(c.number("beta"));
  setup.trials = c.trials;
  const auto r = simulate_protocol(specs, ts, setup, c.seed);
  std::vector<double> p_an;
  for (double t : ts) p_an.push_back(setup.readout.beta * ramsey_probability(setup.omega0, t));
  write_table(stage, "ramsey", {"t_s", "p_hat", "sigma_p", "p_analytic"},
              {ts, r.p_hat, r.sigma_p, p_an});
  return sweep_summary(max_abs_z(r.p_hat, p_an, c.trials, setup.readout), ts.size());
}

Json run_rabi(const ExperimentConfig& c, const fs::path& stage) {
  const auto ts = linspace(c.number("t_stop") / c.integer("points"), c.number("t_stop"),
                           c.integer("points"));
  const double w0 = c.number("omega0"), w1 = c.number("omega1");
  std::vector<SequenceSpec> specs;
  for (double t : ts) specs.push_back(seq::Rabi{t, w1});
  ProtocolSetup setup;
  setup.omega0 = w0;
  setup.trials = c.trials;
  const auto r = simulate_protocol(specs, ts, setup, c.seed);
  std::vector<double> p_an;
  for (double t : ts) p_an.push_back(rabi_probability(0.5 * w0, 0.5 * w1, t));
  write_table(stage, "rabi", {"t_s", "p_hat", "sigma_p", "p_analytic"}, {ts, r.p_hat, r.sigma_p, p_an});
  auto s = sweep_summary(max_abs_z(r.p_hat, p_an, c.trials, setup.readout), ts.size());
  s["generalized_rabi_frequency"] = std::hypot(w0, w1);
  s["max_transfer"] = w1 * w1 / (w0 * w0 + w1 * w1);
  return s;
}

AmplitudeModel amplitude_model(const std::string& s) {
  if (s == "random_phase") return AmplitudeModel::RandomPhase;
  if (s == "random_amplitude") return AmplitudeModel::RandomAmplitude;
  return AmplitudeModel::FixedPhase;
}

SequenceSpec pulse_sequence(const std::string& kind, int n, double tau) {
  if (kind == "pdd") return seq::PDD{n, tau};
  return seq::CP{n, tau};
}

Json run_multipulse(const ExperimentConfig& c, const fs::path& stage) {
  const auto fs_ = linspace(c.number("f_start"), c.number("f_stop"), c.integer("points"));
  const int n = static_cast<int>(c.integer("n"));
  const double tau = c.number("tau"), gamma = c.number("gamma"), v = c.number("v");
  const double alpha = c.number("alpha");
  const auto model = amplitude_model(c.choice("model"));
  const SequenceSpec spec = pulse_sequence(c.choice("sequence"), n, tau);

  ProtocolSetup setup;
  setup.gamma = gamma;
  setup.tone_model = model;
  setup.trials = c.trials;
  std::vector<double> p_hat, sigma, p_an;
  for (std::size_t j = 0; j < fs_.size(); ++j) {
    // Random phase: v is the rms, the tone peak is √2 v.
    const double v_pk = model == AmplitudeModel::RandomPhase ? std::sqrt(2.0) * v : v;
    setup.tones = {ToneSpec{v_pk, fs_[j], alpha}};
    const auto r = simulate_protocol(std::span(&spec, 1), std::span(&fs_[j], 1), setup,
                                     derive_seed(c.seed, j));
    p_hat.push_back(r.p_hat[0]);
    sigma.push_back(r.sigma_p[0]);
    p_an.push_back(multipulse_response(spec, model, gamma, v, fs_[j], alpha));
  }
  write_table(stage, "multipulse", {"f_ac_hz", "p_hat", "sigma_p", "p_analytic"},
              {fs_, p_hat, sigma, p_an});
  auto s = sweep_summary(max_abs_z(p_hat, p_an, c.trials, setup.readout), fs_.size());
  const auto peak = std::max_element(p_an.begin(), p_an.end()) - p_an.begin();
  s["peak_f_hz"] = fs_[static_cast<std::size_t>(peak)];
  s["first_harmonic_hz"] = 1.0 / (2.0 * tau);
  return s;
}

Json run_correlation(const ExperimentConfig& c, const fs::path& stage) {
  const int n = static_cast<int>(c.integer("n"));
  const double tau = c.number("tau"), gamma = c.number("gamma");
  const double v = c.number("v_pk"), f = c.number("f_ac"), alpha = c.number("alpha");
  const double step = c.number("t1_step"), t1_0 = c.number("t1_start");
  const auto points = static_cast<std::size_t>(c.integer("points"));
  const bool random = c.flag("random_phase");

  std::vector<double> t1s;
  std::vector<SequenceSpec> specs;
  for (std::size_t i = 0; i < points; ++i) {
    t1s.push_back(t1_0 + step * static_cast<double>(i));
    specs.push_back(seq::Correlation{n, tau, t1s.back()});
  }
  ProtocolSetup setup;
  setup.gamma = gamma;
  setup.tones = {ToneSpec{v, f, alpha}};
  setup.tone_model = random ? AmplitudeModel::RandomPhase : AmplitudeModel::FixedPhase;
  setup.trials = c.trials;
  const auto r = simulate_protocol(specs, t1s, setup, c.seed);

  const SequenceSpec block = seq::CP{n, tau};
  auto fixed = [&](double a, double t1) {
    const ToneSpec first{v, f, a}, second{v, f, a + 2.0 * kPi * f * t1};
    const double p1 = multipulse_phase(std::span(&first, 1), block, gamma);
    const double p2 = multipulse_phase(std::span(&second, 1), block, gamma);
    return 0.5 * (1.0 - std::sin(p1) * std::sin(p2));
  };
  std::vector<double> p_an;
  for (double t1 : t1s) {
    if (!random) {
      p_an.push_back(fixed(alpha, t1));
      continue;
    }
    constexpr int kPhases = 720;
    double mean = 0.0;
    for (int k = 0; k < kPhases; ++k) mean += fixed(2.0 * kPi * k / kPhases, t1);
    p_an.push_back(mean / kPhases);
  }
  write_table(stage, "correlation", {"t1_s", "p_hat", "sigma_p", "p_analytic"},
              {t1s, r.p_hat, r.sigma_p, p_an});
  auto s = sweep_summary(max_abs_z(r.p_hat, p_an, c.trials, setup.readout), points);
  const double est = continuous_sampling_estimate(
      [&](double t) {
        const auto i = static_cast<std::size_t>(std::lround(t / step));
        return r.p_hat[std::min(i, points - 1)];
      },
      step, static_cast<double>(points) * step);
  s["f_estimate_hz"] = est;
  s["f_expected_hz"] = alias_frequency(f, step);
  s["resolution_hz"] = 1.0 / (static_cast<double>(points) * step);
  return s;
}

Json run_walsh(const ExperimentConfig& c, const fs::path& stage) {
  const double t = c.number("t");
  const ToneSpec tone{c.number("v_pk"), c.number("f_ac"), c.number("alpha")};
  const auto order = static_cast<std::size_t>(c.integer("order"));
  auto signal = [&](double x) { return sample_waveform(std::span(&tone, 1), x); };
  const auto coeffs = walsh_coefficients(signal, order, t);
  const auto series = walsh_reconstruct(coeffs, t);

  const auto grid = static_cast<std::size_t>(c.integer("grid"));
  double err2 = 0.0, power = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * t / static_cast<double>(grid);
    const double d = series(x) - signal(x);
    err2 += d * d;
    power += signal(x) * signal(x);
  }
  double captured = 0.0;
  for (double v : coeffs) captured += v * v;
  std::vector<double> idx;
  for (std::size_t i = 0; i < order; ++i) idx.push_back(static_cast<double>(i));
  write_table(stage, "walsh", {"n", "coefficient"}, {idx, coeffs});
  return {{"order", order},
          {"rms_error", std::sqrt(err2 / static_cast<double>(grid))},
          {"captured_power_fraction", power > 0.0 ? captured / (power / static_cast<double>(grid)) : 0.0}};
}

Json run_continuous_sampling(const ExperimentConfig& c, const fs::path& stage) {
  const double ts = c.number("t_s"), t_int = c.number("t_int"), gamma = c.number("gamma");
  const ToneSpec tone{c.number("v_pk"), c.number("f_signal"), 0.0};
  const auto n = static_cast<std::size_t>(c.integer("samples"));
  const auto y = ModulationFunction::ramsey(t_int);
  std::vector<double> times, p_hat, p_an;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = ts * static_cast<double>(k);
    const double phase = phase_integral(std::span(&tone, 1), y, gamma, t);
    const double p = 0.5 * (1.0 + std::sin(phase));
    times.push_back(t);
    p_an.push_back(p);
    p_hat.push_back(sample_fraction(p, c.trials, c.seed, k));
  }
  write_table(stage, "continuous_sampling", {"time_s", "p_hat", "p_analytic"}, {times, p_hat, p_an});
  const double est = continuous_sampling_estimate(
      [&](double t) { return p_hat[std::min(static_cast<std::size_t>(std::lround(t / ts)), n - 1)]; },
      ts, static_cast<double>(n) * ts);
  const double expected = alias_frequency(tone.f_ac, ts);
  return {{"f_estimate_hz", est},
          {"f_expected_hz", expected},
          {"resolution_hz", 1.0 / (static_cast<double>(n) * ts)},
          {"abs_error_hz", std::abs(est - expected)}};
}

SpectralDensity lorentzian_from(const ExperimentConfig& c) {
  return SpectralDensity::lorentzian(c.number("s0"), c.number("omega_c"), c.number("half_width"));
}

Json run_noise_spectroscopy(const ExperimentConfig& c, const fs::path& stage) {
  const auto psd = lorentzian_from(c);
  psd.validate();
  const double gamma = c.number("gamma");
  const int n = static_cast<int>(c.integer("n"));
  // Descending τ gives ascending node frequency π/τ.
  auto taus = logspace(c.number("tau_max"), c.number("tau_min"), c.integer("points"));
  ProtocolSetup setup;
  setup.gamma = gamma;
  setup.noise_par = psd;
  setup.noise_dt = c.number("noise_dt");
  setup.trials = c.trials;

  std::vector<ChiMeasurement> meas;
  std::vector<double> p_hat, sigma;
  for (std::size_t j = 0; j < taus.size(); ++j) {
    const SequenceSpec spec = seq::CP{n, taus[j]};
    const double t = n * taus[j];
    const auto r = simulate_protocol(std::span(&spec, 1), std::span(&t, 1), setup, derive_seed(c.seed, j));
    const double coherence = 1.0 - 2.0 * r.p_hat[0];
    if (!(coherence > 0.0))
      throw EstimationError("noise_spectroscopy: coherence fully decayed at tau = " +
                            format_double(taus[j]) + "; shorten tau or reduce n");
    meas.push_back({taus[j], n, -std::log(coherence)});
    p_hat.push_back(r.p_hat[0]);
    sigma.push_back(r.sigma_p[0]);
  }
  const auto rec = reconstruct_psd(meas, gamma, static_cast<int>(c.integer("k_max")));

  std::vector<double> chi, s_true, rel;
  double mean_rel = 0.0;
  for (std::size_t j = 0; j < meas.size(); ++j) {
    chi.push_back(meas[j].chi);
    s_true.push_back(psd(rec.omega[j]));
    rel.push_back((rec.value[j] - s_true[j]) / s_true[j]);
    mean_rel += std::abs(rel.back()) / static_cast<double>(meas.size());
  }
  write_table(stage, "noise_spectroscopy",
              {"tau_s", "omega_rad_s", "p_hat", "sigma_p", "chi", "s_recovered", "s_true", "rel_error"},
              {taus, rec.omega, p_hat, sigma, chi, rec.value, s_true, rel});
  double band_rec = 0.0, band_true = 0.0;
  for (std::size_t j = 0; j < meas.size(); ++j) {
    band_rec += rec.value[j];
    band_true += s_true[j];
  }
  return {{"omega", rec.omega},
          {"s_recovered", rec.value},
          {"s_true", s_true},
          {"rel_error", rel},
          {"mean_abs_rel_error", mean_rel},
          {"band_rel_error", (band_rec - band_true) / band_true},
          {"condition", rec.condition},
          {"regularized", rec.regularized},
          {"warning", rec.warning}};
}

Json run_relaxometry(const ExperimentConfig& c, const fs::path& stage) {
  const auto psd = lorentzian_from(c);
  psd.validate();
  const double gamma = c.number("gamma"), w0 = c.number("omega0");
  const auto ts = linspace(c.number("t_stop") / c.integer("points"), c.number("t_stop"),
                           c.integer("points"));
  std::vector<SequenceSpec> specs;
  for (double t : ts) specs.push_back(seq::T1{t});
  ProtocolSetup setup;
  setup.omega0 = w0;
  setup.gamma = gamma;
  setup.noise_perp = psd;
  setup.noise_dt = c.number("noise_dt");
  setup.trials = c.trials;
  const auto r = simulate_protocol(specs, ts, setup, c.seed);

  auto model = [](double rate, double t) { return 0.5 * (1.0 - std::exp(-rate * t)); };
  auto cost = [&](double log_rate) {
    double s = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double d = r.p_hat[i] - model(std::exp(log_rate), ts[i]);
      s += d * d;
    }
    return s;
  };
  const double t_stop = ts.back();
  const auto [log_rate, residual] =
      boost::math::tools::brent_find_minima(cost, std::log(1e-4 / t_stop), std::log(1e4 / t_stop), 26);
  const double fit = std::exp(log_rate);
  const double golden = relaxation_rate(RelaxationKind::T1, SpectralDensity::zero(), psd, gamma, w0);

  std::vector<double> p_fit, p_gold;
  for (double t : ts) {
    p_fit.push_back(model(fit, t));
    p_gold.push_back(model(golden, t));
  }
  write_table(stage, "relaxometry", {"t_s", "p_hat", "sigma_p", "p_fit", "p_golden_rule"},
              {ts, r.p_hat, r.sigma_p, p_fit, p_gold});
  return {{"gamma_fit", fit},
          {"gamma_golden_rule", golden},
          {"rel_error", (fit - golden) / golden},
          {"residual", residual}};
}

Json run_sensitivity(const ExperimentConfig& c, const fs::path& stage) {
  SensitivityInputs in;
  in.gamma = c.number("gamma");
  in.contrast = c.number("contrast");
  in.t_chi = c.number("t_chi");
  in.t_m = c.number("t_m");
  in.exponent = c.number("exponent");
  in.order = static_cast<int>(c.integer("order"));
  in.validate();
  const auto ts = logspace(c.number("t_min_ratio") * in.t_chi, c.number("t_max_ratio") * in.t_chi,
                           c.integer("points"));
  std::vector<double> v;
  for (double t : ts) v.push_back(minimum_signal_at(in, t));
  write_table(stage, "sensitivity", {"t_s", "v_min"}, {ts, v});
  const auto opt = minimum_detectable_signal(in);
  Json s{{"t_opt", opt.t_opt}, {"v_min", opt.v_min}, {"interior", opt.interior}, {"note", opt.note}};
  if (in.order == 1) {
    s["v_min_closed_form"] = vmin_slope_optimal(in.gamma, in.contrast, in.t_chi);
    s["t_opt_closed_form"] = in.t_chi / 2.0;
  } else {
    s["v_min_closed_form"] = vmin_variance(in.gamma, in.contrast, in.t_chi);
    s["psd_min"] = psd_min(in.gamma, in.contrast, in.t_chi);
  }
  s["closed_form_applies"] = in.exponent == 1.0 && in.t_m == 0.0;
  return s;
}

Json run_allan(const ExperimentConfig& c, const fs::path& stage) {
  const double ts = c.number("t_s");
  const auto n = static_cast<std::size_t>(c.integer("samples"));
  const double white = c.number("white_sigma"), phase = c.number("phase_sigma");
  const double drift = c.number("drift");
  RandomStream rng(derive_seed(c.seed, 0));
  // Time-error series: integrated white frequency noise plus drift, with
  // white phase noise on top.
  AllanSeries series;
  series.t_s = ts;
  double x = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = white * rng.normal() + drift * ts * static_cast<double>(j);
    series.samples.push_back(x + phase * rng.normal());
    x += y * ts;
  }
  std::vector<double> tau, avar, ms;
  for (std::size_t m = 1; 4 * m <= n; m *= 2) {
    ms.push_back(static_cast<double>(m));
    tau.push_back(ts * static_cast<double>(m));
    avar.push_back(allan_variance(series, m));
  }
  write_table(stage, "allan", {"tau_s", "allan_variance", "m"}, {tau, avar, ms});
  const auto fit = fit_power_law(tau, avar);
  return {{"points", tau.size()}, {"slope", fit.exponent}, {"prefactor", fit.prefactor}};
}

PhaseEstimator phase_estimator(const std::string& s) {
  if (s == "bayesian") return PhaseEstimator::Bayesian;
  if (s == "fixed_time") return PhaseEstimator::FixedTime;
  return PhaseEstimator::Adaptive;
}

Json run_phase_estimation(const ExperimentConfig& c, const fs::path& stage) {
  std::vector<int> bits;
  for (auto m = c.integer("bits_min"); m <= c.integer("bits_max"); ++m) bits.push_back(static_cast<int>(m));
  ScalingOptions opt;
  opt.contrast = c.number("contrast");
  opt.g = static_cast<int>(c.integer("g"));
  opt.f = static_cast<int>(c.integer("f"));
  opt.trials = c.trials;
  opt.seed = c.seed;
  const auto bench = phase_estimation_scaling(phase_estimator(c.choice("estimator")), bits, opt);
  bench.write_csv(stage / "phase_estimation.csv");
  const double decades =
      std::log10(bench.points.back().total_time / bench.points.front().total_time);
  return {{"estimator", to_string(bench.estimator)},
          {"exponent", bench.exponent},
          {"decades", decades},
          {"points", bench.points.size()}};
}

Json run_dynamic_range(const ExperimentConfig& c, const fs::path& stage) {
  const double gamma = c.number("gamma"), t0 = c.number("t0"), contrast = c.number("contrast");
  const double t2 = c.number("t2star");
  const int g = static_cast<int>(c.integer("g")), f = static_cast<int>(c.integer("f"));
  const auto totals = logspace(c.number("total_min"), c.number("total_max"), c.integer("points"));
  std::vector<double> rf, rs, vf, vs;
  for (double total : totals) {
    const auto a = dynamic_range_fixed(gamma, t2, contrast, t2, total);
    const auto b = dynamic_range_schedule(gamma, t0, contrast, total, g, f);
    rf.push_back(a.ratio);
    rs.push_back(b.ratio);
    vf.push_back(a.v_min);
    vs.push_back(b.v_min);
  }
  write_table(stage, "dynamic_range",
              {"total_time_s", "ratio_fixed", "ratio_schedule", "v_min_fixed", "v_min_schedule"},
              {totals, rf, rs, vf, vs});
  Json s{{"points", totals.size()}};
  if (totals.size() >= 2) {
    s["exponent_fixed"] = fit_power_law(totals, rf).exponent;
    s["exponent_schedule"] = fit_power_law(totals, rs).exponent;
  }
  return s;
}

Json run_ghz(const ExperimentConfig& c, const fs::path& stage) {
  const int m = static_cast<int>(c.integer("qubits"));
  const double w0 = c.number("omega0"), gamma = c.number("gamma");
  const auto points = static_cast<std::size_t>(c.integer("points"));
  const double dt = c.number("t_stop") / static_cast<double>(points);
  std::vector<double> ts, p_hat, sigma, p_an;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = dt * static_cast<double>(i);
    const double p = ghz_probability(m, w0, t);
    ts.push_back(t);
    p_an.push_back(p);
    p_hat.push_back(sample_fraction(p, c.trials, c.seed, i));
    sigma.push_back(std::sqrt(p_hat.back() * (1.0 - p_hat.back()) / static_cast<double>(c.trials)));
  }
  write_table(stage, "ghz", {"t_s", "p_hat", "sigma_p", "p_analytic"}, {ts, p_hat, sigma, p_an});
  const double est = continuous_sampling_estimate(
      [&](double t) { return p_hat[std::min(static_cast<std::size_t>(std::lround(t / dt)), points - 1)]; },
      dt, static_cast<double>(points) * dt);
  const double single = w0 / (2.0 * kPi);
  const double t2 = c.number("t2"), total = c.number("total_time");
  const auto un = ensemble_optimum(m, t2, total, gamma, EnsembleKind::Uncorrelated);
  const auto gh = ensemble_optimum(m, t2, total, gamma, EnsembleKind::Ghz);
  const double t_ref = 0.5 * t2;
  const double ratio = qcrb_scaling(m, 1, t_ref, 0.0, gamma, EnsembleKind::Uncorrelated) /
                       qcrb_scaling(m, 1, t_ref, 0.0, gamma, EnsembleKind::Ghz);
  return {{"fringe_frequency_hz", est},
          {"expected_frequency_hz", m * single},
          {"frequency_ratio", est / single},
          {"resolution_hz", 1.0 / (static_cast<double>(points) * dt)},
          {"qcrb_ratio", ratio},
          {"uncorrelated_t_opt", un.t_opt},
          {"uncorrelated_delta_v", un.delta_v},
          {"ghz_t_opt", gh.t_opt},
          {"ghz_delta_v", gh.delta_v}};
}

Json run_squeezing(const ExperimentConfig& c, const fs::path& stage) {
  const int m = static_cast<int>(c.integer("qubits"));
  const auto chis = linspace(c.number("chi_t_min"), c.number("chi_t_max"), c.integer("points"));
  const auto scan = twisting_scan(m, chis);
  scan.write_csv(stage / "squeezing.csv");
  const double css_xi = metrology_squeezing(css(m, Eigen::Vector3d::UnitX())).xi_r;
  return {{"min_xi_r", scan.xi_r[scan.best]},
          {"best_chi_t", scan.chi_t[scan.best]},
          {"best_angle", scan.angle[scan.best]},
          {"css_xi_r", css_xi}};
}

// ---------------------------------------------------------------------------
// Registry

std::vector<ExperimentEntry> build_registry() {
  std::vector<ExperimentEntry> r;

  r.push_back({"ramsey",
               "Ramsey fringe sweep over free-evolution time against sin^2(omega0 t/2)",
               {nonneg("omega0", kRequired, "detuning (rad/s)"),
                positive("gamma", 1.0, "coupling constant"),
                positive("t_start", 0.1, "first evolution time (s)"),
                positive("t_stop", 10.0, "last evolution time (s)"),
                count("points", 20, 2, 100000, "sweep points"),
                fraction("beta", 1.0, "initialization fidelity")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(get(p, "t_stop") > get(p, "t_start"), "t_stop", "must exceed t_start", out);
               },
               run_ramsey});

  r.push_back({"rabi",
               "Driven Rabi oscillation against the generalized Rabi formula",
               {real("omega0", 0.0, "detuning (rad/s)"),
                positive("omega1", kRequired, "drive strength (rad/s)"),
                positive("t_stop", 10.0, "last drive time (s)"),
                count("points", 20, 2, 100000, "sweep points")},
               true, nullptr, run_rabi});

  r.push_back({"multipulse",
               "AC magnetometry frequency sweep with a CP or PDD sequence",
               {choice("sequence", "cp", {"cp", "pdd"}, "pulse sequence"),
                count("n", kRequired, 2, 100000, "number of pi pulses (even)"),
                positive("tau", kRequired, "pulse spacing (s)"),
                positive("gamma", 1.0, "coupling constant"),
                nonneg("v", kRequired, "tone amplitude: peak for fixed_phase, rms otherwise"),
                real("alpha", 0.0, "tone phase (rad), fixed_phase only"),
                choice("model", "fixed_phase", {"fixed_phase", "random_phase", "random_amplitude"},
                       "tone phase/amplitude model"),
                positive("f_start", 0.05, "first tone frequency (Hz)"),
                positive("f_stop", 1.0, "last tone frequency (Hz)"),
                count("points", 20, 2, 100000, "sweep points")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(p.at("n").get<long long>() % 2 == 0, "n", "must be even", out);
                 require(get(p, "f_stop") > get(p, "f_start"), "f_stop", "must exceed f_start", out);
               },
               run_multipulse});

  r.push_back({"correlation",
               "Correlation spectroscopy: two CP blocks separated by a swept delay t1",
               {count("n", 2, 2, 100000, "pi pulses per block (even)"),
                positive("tau", kRequired, "pulse spacing (s)"),
                positive("gamma", 1.0, "coupling constant"),
                nonneg("v_pk", kRequired, "tone peak amplitude"),
                positive("f_ac", kRequired, "tone frequency (Hz)"),
                real("alpha", 0.0, "tone phase (rad)"),
                positive("t1_start", kRequired, "first block separation (s), at least n tau"),
                positive("t1_step", kRequired, "separation increment (s)"),
                count("points", 64, 8, 100000, "sweep points"),
                boolean("random_phase", false, "draw the tone phase per trial")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 const auto n = p.at("n").get<long long>();
                 require(n % 2 == 0, "n", "must be even", out);
                 require(get(p, "t1_start") >= static_cast<double>(n) * get(p, "tau"), "t1_start",
                         "must be >= n*tau so the blocks do not overlap", out);
               },
               run_correlation});

  r.push_back({"walsh",
               "Walsh decomposition of a tone over one acquisition window",
               {positive("t", kRequired, "window length (s)"),
                count("order", 16, 1, 65536, "number of Walsh coefficients (power of two)"),
                real("v_pk", 1.0, "tone amplitude"),
                positive("f_ac", kRequired, "tone frequency (Hz)"),
                real("alpha", 0.0, "tone phase (rad)"),
                count("grid", 1024, 16, 10000000, "points for the reconstruction error")},
               false,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 const auto o = p.at("order").get<long long>();
                 require((o & (o - 1)) == 0, "order", "must be a power of two", out);
               },
               run_walsh});

  r.push_back({"continuous_sampling",
               "Repeated slope-biased Ramsey samples of a slow tone; frequency from the FFT peak",
               {positive("f_signal", kRequired, "tone frequency (Hz)"),
                positive("v_pk", kRequired, "tone amplitude"),
                positive("t_s", kRequired, "sampling interval (s)"),
                positive("t_int", kRequired, "integration time per sample (s), at most t_s"),
                positive("gamma", 1.0, "coupling constant"),
                count("samples", 256, 8, 10000000, "number of samples")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(get(p, "t_int") <= get(p, "t_s"), "t_int", "must not exceed t_s", out);
               },
               run_continuous_sampling});

  r.push_back({"noise_spectroscopy",
               "Lorentzian noise reconstructed from simulated CP decay curves",
               {positive("s0", kRequired, "Lorentzian level"),
                nonneg("omega_c", 0.0, "Lorentzian center (rad/s)"),
                positive("half_width", 1.0, "Lorentzian half width (rad/s)"),
                positive("gamma", 1.0, "coupling constant"),
                count("n", 16, 2, 100000, "pi pulses per sequence (even)"),
                positive("tau_min", kRequired, "shortest pulse spacing (s)"),
                positive("tau_max", kRequired, "longest pulse spacing (s)"),
                count("points", 8, 2, 10000, "spacings, log-spaced"),
                positive("noise_dt", kRequired, "noise sampling step (s)"),
                count("k_max", 1, 1, 99, "highest odd harmonic in the inversion")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(p.at("n").get<long long>() % 2 == 0, "n", "must be even", out);
                 require(p.at("k_max").get<long long>() % 2 == 1, "k_max", "must be odd", out);
                 require(get(p, "tau_max") > get(p, "tau_min"), "tau_max", "must exceed tau_min", out);
               },
               run_noise_spectroscopy});

  r.push_back({"relaxometry",
               "T1 decay under transverse Lorentzian noise against the golden-rule rate",
               {positive("omega0", kRequired, "transition frequency (rad/s)"),
                positive("s0", kRequired, "Lorentzian level"),
                nonneg("omega_c", 0.0, "Lorentzian center (rad/s)"),
                positive("half_width", 1.0, "Lorentzian half width (rad/s)"),
                positive("gamma", 1.0, "coupling constant"),
                positive("t_stop", kRequired, "last delay (s)"),
                count("points", 10, 2, 10000, "delays"),
                positive("noise_dt", kRequired, "noise sampling step (s)")},
               true, nullptr, run_relaxometry});

  r.push_back({"sensitivity",
               "Minimum detectable signal against sensing time and its optimum",
               {positive("gamma", 1.0, "coupling constant"),
                fraction("contrast", 1.0, "readout efficiency C"),
                positive("t_chi", kRequired, "coherence time (s)"),
                nonneg("t_m", 0.0, "overhead per cycle (s)"),
                positive("exponent", 1.0, "decay exponent a in chi = (t/t_chi)^a"),
                count("order", 1, 1, 2, "1 = slope, 2 = variance detection"),
                count("points", 41, 2, 100000, "sensing times, log-spaced"),
                positive("t_min_ratio", 0.01, "first sensing time / t_chi"),
                positive("t_max_ratio", 10.0, "last sensing time / t_chi")},
               false,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(get(p, "t_max_ratio") > get(p, "t_min_ratio"), "t_max_ratio",
                         "must exceed t_min_ratio", out);
               },
               run_sensitivity});

  r.push_back({"allan",
               "Allan variance of a synthetic time-error series",
               {positive("t_s", kRequired, "sampling interval (s)"),
                count("samples", 4096, 16, 100000000, "series length"),
                nonneg("white_sigma", 1.0, "white frequency noise per sample"),
                nonneg("phase_sigma", 0.0, "white phase noise per sample"),
                real("drift", 0.0, "linear frequency drift (1/s)")},
               false, nullptr, run_allan});

  r.push_back({"phase_estimation",
               "Median phase error against total sensing time over a range of bit counts",
               {choice("estimator", "adaptive", {"adaptive", "bayesian", "fixed_time"}, "estimator"),
                count("bits_min", 2, 1, 16, "smallest M"),
                count("bits_max", 8, 1, 16, "largest M"),
                fraction("contrast", 1.0, "readout contrast C"),
                count("g", 5, 1, 1000, "repeats G"),
                count("f", 2, 0, 1000, "extra repeats F per bit")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(p.at("bits_max").get<long long>() >= p.at("bits_min").get<long long>(),
                         "bits_max", "must be >= bits_min", out);
               },
               run_phase_estimation});

  r.push_back({"dynamic_range",
               "Dynamic range of a fixed sensing time and of a doubling schedule against total time",
               {positive("gamma", 1.0, "coupling constant"),
                positive("t0", kRequired, "shortest sensing time (s)"),
                fraction("contrast", 1.0, "readout efficiency C"),
                positive("t2star", kRequired, "dephasing time, used as the fixed sensing time (s)"),
                positive("total_min", kRequired, "smallest total time (s)"),
                positive("total_max", kRequired, "largest total time (s)"),
                count("points", 10, 1, 100000, "total times, log-spaced"),
                count("g", 5, 1, 1000, "repeats G"),
                count("f", 2, 0, 1000, "extra repeats F per step")},
               false,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(get(p, "total_max") >= get(p, "total_min"), "total_max",
                         "must be >= total_min", out);
               },
               run_dynamic_range});

  r.push_back({"ghz",
               "GHZ fringes and entangled versus uncorrelated quantum Cramer-Rao bounds",
               {count("qubits", kRequired, 1, 100000, "number of qubits M"),
                positive("omega0", kRequired, "detuning (rad/s)"),
                positive("t_stop", kRequired, "sweep length (s)"),
                count("points", 128, 8, 10000000, "time samples"),
                positive("t2", 1.0, "single-qubit dephasing time (s)"),
                positive("total_time", 100.0, "total sensing time for the optimum (s)"),
                positive("gamma", 1.0, "coupling constant")},
               true,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 const double f = p.at("qubits").get<double>() * get(p, "omega0") / (2.0 * kPi);
                 const double nyquist = p.at("points").get<double>() / (2.0 * get(p, "t_stop"));
                 require(f < nyquist, "points", "fringe frequency is above the sampling Nyquist limit",
                         out);
               },
               run_ghz});

  r.push_back({"squeezing",
               "One-axis twisting of a coherent spin state and the squeezing parameter",
               {count("qubits", kRequired, 1, 2000, "number of qubits M"),
                nonneg("chi_t_min", 0.0, "smallest twisting strength"),
                positive("chi_t_max", kRequired, "largest twisting strength"),
                count("points", 50, 1, 100000, "twisting strengths")},
               false,
               [](const Json& p, std::vector<ValidationIssue>& out) {
                 require(get(p, "chi_t_max") >= get(p, "chi_t_min"), "chi_t_max",
                         "must be >= chi_t_min", out);
               },
               run_squeezing});
  return r;
}

}  // namespace

const std::vector<ExperimentEntry>& experiment_registry() {
  static const std::vector<ExperimentEntry> registry = build_registry();
  return registry;
}

}  // namespace qsense::cli
