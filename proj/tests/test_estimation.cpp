#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "qsense/common/errors.hpp"
#include "qsense/common/random.hpp"
#include "qsense/estimation/estimation.hpp"
#include "qsense/estimation/phase_estimation.hpp"

using namespace qsense;
using std::numbers::pi;
using std::numbers::e;

TEST_CASE("snr") {
  SensitivityInputs in;
  CHECK(snr(in, 0.0, 0.5, 1.0) == 0.0);
  CHECK(snr(in, 0.3, 0.5, 4.0) == doctest::Approx(std::sqrt(2.0) * snr(in, 0.3, 0.5, 2.0)));
  CHECK(snr(in, 0.3, 0.5, 1.0, [](double) { return 800.0; }) < 1e-300);
  // Unit SNR at the minimum detectable signal for T = 1.
  const double v = minimum_signal_at(in, 0.4);
  CHECK(snr(in, v, 0.4, 1.0) == doctest::Approx(1.0));
  in.order = 2;
  const double v2 = minimum_signal_at(in, 0.4);
  CHECK(snr(in, v2, 0.4, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(snr(in, 1.0, 0.5, 0.2), ArgumentError);
  in.order = 3;
  CHECK_THROWS_AS(in.validate(), ArgumentError);
}

TEST_CASE("minimum detectable signal") {
  CHECK(vmin_slope_optimal(1.0, 1.0, 1.0) == doctest::Approx(2.3316).epsilon(1e-4));
  SensitivityInputs in;
  in.gamma = 2.0;
  in.contrast = 0.3;
  in.t_chi = 5.0;
  const auto opt = minimum_detectable_signal(in);
  CHECK(opt.interior);
  CHECK(opt.t_opt == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(opt.v_min == doctest::Approx(vmin_slope_optimal(2.0, 0.3, 5.0)).epsilon(1e-9));

  in.order = 2;
  CHECK(minimum_signal_at(in, in.t_chi) == doctest::Approx(vmin_variance(2.0, 0.3, 5.0)));
  const auto opt2 = minimum_detectable_signal(in);
  CHECK(opt2.t_opt == doctest::Approx(7.5).epsilon(1e-6));

  // No decay: the optimum runs to the boundary.
  in.order = 1;
  in.exponent = 1e-9;
  CHECK_FALSE(minimum_detectable_signal(in).interior);

  CHECK(psd_min(1.0, 1.0, 1.0) == doctest::Approx(e));
  CHECK(vmin_integrated(2.0, 1, 4.0) == doctest::Approx(1.0));
  CHECK(vmin_integrated(2.0, 2, 16.0) == doctest::Approx(1.0));
}

TEST_CASE("allan variance") {
  AllanSeries constant{std::vector<double>(50, 3.0), 0.1};
  CHECK(allan_variance(constant, 1) == 0.0);
  CHECK(allan_variance(constant, 10) == 0.0);

  const double a = 1.7, ts = 0.2;
  AllanSeries ramp{{}, ts};
  for (int j = 0; j < 40; ++j) ramp.samples.push_back(a * j * ts);
  CHECK(allan_variance(ramp, 1) == doctest::Approx(a * a / 2).epsilon(1e-14));

  const double c = 0.6;
  AllanSeries alt{{}, ts};
  for (int j = 0; j < 41; ++j) alt.samples.push_back(j % 2 ? -c : c);
  CHECK(allan_variance(alt, 1) == doctest::Approx(2 * c * c / (ts * ts)).epsilon(1e-14));

  CHECK_THROWS_AS(allan_variance(alt, 21), ArgumentError);
  CHECK_NOTHROW(allan_variance(alt, 20));
  CHECK_THROWS_AS(allan_variance(AllanSeries{{1.0, 2.0}, 1.0}, 1), ArgumentError);

  // Integrated white noise: slope −1 in grouping time.
  RandomStream rng(5);
  AllanSeries walk{{}, 1.0};
  double x = 0.0;
  for (int j = 0; j < 200000; ++j) {
    x += rng.normal();
    walk.samples.push_back(x);
  }
  std::vector<double> tau, var;
  for (std::size_t m : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
    tau.push_back(static_cast<double>(m));
    var.push_back(allan_variance(walk, m));
  }
  CHECK(std::abs(fit_power_law(tau, var).exponent + 1.0) < 0.15);
}

TEST_CASE("fisher information for the ramsey family") {
  const double gamma = 1.3, t = 2.0;
  RandomStream rng(21);
  for (int i = 0; i < 20; ++i) {
    const double v = rng.uniform(-3.0, 3.0);
    const double chi = rng.uniform(0.0, 1.5);
    auto p = [&](double x) { return ramsey_bias_probability(gamma, x, t, chi); };
    const auto r = fisher_information(p, v, 100, gamma);
    const double closed = ramsey_fisher(gamma, v, t, chi);
    if (closed > 1e-6) CHECK(r.f == doctest::Approx(closed).epsilon(1e-4));
    else CHECK(r.f < 1e-6);
  }
  CHECK(ramsey_fisher(gamma, (0.5 * pi) / (gamma * t), t, 0.3) == doctest::Approx(0.0).scale(1.0));
  CHECK(ramsey_fisher(gamma, pi / (gamma * t), t, 0.3) ==
        doctest::Approx(t * t * std::exp(-0.6)));
  for (double v : {0.1, 0.7, 2.2}) CHECK(ramsey_fisher(gamma, v, t, 0.0) == doctest::Approx(t * t));

  const double chi = 0.4;
  const std::size_t n = 50;
  auto p = [&](double x) { return ramsey_bias_probability(gamma, x, t, chi); };
  const auto best = fisher_information(p, 0.0, n, gamma);
  CHECK(best.delta_v == doctest::Approx(ramsey_qcrb(gamma, t, chi, n)).epsilon(1e-6));
  CHECK(ramsey_qcrb(gamma, t, chi, n) == std::exp(chi) / (gamma * t * std::sqrt(50.0)));

  // At p = 1 the limit 2|p''| applies.
  auto fringe = [&](double x) { return 0.5 * (1 + std::sin(gamma * x * t)); };
  const double v_top = 0.5 * pi / (gamma * t);
  CHECK(fisher_information(fringe, v_top, 1, gamma).f_v ==
        doctest::Approx(gamma * gamma * t * t).epsilon(1e-5));
}

TEST_CASE("quantum fisher information") {
  const double gamma = 0.9, t = 1.7;
  auto rho_of = [&](double v, double chi) {
    Eigen::Matrix2cd r;
    const auto coh = 0.5 * std::exp(-chi) * std::polar(1.0, gamma * v * t);
    r << 0.5, coh, std::conj(coh), 0.5;
    return r;
  };
  auto drho_of = [&](double v, double chi) {
    Eigen::Matrix2cd d;
    const auto coh = 0.5 * std::exp(-chi) * std::complex<double>(0, gamma * t) *
                     std::polar(1.0, gamma * v * t);
    d << 0.0, coh, std::conj(coh), 0.0;
    return d;
  };
  CHECK(quantum_fisher_information(Eigen::MatrixXcd(rho_of(0.3, 0.0)),
                                   Eigen::MatrixXcd(drho_of(0.3, 0.0))) /
            (gamma * gamma) ==
        doctest::Approx(t * t).epsilon(1e-9));
  const auto mixed = QubitState::from_matrix(Eigen::Matrix2cd::Identity() * 0.5);
  CHECK(quantum_fisher_information(mixed, Eigen::Matrix2cd::Zero()) == 0.0);

  RandomStream rng(2);
  for (int i = 0; i < 20; ++i) {
    const double v = rng.uniform(-2.0, 2.0);
    const double chi = rng.uniform(0.0, 1.0);
    const double qfi = quantum_fisher_information(Eigen::MatrixXcd(rho_of(v, chi)),
                                                  Eigen::MatrixXcd(drho_of(v, chi)));
    CHECK(qfi == doctest::Approx(gamma * gamma * t * t * std::exp(-2 * chi)).epsilon(1e-9));
    const double classical = gamma * gamma * ramsey_fisher(gamma, v, t, chi);
    CHECK(classical <= qfi * (1 + 1e-9));
  }
  CHECK_THROWS_AS(quantum_fisher_information(Eigen::MatrixXcd::Identity(2, 2),
                                             Eigen::MatrixXcd::Identity(2, 2)),
                  ArgumentError);
}

TEST_CASE("dynamic range") {
  const auto a = dynamic_range_fixed(1.0, 1.0, 1.0, 1.0, 1.0);
  CHECK(a.v_max == doctest::Approx(pi));
  const auto d1 = dynamic_range_fixed(1.0, 2.0, 0.4, 2.0, 10.0);
  CHECK(d1.ratio == doctest::Approx(pi * 0.4 * std::sqrt(10.0) / (2 * std::sqrt(2.0))));
  const auto d4 = dynamic_range_fixed(1.0, 2.0, 0.4, 2.0, 40.0);
  CHECK(d4.ratio / d1.ratio == doctest::Approx(2.0));

  double prev = 0.0;
  for (double t : {1e3, 1e5, 1e7}) {
    const double r = dynamic_range_schedule(1.0, 1.0, 1.0, 2 * t).ratio /
                     dynamic_range_schedule(1.0, 1.0, 1.0, t).ratio;
    CHECK(std::abs(r - 2.0) < 0.15);
    if (prev > 0) CHECK(std::abs(r - 2.0) <= std::abs(prev - 2.0) + 1e-9);
    prev = r;
  }
  CHECK_THROWS_AS(dynamic_range_schedule(1.0, 1.0, 1.0, 1.0), ArgumentError);
}

TEST_CASE("power-law fit and quantiles") {
  const std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.7));
  const auto fit = fit_power_law(x, y);
  CHECK(fit.exponent == doctest::Approx(-0.7));
  CHECK(fit.prefactor == doctest::Approx(3.0));
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
}

namespace {

// Direct DFT of the product state, independent of the gate sequence.
std::vector<double> dft_distribution(double phi, int bits) {
  const std::size_t n = std::size_t{1} << bits;
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> a = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      a += std::polar(1.0, 2 * pi * (phi * j - static_cast<double>(j * k) / n));
    p[k] = std::norm(a) / (n * n);
  }
  return p;
}

}  // namespace

TEST_CASE("qft phase estimation") {
  const std::vector<int> expect{0, 1, 1};
  CHECK(qft_phase_estimation(3.0 / 8.0, 3) == expect);
  CHECK(bits_to_string(qft_phase_estimation(0.0, 5)) == "00000");
  for (int bits = 3; bits <= 8; ++bits) {
    const std::size_t n = std::size_t{1} << bits;
    for (std::size_t j = 0; j < n; ++j) {
      const double phi = static_cast<double>(j) / n;
      const auto out = qft_phase_estimation(phi, bits);
      CHECK(bits_to_phase(out) == phi);
    }
  }
  for (double phi : {0.1234, 0.77, 0.5}) {
    const auto gate = qft_distribution(phi, 5);
    const auto direct = dft_distribution(phi, 5);
    for (std::size_t k = 0; k < gate.size(); ++k) CHECK(gate[k] == doctest::Approx(direct[k]).scale(1.0));
  }

  RandomStream rng(17);
  const int bits = 6;
  const double phi = 0.3141;
  int hits = 0;
  const int runs = 10000;
  for (int i = 0; i < runs; ++i) {
    const auto out = qft_phase_estimation(phi, bits, rng);
    if (circular_distance(bits_to_phase(out), phi) <= std::ldexp(1.0, -bits)) ++hits;
  }
  CHECK(static_cast<double>(hits) / runs >= 4 / (pi * pi));
}

TEST_CASE("adaptive phase estimation") {
  PhaseOracle oracle(5.0 / 16.0, 1.0, RandomStream(1));
  CHECK(adaptive_phase_estimation(oracle, {4, 5, 2}) == 5.0 / 16.0);
  CHECK(oracle.elapsed() == doctest::Approx(ResourceSchedule{4, 5, 2}.total_time()));
  PhaseOracle zero(0.0, 1.0, RandomStream(2));
  CHECK(adaptive_phase_estimation(zero, {6, 5, 2}) == 0.0);
  CHECK(ResourceSchedule{3, 5, 2}.repeats(0) == 9);
  CHECK(ResourceSchedule{3, 5, 2}.total_time() == 9 + 7 * 2 + 5 * 4);
  for (int j = 0; j < 64; ++j) {
    PhaseOracle o(j / 64.0, 1.0, RandomStream(j));
    CHECK(adaptive_phase_estimation(o, {6, 5, 2}) == j / 64.0);
  }
}

TEST_CASE("phase posterior") {
  PhasePosterior uniform(64);
  for (double w : uniform.weights()) CHECK(w == doctest::Approx(1.0 / 64));

  PhasePosterior single(4096);
  single.update(0, 0.0, 1, 1.0);
  const auto w = single.weights();
  double norm = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) norm += std::pow(std::sin(pi * single.grid_point(i)), 2);
  for (std::size_t i = 0; i < w.size(); i += 97)
    CHECK(w[i] == doctest::Approx(std::pow(std::sin(pi * single.grid_point(i)), 2) / norm).scale(1e-12));

  PhasePosterior a(1024), b(1024);
  a.update(2, 0.3, 1, 0.9, 3);
  a.update(0, 1.1, 0, 0.9, 2);
  a.update(5, 0.0, 1, 0.9, 1);
  b.update(5, 0.0, 1, 0.9, 1);
  b.update(0, 1.1, 0, 0.9, 1);
  b.update(2, 0.3, 1, 0.9, 3);
  b.update(0, 1.1, 0, 0.9, 1);
  const auto wa = a.weights(), wb = b.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    CHECK(wa[i] == doctest::Approx(wb[i]).scale(1e-12));
    sum += wa[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // Many identical outcomes do not underflow.
  PhasePosterior sharp(4096);
  sharp.update(0, 0.0, 1, 1.0, 100000);
  CHECK(sharp.mean() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("bayesian phase estimation") {
  const ResourceSchedule schedule{8, 5, 2};
  const auto plan = default_bayesian_plan(schedule);
  CHECK(plan.size() == 16);
  RandomStream rng(4);
  for (int i = 0; i < 20; ++i) {
    const double phi = rng.uniform();
    PhaseOracle oracle(phi, 1.0, rng.split(i));
    const auto r = bayesian_phase_estimation(oracle, plan);
    CHECK(circular_distance(r.phi_hat, phi) < 0.01);
    CHECK(r.posterior.size() >= 4096);
  }
  PhaseOracle oracle(0.0, 1.0, RandomStream(3));
  CHECK(circular_distance(bayesian_phase_estimation(oracle, plan).phi_hat, 0.0) < 1e-3);
}

TEST_CASE("fixed-time baseline") {
  PhaseOracle oracle(0.2, 1.0, RandomStream(8));
  CHECK(circular_distance(fixed_time_phase_estimation(oracle, 20000), 0.2) < 0.01);
  CHECK(oracle.elapsed() == 40000);
}

TEST_CASE("scaling benchmark shape") {
  ScalingOptions options;
  options.trials = 50;
  const std::vector<int> bits{2, 4, 6};
  const auto bench = phase_estimation_scaling(PhaseEstimator::Adaptive, bits, options);
  REQUIRE(bench.points.size() == 3);
  CHECK(bench.points[0].total_time == ResourceSchedule{2, 5, 2}.total_time());
  CHECK(bench.exponent < -0.5);
  for (const auto& p : bench.points) {
    CHECK(p.quantile_10 <= p.median_error);
    CHECK(p.median_error <= p.quantile_90);
  }
  const auto again = phase_estimation_scaling(PhaseEstimator::Adaptive, bits, options);
  CHECK(again.points[2].median_error == bench.points[2].median_error);
}
