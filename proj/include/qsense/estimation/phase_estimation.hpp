#pragma once

// Phase estimation with exponentially growing sensing times: quantum Fourier
// transform readout, adaptive bit-by-bit estimation and Bayesian estimation.
// Phases are in turns, φ ∈ [0, 1).

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qsense/common/random.hpp"

namespace qsense {

/// Binary outcome source with p(1) = ½[1 − C_m cos(2π 2^m φ + θ)],
/// C_m = C e^{−decay·2^m}. Each query costs 2^m units of t0.
class PhaseOracle {
 public:
  PhaseOracle(double phi, double contrast, RandomStream rng, double decay = 0.0);

  int query(int m, double theta);
  double probability(int m, double theta) const;
  double contrast_at(int m) const;

  double phi() const { return phi_; }
  double contrast() const { return contrast_; }
  /// Total sensing time used, in units of t0.
  double elapsed() const { return elapsed_; }
  std::size_t queries() const { return queries_; }

 private:
  double phi_;
  double contrast_;
  double decay_;
  RandomStream rng_;
  double elapsed_ = 0.0;
  std::size_t queries_ = 0;
};

/// N_m = G + F(M − 1 − m) for m = 0..M−1.
struct ResourceSchedule {
  int bits = 1;
  int g = 5;
  int f = 2;

  void validate() const;
  int repeats(int m) const;
  /// Σ N_m 2^m in units of t0.
  double total_time() const;
};

/// Wraps into [0, 1).
double wrap_phase(double phi);
/// min(|a − b|, 1 − |a − b|) on the unit circle.
double circular_distance(double a, double b);
/// 0.b1 b2 … (most significant bit first).
double bits_to_phase(std::span<const int> bits);
std::string bits_to_string(std::span<const int> bits);

/// Register probabilities |<j|QFT⁻¹|ψ(φ)>|² for j = 0..2^M−1, from a
/// gate-by-gate statevector simulation.
std::vector<double> qft_distribution(double phi, int bits);
/// Most likely register value, bits most significant first. Exact for φ = j/2^M.
std::vector<int> qft_phase_estimation(double phi, int bits);
/// One sampled measurement of the register.
std::vector<int> qft_phase_estimation(double phi, int bits, RandomStream& rng);

/// Measures bits from m = M−1 down to 0 with N_m repeats each, removing the
/// known lower bits through θ = −2π(0.0 b_{m+2} … b_M) and taking a majority
/// vote. Ties resolve to 0, which keeps the current estimate.
double adaptive_phase_estimation(PhaseOracle& oracle, const ResourceSchedule& schedule);

struct PlanStep {
  int m = 0;
  double theta = 0.0;
  int repeats = 1;
};

/// Two quadratures θ ∈ {0, π/2} per m, N_m repeats each, longest time first.
std::vector<PlanStep> default_bayesian_plan(const ResourceSchedule& schedule);

/// Posterior on a uniform circular grid, stored as log weights.
class PhasePosterior {
 public:
  explicit PhasePosterior(std::size_t grid = 4096);

  /// Multiplies by the likelihood of `outcome` for a query (m, θ) with contrast C.
  void update(int m, double theta, int outcome, double contrast, std::size_t count = 1);

  std::size_t size() const { return log_w_.size(); }
  double grid_point(std::size_t i) const;
  /// Normalized weights.
  std::vector<double> weights() const;
  /// Circular mean in [0, 1).
  double mean() const;

 private:
  std::vector<double> log_w_;
  std::vector<double> cos_, sin_;
};

struct BayesianResult {
  PhasePosterior posterior;
  double phi_hat = 0.0;
};

/// Grid size max(4096, 2^{M+4}) for M = 1 + largest m in the plan.
BayesianResult bayesian_phase_estimation(PhaseOracle& oracle, std::span<const PlanStep> plan);

/// Fixed-time baseline: `shots` queries at m = 0 for each of θ = 0 and π/2,
/// φ = atan2(2p_{π/2} − 1, 1 − 2p_0)/2π.
double fixed_time_phase_estimation(PhaseOracle& oracle, std::size_t shots);

enum class PhaseEstimator { Adaptive, Bayesian, FixedTime };

std::string to_string(PhaseEstimator e);

struct ScalingPoint {
  int bits = 0;
  double total_time = 0.0;  ///< units of t0
  double median_error = 0.0;
  double quantile_10 = 0.0;
  double quantile_90 = 0.0;
};

struct ScalingOptions {
  double contrast = 1.0;
  int g = 5;
  int f = 2;
  std::size_t trials = 400;
  std::uint64_t seed = 0;
};

struct ScalingBenchmark {
  PhaseEstimator estimator = PhaseEstimator::Adaptive;
  std::vector<ScalingPoint> points;
  double exponent = 0.0;  ///< log-log slope of median error against total time

  /// Columns T_total, median_error, quantile_10, quantile_90, estimator.
  void write_csv(const std::filesystem::path& path) const;
};

/// Median error over random φ for each M. The fixed-time baseline uses the
/// same total time as the schedule for M bits, split evenly between quadratures.
ScalingBenchmark phase_estimation_scaling(PhaseEstimator estimator, std::span<const int> bits,
                                          const ScalingOptions& options);

}  // namespace qsense
