#pragma once

// Sensitivity, SNR, Allan variance, Fisher information and dynamic range.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qsense/qubit/qubit.hpp"

namespace qsense {

struct SensitivityInputs {
  double gamma = 1.0;
  double contrast = 1.0;  ///< readout efficiency C
  double t_chi = 1.0;     ///< T2*, T2 or T1
  double t_m = 0.0;       ///< overhead per cycle
  double exponent = 1.0;  ///< χ(t) = (t/T_chi)^a
  int order = 1;          ///< 1 = slope, 2 = variance detection

  void validate() const;
  double chi(double t) const;
  /// |∂_V^q p|: ½γt (slope) or ¼γ²t² (variance).
  double response(double t) const;
};

/// SNR = δV^q |∂_V^q p| e^{−χ(t)} 2C √(T/(t + t_m)), χ from the inputs.
double snr(const SensitivityInputs& in, double delta_v, double t, double total_time);
double snr(const SensitivityInputs& in, double delta_v, double t, double total_time,
           const std::function<double(double)>& chi_of_t);

/// Minimum detectable signal per √Hz at sensing time t.
double minimum_signal_at(const SensitivityInputs& in, double t);

struct SensitivityOptimum {
  double t_opt = 0.0;
  double v_min = 0.0;
  bool interior = true;  ///< false when the optimum sits on the search boundary
  std::string note;
};

/// Golden-section search of minimum_signal_at over log t in
/// [1e-6, 1e3]·T_chi.
SensitivityOptimum minimum_detectable_signal(const SensitivityInputs& in);

/// √(2e)/(γC√T2*), reached at t = T2*/2.
double vmin_slope_optimal(double gamma, double contrast, double t2star);
/// √(2e)/(γ√C T_chi^{3/4}), evaluated at t = T_chi.
double vmin_variance(double gamma, double contrast, double t_chi);
/// e/(γ²C√T_chi).
double psd_min(double gamma, double contrast, double t_chi);
/// V_min(T) = v_min T^{−1/(2q)}.
double vmin_integrated(double v_min, int order, double total_time);

struct AllanSeries {
  std::vector<double> samples;
  double t_s = 1.0;

  void validate() const;
};

/// σ²(m t_s) = Σ_{j=1}^{N−2m} (x_{j+m} − x_j)² / (2(N − 2m) m² t_s²).
double allan_variance(const AllanSeries& series, std::size_t m);

struct FisherResult {
  double f_v = 0.0;      ///< Fisher information with respect to V
  double f = 0.0;        ///< per unit γ², F_V/γ²
  double delta_v = 0.0;  ///< 1/√(N F_V)
};

/// Binary-outcome Fisher information F = (∂_V p)²/(p(1 − p)) with a
/// Ridders-extrapolated central difference. At p ∈ {0, 1} uses the limit 2|p''|.
/// `h` is the initial step (0 picks 1e-2·max(1, |V|)).
FisherResult fisher_information(const std::function<double(double)>& p_model, double v,
                                std::size_t n, double gamma, double h = 0.0);

/// p(V) = ½[1 + e^{−χ} sin(γVt)] (Ramsey at the slope bias).
double ramsey_bias_probability(double gamma, double v, double t, double chi);
/// t² cos²(γVt) e^{−2χ}/(1 − e^{−2χ} sin²(γVt)).
double ramsey_fisher(double gamma, double v, double t, double chi);
/// e^χ/(γ t √N).
double ramsey_qcrb(double gamma, double t, double chi, std::size_t n);

/// Symmetric-logarithmic-derivative QFI Σ 2|<j|∂ρ|k>|²/(λ_j + λ_k), terms with
/// λ_j + λ_k = 0 skipped.
double quantum_fisher_information(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& drho);
double quantum_fisher_information(const QubitState& rho, const Matrix2c& drho);

struct DynamicRange {
  double v_max = 0.0;
  double v_min = 0.0;
  double ratio = 0.0;
};

/// Single sensing time t: V_max = π/(γt), V_min = 2/(γC√(T2* T)). At t = T2*
/// the ratio is πC√T/(2√T2*).
DynamicRange dynamic_range_fixed(double gamma, double t, double contrast, double t2star,
                                 double total_time);

/// Schedule t_m = 2^m t0 with N_m = G + F(M−1−m) repeats. M is chosen
/// (continuously, log-interpolated) so that the schedule takes T;
/// V_max = π/(γt0), V_min = 2/(γC√(t_{M−1} T)).
DynamicRange dynamic_range_schedule(double gamma, double t0, double contrast, double total_time,
                                    int g = 5, int f = 2);

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;  ///< y ≈ prefactor · x^exponent
};

/// Least-squares line through (log x, log y).
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated sample quantile, q ∈ [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace qsense
