#pragma once

// Ensembles of M qubits: uncorrelated and GHZ scaling, and the symmetric
// (Dicke) subspace J = M/2 with one-axis twisting and squeezing parameters.

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <vector>

namespace qsense {

/// p = sin²(M ω0 t / 2).
double ghz_probability(int m_qubits, double omega0, double t);

enum class EnsembleKind { Uncorrelated, Ghz };

/// Uncorrelated: e^χ/(γ t √(MN)). GHZ: e^χ/(γ M t √N).
double qcrb_scaling(int m_qubits, std::size_t n, double t, double chi, double gamma,
                    EnsembleKind kind);

struct EnsembleOptimum {
  double t_opt = 0.0;
  double delta_v = 0.0;
};

/// Best QCRB for total time T with N = T/t repetitions and exponential
/// dephasing e^{−t/T2} per qubit; the GHZ state dephases M times faster.
EnsembleOptimum ensemble_optimum(int m_qubits, double t2, double total_time, double gamma,
                                 EnsembleKind kind);

/// Amplitudes over |J, m>, index i ↔ m = i − J.
class CollectiveSpinState {
 public:
  CollectiveSpinState(int m_qubits, Eigen::VectorXcd amplitudes);

  int qubits() const { return m_; }
  double j() const { return 0.5 * m_; }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }

  Eigen::Vector3d mean_spin() const;
  /// <J_n> and ΔJ_n² for a unit vector n.
  double expectation(const Eigen::Vector3d& n) const;
  double variance(const Eigen::Vector3d& n) const;
  /// <Jx² + Jy² + Jz²>.
  double j_squared() const;

 private:
  int m_;
  Eigen::VectorXcd amp_;
};

/// Jx, Jy, Jz in the Dicke basis for J = M/2.
struct SpinOperators {
  Eigen::MatrixXcd x, y, z;

  Eigen::MatrixXcd along(const Eigen::Vector3d& n) const { return n.x() * x + n.y() * y + n.z() * z; }
};
SpinOperators spin_operators(int m_qubits);

/// All spins along `direction` (unit vector).
CollectiveSpinState css(int m_qubits, const Eigen::Vector3d& direction);

/// Amplitude m multiplied by e^{−i χt m²}.
CollectiveSpinState one_axis_twisting(const CollectiveSpinState& state, double chi_t);

/// exp(−i angle J_n) applied to the state.
CollectiveSpinState rotated(const CollectiveSpinState& state, const Eigen::Vector3d& axis,
                            double angle);

struct SqueezingParameters {
  double xi = 0.0;            ///< ΔJ_α/√(|<J_γ>|/2)
  double xi_r = 0.0;          ///< √M min ΔJ_⊥/|<J>|
  double angle = 0.0;         ///< minimizing transverse angle from e1
  double min_variance = 0.0;  ///< min ΔJ_⊥²
  Eigen::Vector3d min_axis = Eigen::Vector3d::Zero();
};

/// The transverse plane is spanned by e1 = ẑ × n̂ (x̂ when the mean spin is
/// along z) and e2 = n̂ × e1, n̂ the mean-spin direction. The minimum is found
/// by a 256-angle scan followed by golden-section refinement.
/// Throws EstimationError when <J_γ> or <J> vanishes.
SqueezingParameters squeezing_parameters(const CollectiveSpinState& state,
                                         const Eigen::Vector3d& alpha_axis,
                                         const Eigen::Vector3d& gamma_axis);

/// ξ_R alone, with the same transverse search.
SqueezingParameters metrology_squeezing(const CollectiveSpinState& state);

struct TwistingScan {
  std::vector<double> chi_t;
  std::vector<double> xi_r;
  std::vector<double> angle;
  std::size_t best = 0;

  /// Columns chi_t, xi_R.
  void write_csv(const std::filesystem::path& path) const;
};

/// ξ_R after twisting an x-polarized coherent state by each χt.
TwistingScan twisting_scan(int m_qubits, std::span<const double> chi_t);

}  // namespace qsense
