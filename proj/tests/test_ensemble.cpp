#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "qsense/common/errors.hpp"
#include "qsense/common/fft.hpp"
#include "qsense/common/random.hpp"
#include "qsense/ensemble/ensemble.hpp"
#include "qsense/protocols/protocols.hpp"

using namespace qsense;
using std::numbers::pi;

namespace {

CollectiveSpinState random_state(int m, RandomStream& rng) {
  Eigen::VectorXcd a(m + 1);
  for (int i = 0; i <= m; ++i) a(i) = {rng.normal(), rng.normal()};
  a.normalize();
  return CollectiveSpinState(m, a);
}

}  // namespace

TEST_CASE("ghz fringes") {
  for (double t : {0.1, 0.9, 2.3}) CHECK(ghz_probability(1, 1.7, t) == ramsey_probability(1.7, t));
  CHECK(ghz_probability(3, 1.0, pi / 3) == doctest::Approx(1.0));

  for (int m : {2, 3, 5, 10}) {
    const double omega0 = 1.0;
    const std::size_t n = 1024;
    const double span = 16 * 2 * pi / omega0;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = ghz_probability(m, omega0, span * i / n);
    const double f = continuous_sampling_estimate(
        [&](double t) { return p[static_cast<std::size_t>(std::lround(t / (span / n))) % n]; },
        span / n, span);
    CHECK(f == doctest::Approx(m * omega0 / (2 * pi)).epsilon(1e-12));

    int crossings = 0;
    const int k = 20000;
    for (int i = 1; i <= k; ++i) {
      const double a = ghz_probability(m, omega0, 2 * pi * (i - 1) / k) - 0.5;
      const double b = ghz_probability(m, omega0, 2 * pi * i / k) - 0.5;
      if (a < 0 && b >= 0) ++crossings;
    }
    CHECK(crossings == m);
  }
}

TEST_CASE("ensemble cramer-rao bounds") {
  for (int m : {1, 2, 3, 5, 10}) {
    const double u = qcrb_scaling(m, 100, 2.0, 0.3, 1.5, EnsembleKind::Uncorrelated);
    const double g = qcrb_scaling(m, 100, 2.0, 0.3, 1.5, EnsembleKind::Ghz);
    CHECK(u / g == doctest::Approx(std::sqrt(m)).epsilon(1e-14));
    const auto bu = ensemble_optimum(m, 4.0, 100.0, 1.0, EnsembleKind::Uncorrelated);
    const auto bg = ensemble_optimum(m, 4.0, 100.0, 1.0, EnsembleKind::Ghz);
    CHECK(bg.delta_v == doctest::Approx(bu.delta_v).epsilon(1e-12));
    CHECK(bg.t_opt == doctest::Approx(bu.t_opt / m));
  }
  CHECK(qcrb_scaling(1, 10, 1.0, 0.0, 1.0, EnsembleKind::Ghz) ==
        qcrb_scaling(1, 10, 1.0, 0.0, 1.0, EnsembleKind::Uncorrelated));
}

TEST_CASE("coherent spin states") {
  const int m = 12;
  const auto z = css(m, Eigen::Vector3d::UnitZ());
  CHECK(std::abs(z.amplitudes()(m)) == doctest::Approx(1.0));
  CHECK(z.expectation(Eigen::Vector3d::UnitZ()) == doctest::Approx(m / 2.0));
  CHECK(std::sqrt(z.variance(Eigen::Vector3d::UnitX())) == doctest::Approx(std::sqrt(m) / 2));
  CHECK(std::sqrt(z.variance(Eigen::Vector3d::UnitY())) == doctest::Approx(std::sqrt(m) / 2));

  RandomStream rng(3);
  for (int i = 0; i < 10; ++i) {
    Eigen::Vector3d n(rng.normal(), rng.normal(), rng.normal());
    n.normalize();
    const auto s = css(m, n);
    const Eigen::Vector3d mean = s.mean_spin();
    CHECK((mean - 0.5 * m * n).norm() < 1e-10);
    CHECK(s.j_squared() == doctest::Approx(0.5 * m * (0.5 * m + 1)));
    const auto p = squeezing_parameters(s, n.unitOrthogonal(), n);
    CHECK(p.xi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.xi_r == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(css(m, Eigen::Vector3d(1, 1, 0)), ArgumentError);
}

TEST_CASE("one-axis twisting") {
  const int m = 20;
  const auto x = css(m, Eigen::Vector3d::UnitX());
  const auto same = one_axis_twisting(x, 0.0);
  CHECK((same.amplitudes() - x.amplitudes()).norm() < 1e-15);

  RandomStream rng(9);
  for (int i = 0; i < 10; ++i) {
    const double chi_t = rng.uniform(-2.0, 2.0);
    const auto s = one_axis_twisting(x, chi_t);
    CHECK(s.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.expectation(Eigen::Vector3d::UnitZ()) ==
          doctest::Approx(x.expectation(Eigen::Vector3d::UnitZ())).scale(1.0));
    CHECK(s.j_squared() == doctest::Approx(110.0).epsilon(1e-12));
    // <Jx> = J cos^{2J−1}(χt).
    CHECK(s.expectation(Eigen::Vector3d::UnitX()) ==
          doctest::Approx(10.0 * std::pow(std::cos(chi_t), 19)).scale(1.0));
  }

  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) grid.push_back(0.3 * i / 200);
  const auto scan = twisting_scan(m, grid);
  CHECK(scan.xi_r[scan.best] < 1.0);
  CHECK(scan.angle[scan.best] > 1e-3);
  CHECK(scan.angle[scan.best] < pi - 1e-3);

  // Scan result agrees with the exact minimum eigenvalue of the transverse covariance.
  const auto s = one_axis_twisting(x, scan.chi_t[scan.best]);
  const auto p = metrology_squeezing(s);
  Eigen::Matrix2d cov;
  const Eigen::Vector3d e1 = Eigen::Vector3d::UnitY(), e2 = Eigen::Vector3d::UnitZ();
  const double vp = s.variance((e1 + e2).normalized()), vm = s.variance((e1 - e2).normalized());
  cov << s.variance(e1), 0.5 * (vp - vm), 0.5 * (vp - vm), s.variance(e2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  CHECK(p.min_variance == doctest::Approx(eig.eigenvalues()(0)).epsilon(1e-9));
  CHECK(s.variance(p.min_axis) == doctest::Approx(p.min_variance).epsilon(1e-9));
}

TEST_CASE("rotations and the uncertainty relation") {
  const int m = 8;
  const auto z = css(m, Eigen::Vector3d::UnitZ());
  const auto r = rotated(z, Eigen::Vector3d::UnitY(), pi / 2);
  CHECK(r.expectation(Eigen::Vector3d::UnitX()) == doctest::Approx(4.0));

  RandomStream rng(77);
  const Eigen::Vector3d ax[3] = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                                 Eigen::Vector3d::UnitZ()};
  for (int i = 0; i < 100; ++i) {
    auto s = i % 2 ? random_state(m, rng)
                   : rotated(one_axis_twisting(css(m, Eigen::Vector3d::UnitX()), rng.uniform(0, 3)),
                             Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized(),
                             rng.uniform(0, 2 * pi));
    for (int k = 0; k < 3; ++k) {
      const auto& a = ax[k];
      const auto& b = ax[(k + 1) % 3];
      const auto& c = ax[(k + 2) % 3];
      CHECK(std::sqrt(s.variance(a) * s.variance(b)) >= 0.5 * std::abs(s.expectation(c)) - 1e-12);
    }
    CHECK(s.j_squared() == doctest::Approx(20.0).epsilon(1e-12));
  }
}

TEST_CASE("undefined squeezing parameters") {
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(5);
  a(2) = 1.0;  // m = 0, no mean spin
  const CollectiveSpinState dicke(4, a);
  CHECK_THROWS_AS(metrology_squeezing(dicke), EstimationError);
  CHECK_THROWS_AS(squeezing_parameters(css(4, Eigen::Vector3d::UnitZ()), Eigen::Vector3d::UnitX(),
                                       Eigen::Vector3d::UnitY()),
                  EstimationError);
}
