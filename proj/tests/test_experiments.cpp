#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "igc/dense_projection.hpp"
#include "igc/errors.hpp"
#include "igc/experiments.hpp"
#include "igc/rng.hpp"

using namespace igc;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  DetRng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  return v;
}

QuadraticOracle isotropic_problem(std::size_t dim, std::uint64_t seed,
                                  double noise = 0.0) {
  return QuadraticOracle(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)),
                         random_vector(static_cast<Eigen::Index>(dim), seed),
                         noise);
}

// A few dominant directions carrying nearly all of the loss.
QuadraticOracle dominant_problem(std::size_t dim, std::size_t dominant,
                                 std::uint64_t seed) {
  Eigen::VectorXd spectrum =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), 0.01);
  spectrum.head(static_cast<Eigen::Index>(dominant)).setConstant(100.0);
  return QuadraticOracle(spectrum,
                         random_vector(static_cast<Eigen::Index>(dim), seed));
}

}  // namespace

// --------------------------------------------------------------------------
// Estimate statistics and least squares

TEST_CASE("estimate summary statistics") {
  RhoEstimate est;
  est.fractions = {0.5, 0.1, 0.9, 0.3};
  CHECK(est.median() == doctest::Approx(0.4));
  CHECK(est.mean() == doctest::Approx(0.45));
  est.fractions = {0.2, 0.2, 0.2};
  CHECK(est.median() == doctest::Approx(0.2));
  CHECK(est.standard_error() == doctest::Approx(0.0));
}

TEST_CASE("linear fit recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{1, 3, 5, 7, 9};
  const LinearFit fit = linear_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("linear fit on scattered data has partial r2") {
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{0, 2, 1, 3};
  const LinearFit fit = linear_fit(x, y);
  CHECK(fit.slope > 0.0);
  CHECK(fit.r2 > 0.0);
  CHECK(fit.r2 < 1.0);
}

// --------------------------------------------------------------------------
// Intrinsic-dimension probe

TEST_CASE("empty subspace cannot improve: fractions are one") {
  const QuadraticOracle problem = isotropic_problem(16, 1);
  const Eigen::VectorXd theta0 = random_vector(16, 2);
  const RhoEstimate est = estimate_intrinsic_rho(problem, theta0, 0, 5, 3);
  for (double f : est.fractions) CHECK(f == 1.0);
}

TEST_CASE("starting at the optimum: fractions are zero") {
  const QuadraticOracle problem = isotropic_problem(16, 1);
  const RhoEstimate est =
      estimate_intrinsic_rho(problem, problem.optimum(), 4, 5, 3);
  for (double f : est.fractions) CHECK(f == 0.0);
}

TEST_CASE("full-dimensional subspace closes the whole gap") {
  const QuadraticOracle problem = isotropic_problem(16, 1);
  const Eigen::VectorXd theta0 = random_vector(16, 2);
  const RhoEstimate est = estimate_intrinsic_rho(
      problem, theta0, 16, 5, 3, dense_orthonormal_factory());
  for (double f : est.fractions) CHECK(std::abs(f) <= 1e-8);
}

TEST_CASE("fractions live in the unit interval and shrink with d") {
  const QuadraticOracle problem = isotropic_problem(32, 5);
  const Eigen::VectorXd theta0 = random_vector(32, 6);
  double prev_median = 1.1;
  for (std::size_t d : {2, 8, 24, 32}) {
    const RhoEstimate est = estimate_intrinsic_rho(problem, theta0, d, 40, 7);
    for (double f : est.fractions) {
      CHECK(f >= -1e-9);
      CHECK(f <= 1.0 + 1e-9);
    }
    CHECK(est.median() <= prev_median + 0.05);
    prev_median = est.median();
  }
  CHECK(prev_median < 0.1);  // d = D leaves almost nothing
}

TEST_CASE("a dominant low-rank spectrum has small intrinsic dimension") {
  const QuadraticOracle problem = dominant_problem(64, 8, 9);
  const Eigen::VectorXd theta0 = random_vector(64, 10);
  const RhoEstimate wide = estimate_intrinsic_rho(problem, theta0, 16, 30, 11);
  const RhoEstimate narrow = estimate_intrinsic_rho(problem, theta0, 4, 30, 11);
  CHECK(wide.median() < 0.5);
  CHECK(narrow.median() > wide.median());
}

TEST_CASE("rank-deficient restricted problems take the flagged path") {
  // Spectrum of rank 2 in R^8 with d = 4: the restricted Hessian is singular.
  Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(8);
  spectrum[0] = 1.0;
  spectrum[1] = 2.0;
  const QuadraticOracle problem(spectrum, random_vector(8, 12));
  const Eigen::VectorXd theta0 = random_vector(8, 13);
  const RhoEstimate est = estimate_intrinsic_rho(problem, theta0, 4, 10, 15);
  CHECK(est.flagged_singular > 0);
  for (double f : est.fractions) CHECK(std::isfinite(f));
}

TEST_CASE("probe results are identical at any worker count") {
  const QuadraticOracle problem = isotropic_problem(24, 15);
  const Eigen::VectorXd theta0 = random_vector(24, 16);
  const RhoEstimate serial = estimate_intrinsic_rho(problem, theta0, 6, 12, 17);
  setenv("IGC_THREADS", "4", 1);
  CHECK(probe_thread_count() == 4);
  const RhoEstimate parallel =
      estimate_intrinsic_rho(problem, theta0, 6, 12, 17);
  unsetenv("IGC_THREADS");
  REQUIRE(serial.fractions.size() == parallel.fractions.size());
  for (std::size_t i = 0; i < serial.fractions.size(); ++i) {
    CHECK(serial.fractions[i] == parallel.fractions[i]);
  }
  CHECK(serial.flagged_singular == parallel.flagged_singular);
}

// --------------------------------------------------------------------------
// Descent probes

TEST_CASE("zero steps or zero learning rate change nothing") {
  const QuadraticOracle problem = isotropic_problem(16, 21);
  const Eigen::VectorXd theta0 = random_vector(16, 22);
  const double initial = problem.exact_loss(theta0);
  CHECK(probe_static(problem, theta0, 4, 0, 0.1, 5) == initial);
  CHECK(probe_static(problem, theta0, 4, 20, 0.0, 5) == initial);
}

TEST_CASE("static probe descends and is deterministic") {
  const QuadraticOracle problem = isotropic_problem(32, 23, 0.01);
  const Eigen::VectorXd theta0 = random_vector(32, 24);
  const double initial = problem.exact_loss(theta0);
  const double gap = probe_static(problem, theta0, 8, 60, 0.05, 5);
  CHECK(gap < initial);
  CHECK(probe_static(problem, theta0, 8, 60, 0.05, 5) == gap);
  CHECK(probe_static(problem, theta0, 8, 60, 0.05, 6) != gap);
}

TEST_CASE("oversized steps raise a step-size error") {
  const QuadraticOracle problem = isotropic_problem(16, 25);
  const Eigen::VectorXd theta0 = random_vector(16, 26);
  CHECK_THROWS_AS(probe_static(problem, theta0, 8, 200, 50.0, 5),
                  StepSizeError);
}

TEST_CASE("time-varying epoch gaps decay geometrically") {
  const QuadraticOracle problem = isotropic_problem(48, 27);
  const Eigen::VectorXd theta0 = random_vector(48, 28);
  const std::vector<double> gaps =
      probe_time_varying(problem, theta0, 12, 6, 40, 0.05, 31);
  REQUIRE(gaps.size() == 6);
  for (std::size_t e = 1; e < gaps.size(); ++e) {
    CHECK(gaps[e] <= gaps[e - 1] * (1.0 + 1e-9));
  }
  // Log-gap decay is close to linear: negative slope with a good fit.
  std::vector<double> x, y;
  for (std::size_t e = 0; e < gaps.size(); ++e) {
    x.push_back(static_cast<double>(e));
    y.push_back(std::log(gaps[e]));
  }
  const ProbeTolerances tol;
  const LinearFit fit = linear_fit(x, y);
  CHECK(fit.slope < 0.0);
  CHECK(fit.r2 >= tol.min_r2);
}

TEST_CASE("single-epoch time-varying probe equals the static probe") {
  const QuadraticOracle problem = isotropic_problem(32, 33, 0.01);
  const Eigen::VectorXd theta0 = random_vector(32, 34);
  const double st = probe_static(problem, theta0, 8, 30, 0.05, 41);
  const std::vector<double> tv =
      probe_time_varying(problem, theta0, 8, 1, 30, 0.05, 41);
  REQUIRE(tv.size() == 1);
  // The accumulator trajectories coincide; the time-varying client applies
  // incremental corrections, so the materialized loss agrees to rounding.
  CHECK(tv[0] == doctest::Approx(st).epsilon(1e-12));
}

TEST_CASE("one-subspace probe equals the static probe") {
  const QuadraticOracle problem = isotropic_problem(32, 35, 0.01);
  const Eigen::VectorXd theta0 = random_vector(32, 36);
  const double st = probe_static(problem, theta0, 8, 30, 0.05, 43);
  const double ks = probe_ksubspace(problem, theta0, 8, 1, 30, 0.05, 1, 43);
  CHECK(ks == st);
}

TEST_CASE("more clients reduce gradient-noise variance in the probe") {
  const QuadraticOracle problem = isotropic_problem(32, 37, 1.0);
  const Eigen::VectorXd theta0 = random_vector(32, 38);
  // Average the final gap over seeds; many clients should do at least as
  // well as one on a noisy problem.
  double solo = 0.0, crowd = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    solo += probe_ksubspace(problem, theta0, 8, 2, 40, 0.05, 1, 100 + s);
    crowd += probe_ksubspace(problem, theta0, 8, 2, 40, 0.05, 8, 100 + s);
  }
  CHECK(crowd < solo);
}
