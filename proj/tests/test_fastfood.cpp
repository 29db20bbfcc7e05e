#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "dense_oracle.hpp"
#include "igc/fastfood.hpp"
#include "igc/rng.hpp"

using igc::DetRng;
using igc::FastfoodMatrix;
using igc::testing::dense_fastfood;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  DetRng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  return v;
}

}  // namespace

TEST_CASE("same seed reproduces the matrix field for field") {
  const FastfoodMatrix a(7, 10, 4);
  const FastfoodMatrix b(7, 10, 4);
  CHECK(a.signs() == b.signs());
  CHECK(a.perm() == b.perm());
  CHECK(a.gauss() == b.gauss());
  CHECK(a.scale() == b.scale());
}

TEST_CASE("different seeds give different gaussians") {
  const FastfoodMatrix a(7, 10, 4);
  const FastfoodMatrix b(8, 10, 4);
  CHECK(a.gauss() != b.gauss());
}

TEST_CASE("padding picks the smallest power of two") {
  const FastfoodMatrix m(3, 6, 2);
  CHECK(m.ell() == 3);
  CHECK(m.padded_dim() == 8);
  CHECK(m.signs().size() == 8);
  CHECK(m.gauss().size() == 8);
}

TEST_CASE("construction rejects bad dimensions") {
  CHECK_THROWS_AS(FastfoodMatrix(1, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(FastfoodMatrix(1, 6, 0), std::invalid_argument);
  // d larger than the padded space
  CHECK_THROWS_AS(FastfoodMatrix(1, 6, 9), std::invalid_argument);
}

TEST_CASE("forward/adjoint reject wrong lengths and map zero to zero") {
  const FastfoodMatrix m(3, 12, 4);
  CHECK_THROWS_AS(m.forward(Eigen::VectorXd::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(m.adjoint(Eigen::VectorXd::Zero(5)), std::invalid_argument);
  CHECK(m.forward(Eigen::VectorXd::Zero(4)).isZero(0.0));
  CHECK(m.adjoint(Eigen::VectorXd::Zero(12)).isZero(0.0));
}

TEST_CASE("forward is linear") {
  const FastfoodMatrix m(11, 20, 6);
  const Eigen::VectorXd x = random_vector(6, 1);
  const Eigen::VectorXd y = random_vector(6, 2);
  const Eigen::VectorXd lhs = m.forward(2.0 * x);
  const Eigen::VectorXd rhs = 2.0 * m.forward(x);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
  const Eigen::VectorXd combo = m.forward(0.3 * x - 1.7 * y);
  const Eigen::VectorXd parts = 0.3 * m.forward(x) - 1.7 * m.forward(y);
  CHECK((combo - parts).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("first column matches the dense materialization") {
  const FastfoodMatrix m(7, 8, 2);
  const Eigen::MatrixXd dense = dense_fastfood(m);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(2);
  e1[0] = 1.0;
  const Eigen::VectorXd col = m.forward(e1);
  CHECK((col - dense.col(0)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("adjoint matches dense A^T y at D=8, d=2") {
  const FastfoodMatrix m(7, 8, 2);
  const Eigen::MatrixXd dense = dense_fastfood(m);
  const Eigen::VectorXd y = random_vector(8, 3);
  const Eigen::VectorXd got = m.adjoint(y);
  const Eigen::VectorXd want = dense.transpose() * y;
  CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("dense-oracle equivalence over the small-dimension grid") {
  for (std::size_t big : {1, 3, 8, 17, 32, 50, 64}) {
    std::size_t padded = 1;
    while (padded < big) padded <<= 1;
    for (std::size_t small : {1, 2, 5, 8, 16}) {
      if (small > padded) continue;
      const FastfoodMatrix m(igc::derive_seed(big, small), big, small);
      const Eigen::MatrixXd dense = dense_fastfood(m);
      const Eigen::VectorXd s = random_vector(small, 100 + small);
      const Eigen::VectorXd y = random_vector(big, 200 + big);
      CHECK((m.forward(s) - dense * s).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK((m.adjoint(y) - dense.transpose() * y).lpNorm<Eigen::Infinity>() <
            1e-6);
    }
  }
}

TEST_CASE("adjoint identity <As, y> = <s, A^T y>") {
  const FastfoodMatrix m(21, 50, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd s = random_vector(8, 1000 + trial);
    const Eigen::VectorXd y = random_vector(50, 2000 + trial);
    const double lhs = m.forward(s).dot(y);
    const double rhs = s.dot(m.adjoint(y));
    CHECK(std::abs(lhs - rhs) <=
          1e-5 * std::max({std::abs(lhs), std::abs(rhs), 1e-9}));
  }
}

TEST_CASE("E[A A^T] x concentrates on x over fresh seeds") {
  // Smaller companion of the acceptance-level Monte-Carlo check.
  const std::size_t big = 64, small = 16, trials = 3000;
  const Eigen::VectorXd x = random_vector(big, 5).normalized();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(big);
  for (std::size_t t = 0; t < trials; ++t) {
    const FastfoodMatrix m(t, big, small);
    mean += m.forward(m.adjoint(x));
  }
  mean /= static_cast<double>(trials);
  CHECK((mean - x).lpNorm<Eigen::Infinity>() <=
        0.10 * x.lpNorm<Eigen::Infinity>());
}
