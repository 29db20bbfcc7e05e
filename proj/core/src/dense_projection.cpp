#include "igc/dense_projection.hpp"

#include <Eigen/QR>
#include <stdexcept>

#include "igc/fastfood.hpp"
#include "igc/rng.hpp"

namespace igc {

DenseOrthonormalProjection::DenseOrthonormalProjection(std::uint64_t seed,
                                                       std::size_t big_dim,
                                                       std::size_t small_dim) {
  if (small_dim > big_dim) {
    throw std::invalid_argument(
        "DenseOrthonormalProjection: small_dim exceeds big_dim");
  }
  DetRng rng(derive_seed(seed, 0x4f525448ULL));  // "ORTH"
  Eigen::MatrixXd gauss(big_dim, small_dim);
  for (std::size_t j = 0; j < small_dim; ++j) {
    for (std::size_t i = 0; i < big_dim; ++i) {
      gauss(i, j) = rng.next_gaussian();
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(big_dim, small_dim);
  // Fix column signs so the draw is a deterministic function of the seed
  // independent of the QR implementation's sign convention.
  for (std::size_t j = 0; j < small_dim; ++j) {
    const double r = qr.matrixQR()(j, j);
    if (r < 0) basis_.col(j) = -basis_.col(j);
  }
}

Eigen::VectorXd DenseOrthonormalProjection::forward(
    const Eigen::VectorXd& s) const {
  if (s.size() != basis_.cols()) {
    throw std::invalid_argument("DenseOrthonormalProjection: bad input length");
  }
  return basis_ * s;
}

Eigen::VectorXd DenseOrthonormalProjection::adjoint(
    const Eigen::VectorXd& y) const {
  if (y.size() != basis_.rows()) {
    throw std::invalid_argument("DenseOrthonormalProjection: bad input length");
  }
  return basis_.transpose() * y;
}

ProjectionFactory fastfood_factory() {
  return [](std::uint64_t seed, std::size_t big_dim, std::size_t small_dim) {
    return std::make_unique<FastfoodMatrix>(seed, big_dim, small_dim);
  };
}

ProjectionFactory dense_orthonormal_factory() {
  return [](std::uint64_t seed, std::size_t big_dim, std::size_t small_dim) {
    return std::make_unique<DenseOrthonormalProjection>(seed, big_dim,
                                                        small_dim);
  };
}

}  // namespace igc
