#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "igc/projection.hpp"

namespace igc {

// Dense orthonormal-column projection: Q from the QR factorization of a
// seeded D x d Gaussian matrix, i.e. a uniform draw over the Grassmannian.
// O(D*d) storage, so only usable at small D. With d = D this is a full
// orthogonal matrix and A A^T = I exactly, which makes compressed runs
// coincide with uncompressed SGD (test hook).
class DenseOrthonormalProjection final : public Projection {
 public:
  DenseOrthonormalProjection(std::uint64_t seed, std::size_t big_dim,
                             std::size_t small_dim);

  Eigen::VectorXd forward(const Eigen::VectorXd& s) const override;
  Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const override;
  std::size_t big_dim() const override { return basis_.rows(); }
  std::size_t small_dim() const override { return basis_.cols(); }

  const Eigen::MatrixXd& basis() const { return basis_; }

 private:
  Eigen::MatrixXd basis_;
};

ProjectionFactory fastfood_factory();
ProjectionFactory dense_orthonormal_factory();

}  // namespace igc
