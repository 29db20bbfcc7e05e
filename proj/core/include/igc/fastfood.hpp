#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "igc/projection.hpp"

namespace igc {

// Seed-derived implicit D x d projection
//
//   A = Unpad_D . diag(B) . H . Pi . diag(G) . H . Pad_{2^ell}
//
// with H the unnormalized Hadamard matrix, B Rademacher signs, Pi a uniform
// permutation, G standard normals, all drawn deterministically from the seed.
// The scale 1/sqrt(d * 2^ell) makes E[A A^T] = I_D. Only O(2^ell) storage;
// forward and adjoint products run in O(D log D).
//
// Immutable after construction; forward/adjoint are pure and safe to call
// concurrently.
class FastfoodMatrix final : public Projection {
 public:
  FastfoodMatrix(std::uint64_t seed, std::size_t big_dim, std::size_t small_dim);

  // A s, for s of length d. Returns a length-D vector.
  Eigen::VectorXd forward(const Eigen::VectorXd& s) const override;

  // A^T y, for y of length D. Returns a length-d vector.
  Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const override;

  std::uint64_t seed() const { return seed_; }
  std::size_t big_dim() const override { return big_dim_; }
  std::size_t small_dim() const override { return small_dim_; }
  std::size_t padded_dim() const { return padded_dim_; }
  unsigned ell() const { return ell_; }
  double scale() const { return scale_; }

  const std::vector<double>& signs() const { return signs_; }
  const std::vector<std::uint32_t>& perm() const { return perm_; }
  const std::vector<double>& gauss() const { return gauss_; }

 private:
  std::uint64_t seed_;
  std::size_t big_dim_;
  std::size_t small_dim_;
  unsigned ell_;
  std::size_t padded_dim_;  // 2^ell
  double scale_;
  std::vector<double> signs_;
  std::vector<std::uint32_t> perm_;
  std::vector<double> gauss_;
};

}  // namespace igc
