#include "igc/fastfood.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

#include "igc/fwht.hpp"
#include "igc/rng.hpp"

namespace igc {

namespace {
// Field tags keying independent streams off the matrix seed.
constexpr std::uint64_t kTagSigns = 0x5349474eULL;  // "SIGN"
constexpr std::uint64_t kTagPerm = 0x5045524dULL;   // "PERM"
constexpr std::uint64_t kTagGauss = 0x47415553ULL;  // "GAUS"
}  // namespace

FastfoodMatrix::FastfoodMatrix(std::uint64_t seed, std::size_t big_dim,
                               std::size_t small_dim)
    : seed_(seed), big_dim_(big_dim), small_dim_(small_dim) {
  if (big_dim == 0 || small_dim == 0) {
    throw std::invalid_argument("FastfoodMatrix: dimensions must be positive");
  }
  ell_ = 0;
  padded_dim_ = 1;
  while (padded_dim_ < big_dim_) {
    padded_dim_ <<= 1;
    ++ell_;
  }
  if (small_dim_ > padded_dim_) {
    throw std::invalid_argument(
        "FastfoodMatrix: small_dim exceeds padded dimension 2^ell");
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(small_dim_) *
                           static_cast<double>(padded_dim_));

  DetRng sign_rng(derive_seed(seed_, kTagSigns));
  signs_.resize(padded_dim_);
  for (auto& b : signs_) b = sign_rng.next_sign();

  DetRng perm_rng(derive_seed(seed_, kTagPerm));
  perm_ = random_permutation(padded_dim_, perm_rng);

  DetRng gauss_rng(derive_seed(seed_, kTagGauss));
  gauss_.resize(padded_dim_);
  for (auto& g : gauss_) g = gauss_rng.next_gaussian();
}

Eigen::VectorXd FastfoodMatrix::forward(const Eigen::VectorXd& s) const {
  if (static_cast<std::size_t>(s.size()) != small_dim_) {
    throw std::invalid_argument("FastfoodMatrix::forward: bad input length");
  }
  const std::size_t n = padded_dim_;
  std::vector<double> buf(n, 0.0);
  for (std::size_t i = 0; i < small_dim_; ++i) buf[i] = s[i];
  fwht_inplace(buf);
  for (std::size_t i = 0; i < n; ++i) buf[i] *= gauss_[i];
  std::vector<double> permuted(n);
  for (std::size_t i = 0; i < n; ++i) permuted[i] = buf[perm_[i]];
  fwht_inplace(permuted);
  Eigen::VectorXd out(big_dim_);
  for (std::size_t i = 0; i < big_dim_; ++i) {
    out[i] = scale_ * signs_[i] * permuted[i];
  }
  return out;
}

Eigen::VectorXd FastfoodMatrix::adjoint(const Eigen::VectorXd& y) const {
  if (static_cast<std::size_t>(y.size()) != big_dim_) {
    throw std::invalid_argument("FastfoodMatrix::adjoint: bad input length");
  }
  const std::size_t n = padded_dim_;
  std::vector<double> buf(n, 0.0);
  for (std::size_t i = 0; i < big_dim_; ++i) buf[i] = signs_[i] * y[i];
  fwht_inplace(buf);
  // Transpose of the permutation scatters instead of gathering.
  std::vector<double> unpermuted(n);
  for (std::size_t i = 0; i < n; ++i) unpermuted[perm_[i]] = buf[i];
  for (std::size_t i = 0; i < n; ++i) unpermuted[i] *= gauss_[i];
  fwht_inplace(unpermuted);
  Eigen::VectorXd out(small_dim_);
  for (std::size_t i = 0; i < small_dim_; ++i) out[i] = scale_ * unpermuted[i];
  return out;
}

}  // namespace igc
