#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>

#include "igc/rng.hpp"

namespace igc {

// A linear map R^d -> R^D with an exact transpose, reproducible from a seed
// on every host. Implementations must be immutable after construction.
class Projection {
 public:
  virtual ~Projection() = default;
  virtual Eigen::VectorXd forward(const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd adjoint(const Eigen::VectorXd& y) const = 0;
  virtual std::size_t big_dim() const = 0;
  virtual std::size_t small_dim() const = 0;
};

using ProjectionFactory = std::function<std::unique_ptr<Projection>(
    std::uint64_t seed, std::size_t big_dim, std::size_t small_dim)>;

// Seed schedule shared by client and server so matrices never cross the wire.
namespace seeds {
constexpr std::uint64_t kSubspaceTag = 0x53554253ULL;  // "SUBS"
constexpr std::uint64_t kRoundTag = 0x524f554eULL;     // "ROUN"
constexpr std::uint64_t kClientTag = 0x434c4945ULL;    // "CLIE"
constexpr std::uint64_t kDataTag = 0x44415441ULL;      // "DATA"
constexpr std::uint64_t kInitTag = 0x494e4954ULL;      // "INIT"
constexpr std::uint64_t kNoiseTag = 0x4e4f4953ULL;     // "NOIS"

inline std::uint64_t subspace(std::uint64_t master, std::uint64_t k) {
  return derive_seed(master, kSubspaceTag, k);
}
// Epoch e (1-based) shares the schedule with subspace index e-1, so the
// time-varying protocol's first epoch uses the same matrix as a static run
// with the same master seed (K=1 / E=1 degeneracies line up exactly).
inline std::uint64_t epoch(std::uint64_t master, std::uint64_t e) {
  return subspace(master, e - 1);
}
inline std::uint64_t round(std::uint64_t master, std::uint64_t e,
                           std::uint64_t t) {
  return derive_seed(derive_seed(master, kRoundTag, e), t);
}
inline std::uint64_t client_round(std::uint64_t master, std::uint64_t e,
                                  std::uint64_t t, std::uint64_t client) {
  return derive_seed(round(master, e, t), kClientTag, client);
}
}  // namespace seeds

}  // namespace igc
