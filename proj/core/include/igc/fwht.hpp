#pragma once

#include <cstddef>
#include <span>

namespace igc {

// In-place fast Walsh-Hadamard transform: v <- H v with the unnormalized
// 2^ell Hadamard matrix (entries +-1). O(n log n) time, O(1) extra space.
// Throws std::invalid_argument if the length is not a power of two.
void fwht_inplace(std::span<double> v);

}  // namespace igc
