#include "igc/fwht.hpp"

#include <stdexcept>

namespace igc {

void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fwht_inplace: length must be a power of two");
  }
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

}  // namespace igc
