#pragma once

#include <cstdint>

namespace hpeel::flops {

/// Thread-local floating point operation tally. Compression-side code (block
/// products in compressed-representation applies, factorizations, solves)
/// reports analytic counts here; black-box operators do not, so the tally is
/// the "net" work of a compression run.
std::int64_t current();
void add(std::int64_t n);
void reset();

inline std::int64_t gemm(std::int64_t m, std::int64_t n, std::int64_t k) {
  return 2 * m * n * k;
}
inline std::int64_t qr(std::int64_t m, std::int64_t n) {
  return 2 * m * n * n;
}
inline std::int64_t svd(std::int64_t m, std::int64_t n) {
  return m >= n ? 6 * m * n * n + 11 * n * n * n : 6 * n * m * m + 11 * m * m * m;
}

}  // namespace hpeel::flops
