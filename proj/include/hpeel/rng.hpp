#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace hpeel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Deterministic 64-bit stream generator (splitmix64). The update is
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
///   z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31
/// which is frozen as the project-wide generator: the same seed produces the
/// same stream in any reimplementation.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform double in (0, 1], using the top 53 bits.
  double next_open_closed();

  /// Uniform double in [0, 1), using the top 53 bits.
  double next_closed_open();

 private:
  std::uint64_t state_;
};

/// Combines a seed with distinguishing tags (level, box id, phase, ...) into
/// a new seed. Order-sensitive and collision-resistant enough for stream
/// separation.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

template <typename... Tags>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, Tags... rest) {
  return mix_seed(mix_seed(seed, tag), static_cast<std::uint64_t>(rest)...);
}

/// rows x cols matrix of iid standard normal entries, filled row-major from a
/// SplitMix64 stream through the Box-Muller transform (pairs (u1, u2) with
/// u1 in (0,1], u2 in [0,1); the sine variate of each pair is consumed as the
/// following entry). A given (rows, cols, seed) always reproduces the same
/// matrix.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                       std::uint64_t seed);

}  // namespace hpeel
