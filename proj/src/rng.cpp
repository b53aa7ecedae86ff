#include "hpeel/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hpeel {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

std::uint64_t scramble(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t SplitMix64::next() {
  state_ += kGamma;
  return scramble(state_);
}

double SplitMix64::next_open_closed() {
  return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

double SplitMix64::next_closed_open() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return scramble(seed * kGamma + tag + 1);
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                       std::uint64_t seed) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative shape");
  Matrix out(rows, cols);
  SplitMix64 stream(seed);
  bool have_spare = false;
  double spare = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (have_spare) {
        out(i, j) = spare;
        have_spare = false;
        continue;
      }
      const double u1 = stream.next_open_closed();
      const double u2 = stream.next_closed_open();
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * M_PI * u2;
      out(i, j) = radius * std::cos(angle);
      spare = radius * std::sin(angle);
      have_spare = true;
    }
  }
  return out;
}

}  // namespace hpeel
