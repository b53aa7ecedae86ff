#pragma once

#include <cstdint>
#include <tuple>

#include <Eigen/Dense>

#include "hpeel/linear_operator.hpp"
#include "hpeel/rng.hpp"

namespace hpeel {

/// How aggressively low-rank factorizations are truncated. Either a fixed
/// target rank k (with sampling width k + oversample) or a relative singular
/// value tolerance.
struct TruncationSpec {
  enum class Mode { kFixedRank, kRelTol };

  Mode mode = Mode::kFixedRank;
  int rank = 1;
  int oversample = 10;
  double tol = 0.0;

  static TruncationSpec fixed_rank(int k, int p = 10);
  static TruncationSpec rel_tol(double eps, int width_cap);

  /// Sampling width r = k + p.
  int sample_width() const { return rank + oversample; }
  void validate() const;
};

/// Relative diagonal threshold below which pivoted-QR columns are dropped.
inline constexpr double kQrRankDropTol = 1e-14;
/// Relative singular value cutoff for pseudoinverse application.
inline constexpr double kPinvCutoff = 1e-12;

struct OrthoBasis {
  Matrix q;               // orthonormal columns
  int dropped_rank = 0;   // columns removed as numerically dependent
};

/// Orthonormal basis of the column space of m, optionally capped at
/// max_rank columns. Columns whose pivoted-QR diagonal falls below
/// kQrRankDropTol relative to the largest are dropped (reported, not an
/// error).
OrthoBasis qr_orthonormal(const Matrix& m, int max_rank = -1);

struct SvdResult {
  Matrix u;
  Vector sigma;  // descending, strictly positive entries only
  Matrix v;
  int rank() const { return static_cast<int>(sigma.size()); }
};

/// Truncated SVD. Fixed-rank mode keeps min(k, positive rank) triplets;
/// relative-tolerance mode keeps the smallest j with sigma_{j+1} <= eps *
/// sigma_1.
SvdResult svd_trunc(const Matrix& m, const TruncationSpec& spec);

/// Minimum-norm least squares solution pinv(c) * rhs. Singular values of c
/// below kPinvCutoff * sigma_1 are treated as zero.
Matrix pinv_apply(const Matrix& c, const Matrix& rhs);

struct UBV {
  Matrix u;  // orthonormal columns
  Matrix b;
  Matrix v;  // orthonormal columns
};

/// A ~ U B V^T from one randomized sample of A and one of A^T: Y = A G1,
/// Z = A^T G2, U = qr(Y, k), V = qr(Z, k), then
/// B = pinv(G2^T U) (G2^T Y) pinv(V^T G1). Consumes exactly one apply and
/// one adjoint apply of width k + p.
UBV compress_double_random(const LinearOperator& op, const TruncationSpec& spec,
                           std::uint64_t seed);

/// A ~ U B V^T from a randomized sample followed by a deterministic one:
/// Y = A G, U = qr(Y, k), W = A^T U, [V, B^T] = qr(W).
UBV compress_two_stage(const LinearOperator& op, const TruncationSpec& spec,
                       std::uint64_t seed);

/// Power-method estimate of |op_approx - op_ref| / |op_ref| (spectral norms,
/// each from `iters` rounds of the E^T E iteration; 2*iters applies of each
/// operator per norm).
double rel_error_power_method(const LinearOperator& op_approx,
                              const LinearOperator& op_ref, int iters,
                              std::uint64_t seed);

/// Largest singular value of op by the same power iteration.
double norm_power_method(const LinearOperator& op, int iters,
                         std::uint64_t seed);

}  // namespace hpeel
