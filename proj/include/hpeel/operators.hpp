#pragma once

#include <cstdint>
#include <memory>
#include <mutex>

#include "hpeel/box_tree.hpp"
#include "hpeel/hmatrix.hpp"
#include "hpeel/linear_operator.hpp"

namespace hpeel {

// ---------------------------------------------------------------------------
// Geometry generators

/// Smooth star contour r(t) = 1 + 0.3 cos(5t) sampled at n equispaced
/// parameters, with outward unit normals and trapezoid quadrature weights
/// (arclength speed times 2*pi/n).
struct Contour2D {
  Matrix points;   // n x 2
  Matrix normals;  // n x 2, outward
  Vector weights;
  Vector curvature;
};
Contour2D star_contour(Eigen::Index n);

Matrix sphere_points(Eigen::Index n, std::uint64_t seed);  // n x 3, unit norm
Matrix line_with_noise_points(Eigen::Index n, int dim, double sigma,
                              std::uint64_t seed);
Matrix uniform_grid_points(int per_dim, int dim);  // cell centers
Matrix random_cloud(Eigen::Index n, int dim, std::uint64_t seed);
Matrix equispaced_1d(Eigen::Index n);

// ---------------------------------------------------------------------------
// Dense assemblies

/// Nystrom system (1/2) I + D for the interior Laplace double layer on the
/// contour; kernel (x - y).n(y) / (4 pi |x - y|^2), diagonal forced by the
/// null-field row sum D 1 = -(1/2) 1, so the assembled matrix annihilates
/// constants.
Matrix assemble_bie_double_layer(const Contour2D& contour);

/// Punctured-trapezoid single layer -(1/2 pi) log|x - y| with zero diagonal.
Matrix assemble_single_layer(const Contour2D& contour);

/// Adjoint double layer n(x).(x - y) / (2 pi |x - y|^2) with the smooth
/// curvature diagonal; with the outward normal, (1/2) I + D* is invertible
/// (D* maps constants through +1/2). `inward` flips the normal.
Matrix assemble_adjoint_double_layer(const Contour2D& contour, bool inward);

Matrix assemble_inverse_distance(const Matrix& points);  // zero diagonal

// ---------------------------------------------------------------------------
// Operators

class DenseOperator : public LinearOperator {
 public:
  explicit DenseOperator(Matrix a) : a_(std::move(a)) {}
  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Matrix apply(const Matrix& x) const override { return a_ * x; }
  Matrix apply_adjoint(const Matrix& x) const override {
    return a_.transpose() * x;
  }
  const Matrix& dense() const { return a_; }

 private:
  Matrix a_;
};

/// Neumann-to-Dirichlet product S ((1/2) I + D*)^{-1}, applied through a
/// precomputed LU factorization; apply cap is enforced at construction.
class N2dOperator : public LinearOperator {
 public:
  static constexpr Eigen::Index kMaxSize = 8192;

  explicit N2dOperator(const Contour2D& contour);
  Eigen::Index rows() const override { return s_.rows(); }
  Eigen::Index cols() const override { return s_.rows(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_adjoint(const Matrix& x) const override;
  Matrix dense() const;  // N <= 4096

 private:
  Matrix s_;
  Matrix system_;  // (1/2) I + D* (inward normal)
  Eigen::PartialPivLU<Matrix> lu_;
};

/// Symmetric positive definite banded Cholesky solver (lower band storage).
class BandedCholesky {
 public:
  BandedCholesky() = default;
  /// band(k, j) = A(j + k, j), k = 0..bandwidth.
  void factor(Matrix band);
  Matrix solve(const Matrix& rhs) const;
  Eigen::Index size() const { return band_.cols(); }

 private:
  Matrix band_;
};

/// Schur complement of the middle separator column of the five-point stencil
/// on an n_sep x width grid. Applies through two banded Cholesky solves.
class FrontalOperator : public LinearOperator {
 public:
  FrontalOperator(Eigen::Index n_sep, int width = 51);
  Eigen::Index rows() const override { return n_; }
  Eigen::Index cols() const override { return n_; }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_adjoint(const Matrix& x) const override { return apply(x); }

 private:
  Matrix side_coupling(const Matrix& x, bool right) const;

  Eigen::Index n_ = 0;
  int width_ = 0;
  int half_ = 0;
  BandedCholesky left_, right_;
};

/// Wraps an operator and tallies applied columns and wall time per side;
/// accumulation is mutex-guarded.
class CountingOperator : public LinearOperator {
 public:
  struct Stats {
    std::int64_t forward_cols = 0;
    std::int64_t adjoint_cols = 0;
    std::int64_t forward_calls = 0;
    std::int64_t adjoint_calls = 0;
    double forward_seconds = 0.0;
    double adjoint_seconds = 0.0;
  };

  explicit CountingOperator(const LinearOperator& inner) : inner_(&inner) {}
  Eigen::Index rows() const override { return inner_->rows(); }
  Eigen::Index cols() const override { return inner_->cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_adjoint(const Matrix& x) const override;
  bool reentrant() const override { return inner_->reentrant(); }

  Stats stats() const;
  void reset();

 private:
  const LinearOperator* inner_;
  mutable std::mutex mu_;
  mutable Stats stats_;
};

// ---------------------------------------------------------------------------
// Synthetic ground truth

/// Dense matrix whose admissible blocks are exactly rank <= k with the
/// sharing pattern of `format` (per-pair factors, shared per-box bases, or
/// nested bases) and dense gaussian leaf blocks.
Matrix synth_rank_structured(const BoxTree& tree, const AdjacencyInfo& adj,
                             RepFormat format, int k, std::uint64_t seed);

}  // namespace hpeel
