#include <cmath>
#include <set>

#include "doctest.h"
#include "hpeel/coloring.hpp"
#include "test_helpers.hpp"

using namespace hpeel;
using namespace hpeel::testing;

namespace {

double adjoint_residual(const LinearOperator& op, std::uint64_t seed) {
  const Matrix x = gaussian_matrix(op.cols(), 1, mix_seed(seed, 1));
  const Matrix y = gaussian_matrix(op.rows(), 1, mix_seed(seed, 2));
  const double lhs = (op.apply(x).transpose() * y)(0, 0);
  const double rhs = (x.transpose() * op.apply_adjoint(y))(0, 0);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

int rank_at_tol(const Matrix& block, double tol) {
  const Vector s = Eigen::BDCSVD<Matrix>(block).singularValues();
  int r = 0;
  while (r < s.size() && s(r) > tol * s(0)) ++r;
  return r;
}

}  // namespace

TEST_CASE("double layer annihilates constants") {
  const Contour2D contour = star_contour(256);
  const Matrix a = assemble_bie_double_layer(contour);
  const Vector ones = Vector::Ones(256);
  CHECK((a * ones).norm() <= 1e-12 * spectral_norm(a));
  DenseOperator op(a);
  CHECK(adjoint_residual(op, 3) <= 1e-10);
}

TEST_CASE("double layer admissible blocks are strongly compressible") {
  const Eigen::Index n = 512;
  const Contour2D contour = star_contour(n);
  const Matrix a = assemble_bie_double_layer(contour);
  const TreeBundle b = make_tree(contour.points, 64);
  double worst = 0.0;
  for (int l = 2; l <= b.tree->depth(); ++l) {
    for (auto [alpha, beta] : admissible_pairs(*b.tree, *b.adj, l)) {
      const auto& rows = b.tree->box(alpha).points;
      const auto& cols = b.tree->box(beta).points;
      if (rows.size() < 24 || cols.size() < 24) continue;
      Matrix block(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
          block(i, j) = a(rows[i], cols[j]);
        }
      }
      const Vector s = Eigen::BDCSVD<Matrix>(block).singularValues();
      if (s(0) > 0.0) worst = std::max(worst, s(20) / s(0));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("n2d operator matches its dense composition") {
  const Eigen::Index n = 256;
  const Contour2D contour = star_contour(n);
  const N2dOperator op(contour);

  // Independent assembly of T = S ((1/2) I + D*)^{-1}.
  const Matrix s = assemble_single_layer(contour);
  Matrix sys = assemble_adjoint_double_layer(contour, false);
  sys.diagonal().array() += 0.5;
  const Matrix x = gaussian_matrix(n, 4, 5);
  const Matrix expect = s * sys.partialPivLu().solve(x);
  CHECK((op.apply(x) - expect).norm() <= 1e-11 * expect.norm());

  // Linearity probe.
  const Matrix x2 = gaussian_matrix(n, 4, 6);
  CHECK((op.apply(x + x2) - op.apply(x) - op.apply(x2)).norm() <=
        1e-11 * op.apply(x).norm());
  CHECK(adjoint_residual(op, 11) <= 1e-10);

  // The system matrix must be far from singular.
  const Vector sv = Eigen::BDCSVD<Matrix>(sys).singularValues();
  CHECK(sv(sv.size() - 1) >= 0.1);

  // Dense mirror agrees with black-box applies.
  const Matrix mirror = op.dense();
  CHECK((mirror * x - op.apply(x)).norm() <= 1e-12 * op.apply(x).norm());
}

TEST_CASE("n2d tree has symmetric structure so colorings can be shared") {
  const Contour2D contour = star_contour(512);
  const TreeBundle b = make_tree(contour.points, 64);
  for (int l = 2; l <= b.tree->depth(); ++l) {
    const auto pairs = admissible_pairs(*b.tree, *b.adj, l);
    std::set<std::pair<int, int>> all(pairs.begin(), pairs.end());
    for (auto [x, y] : pairs) CHECK(all.count({y, x}) == 1);
    // Identical requirement sets on both sides give identical colorings.
    const auto sets = build_constraints(*b.tree, *b.adj, l, SampleMode::kH1);
    const auto graph = build_graph(sets);
    const Coloring c1 = plan_coloring(*b.tree, sets, graph, SampleMode::kH1);
    const Coloring c2 = plan_coloring(*b.tree, sets, graph, SampleMode::kH1);
    CHECK(c1.color == c2.color);
  }
}

TEST_CASE("inverse distance kernel") {
  Eigen::MatrixXd two(2, 3);
  two << 0, 0, 0, 0.5, 0, 0;
  const Matrix a = assemble_inverse_distance(two);
  CHECK(a(0, 0) == 0.0);
  CHECK(a(0, 1) == doctest::Approx(2.0));
  CHECK(a(1, 0) == doctest::Approx(2.0));

  Eigen::MatrixXd dup(2, 3);
  dup.setZero();
  CHECK_THROWS_AS(assemble_inverse_distance(dup), std::invalid_argument);

  const Matrix pts = sphere_points(128, 5);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    CHECK(std::abs(pts.row(i).norm() - 1.0) <= 1e-12);
  }
  const Matrix kern = assemble_inverse_distance(pts);
  CHECK((kern - kern.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sphere kernel blocks stay moderately low rank") {
  const Matrix pts = sphere_points(1024, 9);
  const Matrix a = assemble_inverse_distance(pts);
  const TreeBundle b = make_tree(pts, 50);
  int worst = 0;
  for (int l = 2; l <= b.tree->depth(); ++l) {
    for (auto [alpha, beta] : admissible_pairs(*b.tree, *b.adj, l)) {
      const auto& rows = b.tree->box(alpha).points;
      const auto& cols = b.tree->box(beta).points;
      Matrix block(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
          block(i, j) = a(rows[i], cols[j]);
        }
      }
      worst = std::max(worst, rank_at_tol(block, 1e-6));
    }
  }
  CHECK(worst <= 45);
}

TEST_CASE("frontal operator matches the dense Schur complement") {
  const int n_sep = 6, width = 5, half = 2;
  const FrontalOperator op(n_sep, width);

  // Dense stencil on the 6 x 5 grid, then eliminate both sides explicitly.
  const int total = n_sep * width;
  auto idx = [&](int row, int col) { return row * width + col; };
  Matrix c = Matrix::Zero(total, total);
  for (int row = 0; row < n_sep; ++row) {
    for (int col = 0; col < width; ++col) {
      c(idx(row, col), idx(row, col)) = 4.0;
      if (row + 1 < n_sep) {
        c(idx(row, col), idx(row + 1, col)) = -1.0;
        c(idx(row + 1, col), idx(row, col)) = -1.0;
      }
      if (col + 1 < width) {
        c(idx(row, col), idx(row, col + 1)) = -1.0;
        c(idx(row, col + 1), idx(row, col)) = -1.0;
      }
    }
  }
  std::vector<int> left, right, sep;
  for (int row = 0; row < n_sep; ++row) {
    for (int col = 0; col < width; ++col) {
      if (col < half) left.push_back(idx(row, col));
      else if (col > half) right.push_back(idx(row, col));
      else sep.push_back(idx(row, col));
    }
  }
  auto sub = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
    Matrix m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = c(rows[i], cols[j]);
    }
    return m;
  };
  const Matrix schur =
      sub(sep, sep) -
      sub(sep, left) * sub(left, left).inverse() * sub(left, sep) -
      sub(sep, right) * sub(right, right).inverse() * sub(right, sep);

  const Matrix eye = Matrix::Identity(n_sep, n_sep);
  const Matrix got = op.apply(eye);
  CHECK((got - schur).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((got - got.transpose()).cwiseAbs().maxCoeff() <= 1e-11);
  CHECK(adjoint_residual(op, 13) <= 1e-11);

  // Positive definite: dense eigenvalues of the small case are positive.
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(schur);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("banded cholesky agrees with a dense solve") {
  const Eigen::Index n = 40, bw = 5;
  Matrix band = Matrix::Zero(bw + 1, n);
  Matrix dense = Matrix::Zero(n, n);
  SplitMix64 stream(4);
  for (Eigen::Index j = 0; j < n; ++j) {
    band(0, j) = 10.0 + stream.next_closed_open();
    dense(j, j) = band(0, j);
    for (Eigen::Index k = 1; k <= std::min(bw, n - 1 - j); ++k) {
      band(k, j) = stream.next_closed_open() - 0.5;
      dense(j + k, j) = band(k, j);
      dense(j, j + k) = band(k, j);
    }
  }
  BandedCholesky chol;
  chol.factor(band);
  const Matrix rhs = gaussian_matrix(n, 3, 6);
  CHECK((chol.solve(rhs) - dense.ldlt().solve(rhs)).norm() <=
        1e-11 * rhs.norm());

  Matrix bad = Matrix::Zero(2, 4);
  bad.row(0) << 1.0, -1.0, 1.0, 1.0;
  bad(1, 0) = 2.0;  // forces a negative pivot
  BandedCholesky fail;
  CHECK_THROWS_AS(fail.factor(bad), std::runtime_error);
}

TEST_CASE("line with noise geometry") {
  const Matrix straight = line_with_noise_points(200, 4, 0.0, 9);
  const Matrix centered =
      straight.rowwise() - straight.colwise().mean();
  const Vector s = Eigen::BDCSVD<Matrix>(centered).singularValues();
  CHECK(s(1) <= 1e-12 * s(0));

  const Matrix noisy = line_with_noise_points(200, 4, 0.2, 9);
  const Matrix ncentered = noisy.rowwise() - noisy.colwise().mean();
  const Vector ns = Eigen::BDCSVD<Matrix>(ncentered).singularValues();
  CHECK(ns(1) > 1e-3 * ns(0));
}

TEST_CASE("synthetic ground truth properties") {
  const TreeBundle b = make_tree(random_cloud(600, 1, 21), 64);
  const int k = 5;

  // Per-pair format: every admissible block has exact rank <= k.
  const Matrix h1 = synth_rank_structured(*b.tree, *b.adj, RepFormat::kH1, k, 3);
  for (int l = 2; l <= b.tree->depth(); ++l) {
    for (auto [alpha, beta] : admissible_pairs(*b.tree, *b.adj, l)) {
      const auto& rows = b.tree->box(alpha).points;
      const auto& cols = b.tree->box(beta).points;
      Matrix block(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
          block(i, j) = h1(rows[i], cols[j]);
        }
      }
      const Vector s = Eigen::BDCSVD<Matrix>(block).singularValues();
      if (s.size() > k) CHECK(s(k) <= 1e-13 * s(0));
    }
  }

  // Shared-basis format: the stacked row blocks of each box stay rank <= k.
  const Matrix uh =
      synth_rank_structured(*b.tree, *b.adj, RepFormat::kUnifH1, k, 4);
  for (int l = 2; l <= b.tree->depth(); ++l) {
    for (int alpha : b.tree->level_boxes(l)) {
      const auto& il = b.adj->interaction[alpha];
      if (il.empty()) continue;
      std::size_t cols = 0;
      for (int beta : il) cols += b.tree->box(beta).points.size();
      Matrix stack(b.tree->box(alpha).points.size(), cols);
      std::size_t off = 0;
      for (int beta : il) {
        for (std::size_t i = 0; i < b.tree->box(alpha).points.size(); ++i) {
          for (std::size_t j = 0; j < b.tree->box(beta).points.size(); ++j) {
            stack(i, off + j) =
                uh(b.tree->box(alpha).points[i], b.tree->box(beta).points[j]);
          }
        }
        off += b.tree->box(beta).points.size();
      }
      const Vector s = Eigen::BDCSVD<Matrix>(stack).singularValues();
      if (s.size() > k) CHECK(s(k) <= 1e-12 * s(0));
    }
  }

  // Dense leaf blocks are full rank.
  const auto pairs = dense_pairs(*b.tree, *b.adj);
  const auto [lam, mu] = pairs.front();
  Matrix leaf(b.tree->box(lam).points.size(), b.tree->box(mu).points.size());
  for (std::size_t i = 0; i < b.tree->box(lam).points.size(); ++i) {
    for (std::size_t j = 0; j < b.tree->box(mu).points.size(); ++j) {
      leaf(i, j) = h1(b.tree->box(lam).points[i], b.tree->box(mu).points[j]);
    }
  }
  const Vector ls = Eigen::BDCSVD<Matrix>(leaf).singularValues();
  CHECK(ls(ls.size() - 1) > 0.0);
}

TEST_CASE("nested synthetic satisfies the transfer relation") {
  const TreeBundle b = make_tree(equispaced_1d(512), 64);
  const int k = 4;
  const Matrix h2 = synth_rank_structured(*b.tree, *b.adj, RepFormat::kH2, k, 7);
  // For every box, rows of all far-field blocks (its own level and coarser)
  // lie in a rank-k subspace.
  for (int l = 3; l <= b.tree->depth(); ++l) {
    for (int alpha : b.tree->level_boxes(l)) {
      std::vector<int> far_cols;
      int walk = alpha;
      int level = l;
      while (level >= 2) {
        for (int beta : b.adj->interaction[walk]) {
          const auto& pts = b.tree->box(beta).points;
          far_cols.insert(far_cols.end(), pts.begin(), pts.end());
        }
        walk = b.tree->box(walk).parent;
        --level;
      }
      if (far_cols.empty()) continue;
      const auto& rows = b.tree->box(alpha).points;
      Matrix block(rows.size(), far_cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < far_cols.size(); ++j) {
          block(i, j) = h2(rows[i], far_cols[j]);
        }
      }
      const Vector s = Eigen::BDCSVD<Matrix>(block).singularValues();
      if (s.size() > k) CHECK(s(k) <= 1e-12 * s(0));
    }
  }
}

TEST_CASE("counting decorator") {
  DenseOperator inner(gaussian_matrix(30, 30, 3));
  CountingOperator counter(inner);
  counter.apply(gaussian_matrix(30, 7, 4));
  CHECK(counter.stats().forward_cols == 7);
  CHECK(counter.stats().forward_calls == 1);
  CHECK(counter.stats().adjoint_cols == 0);

  CountingOperator outer(static_cast<const LinearOperator&>(counter));
  outer.apply_adjoint(gaussian_matrix(30, 2, 5));
  CHECK(outer.stats().adjoint_cols == 2);
  CHECK(counter.stats().adjoint_cols == 2);  // one layer each

  counter.reset();
  CHECK(counter.stats().forward_cols == 0);
}

TEST_CASE("contour rejects too-coarse sampling") {
  CHECK_THROWS_AS(star_contour(8), std::invalid_argument);
}
