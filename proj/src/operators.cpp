#include "hpeel/operators.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hpeel/linalg.hpp"

namespace hpeel {

// ---------------------------------------------------------------------------
// Geometry

Contour2D star_contour(Eigen::Index n) {
  if (n < 16) throw std::invalid_argument("contour needs at least 16 points");
  Contour2D c;
  c.points.resize(n, 2);
  c.normals.resize(n, 2);
  c.weights.resize(n);
  c.curvature.resize(n);
  const double step = 2.0 * M_PI / double(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = step * double(i);
    const double r = 1.0 + 0.3 * std::cos(5.0 * t);
    const double rp = -1.5 * std::sin(5.0 * t);
    const double rpp = -7.5 * std::cos(5.0 * t);
    const double ct = std::cos(t), st = std::sin(t);
    const double gx = r * ct, gy = r * st;
    const double dx = rp * ct - r * st, dy = rp * st + r * ct;
    const double ddx = rpp * ct - 2.0 * rp * st - r * ct;
    const double ddy = rpp * st + 2.0 * rp * ct - r * st;
    const double speed = std::hypot(dx, dy);
    c.points(i, 0) = gx;
    c.points(i, 1) = gy;
    c.normals(i, 0) = dy / speed;
    c.normals(i, 1) = -dx / speed;
    c.weights(i) = speed * step;
    c.curvature(i) = (dx * ddy - dy * ddx) / (speed * speed * speed);
  }
  // Self-intersecting or collapsing parameterizations show up as point
  // spacings far below the nominal arclength step.
  double min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    min_gap = std::min(min_gap, (c.points.row(i) - c.points.row(j)).norm());
  }
  if (min_gap < 1e-3 * 2.0 * M_PI / double(n)) {
    throw std::runtime_error("degenerate contour parameterization");
  }
  return c;
}

Matrix sphere_points(Eigen::Index n, std::uint64_t seed) {
  Matrix g = gaussian_matrix(n, 3, seed);
  for (Eigen::Index i = 0; i < n; ++i) g.row(i) /= g.row(i).norm();
  return g;
}

Matrix line_with_noise_points(Eigen::Index n, int dim, double sigma,
                              std::uint64_t seed) {
  Matrix dir = gaussian_matrix(1, dim, mix_seed(seed, 1));
  dir /= dir.cwiseAbs().maxCoeff();
  Matrix pts(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (double(i) + 0.5) / double(n) - 0.5;
    pts.row(i) = Eigen::RowVectorXd::Constant(dim, 0.5) + t * dir;
  }
  if (sigma > 0.0) {
    pts += sigma * gaussian_matrix(n, dim, mix_seed(seed, 2));
  }
  return pts;
}

Matrix uniform_grid_points(int per_dim, int dim) {
  Eigen::Index total = 1;
  for (int j = 0; j < dim; ++j) total *= per_dim;
  Matrix pts(total, dim);
  for (Eigen::Index i = 0; i < total; ++i) {
    Eigen::Index rem = i;
    for (int j = 0; j < dim; ++j) {
      pts(i, j) = (double(rem % per_dim) + 0.5) / double(per_dim);
      rem /= per_dim;
    }
  }
  return pts;
}

Matrix random_cloud(Eigen::Index n, int dim, std::uint64_t seed) {
  SplitMix64 stream(seed);
  Matrix pts(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) pts(i, j) = stream.next_closed_open();
  }
  return pts;
}

Matrix equispaced_1d(Eigen::Index n) {
  Matrix pts(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts(i, 0) = (double(i) + 0.5) / double(n);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Assemblies

Matrix assemble_bie_double_layer(const Contour2D& contour) {
  const Eigen::Index n = contour.points.rows();
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::RowVector2d diff =
          contour.points.row(i) - contour.points.row(j);
      const double dot = diff.dot(contour.normals.row(j));
      const double v =
          dot / (4.0 * M_PI * diff.squaredNorm()) * contour.weights(j);
      a(i, j) = v;
      row_sum += v;
    }
    a(i, i) = -0.5 - row_sum;  // null-field: D 1 = -(1/2) 1
    a(i, i) += 0.5;            // system matrix is (1/2) I + D
  }
  return a;
}

Matrix assemble_single_layer(const Contour2D& contour) {
  const Eigen::Index n = contour.points.rows();
  Matrix s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        s(i, i) = 0.0;
        continue;
      }
      const double dist = (contour.points.row(i) - contour.points.row(j)).norm();
      s(i, j) = -std::log(dist) / (2.0 * M_PI) * contour.weights(j);
    }
  }
  return s;
}

Matrix assemble_adjoint_double_layer(const Contour2D& contour, bool inward) {
  const Eigen::Index n = contour.points.rows();
  const double sign = inward ? -1.0 : 1.0;
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        d(i, i) = sign * contour.curvature(i) / (4.0 * M_PI) * contour.weights(i);
        continue;
      }
      const Eigen::RowVector2d diff =
          contour.points.row(i) - contour.points.row(j);
      const double dot = sign * diff.dot(contour.normals.row(i));
      d(i, j) = dot / (2.0 * M_PI * diff.squaredNorm()) * contour.weights(j);
    }
  }
  return d;
}

Matrix assemble_inverse_distance(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (points.row(i) - points.row(j)).norm();
      if (dist < 1e-12) throw std::invalid_argument("duplicate points");
      a(i, j) = 1.0 / dist;
      a(j, i) = a(i, j);
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// N2D

N2dOperator::N2dOperator(const Contour2D& contour) {
  const Eigen::Index n = contour.points.rows();
  if (n > kMaxSize) {
    throw std::invalid_argument("n2d dense factorization capped at 8192");
  }
  s_ = assemble_single_layer(contour);
  system_ = assemble_adjoint_double_layer(contour, /*inward=*/false);
  system_.diagonal().array() += 0.5;
  lu_.compute(system_);
  // Partial-pivot LU always completes; detect singular systems by residual
  // growth on a probe.
  const Matrix probe = gaussian_matrix(n, 1, 17);
  const Matrix sol = lu_.solve(probe);
  if (!sol.allFinite() ||
      (system_ * sol - probe).norm() > 1e-8 * probe.norm()) {
    throw std::runtime_error("singular (1/2) I + D* factorization");
  }
}

Matrix N2dOperator::apply(const Matrix& x) const {
  return s_ * lu_.solve(x);
}

Matrix N2dOperator::apply_adjoint(const Matrix& x) const {
  return lu_.transpose().solve(s_.transpose() * x);
}

Matrix N2dOperator::dense() const {
  if (rows() > 4096) throw std::invalid_argument("dense mirror capped at 4096");
  return s_ * lu_.solve(Matrix::Identity(rows(), rows()));
}

// ---------------------------------------------------------------------------
// Banded Cholesky / frontal operator

void BandedCholesky::factor(Matrix band) {
  const Eigen::Index n = band.cols();
  const Eigen::Index bw = band.rows() - 1;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = band(0, j);
    if (!(pivot > 0.0)) {
      throw std::runtime_error("banded Cholesky factorization failure");
    }
    const double l = std::sqrt(pivot);
    band(0, j) = l;
    const Eigen::Index reach = std::min(bw, n - 1 - j);
    for (Eigen::Index k = 1; k <= reach; ++k) band(k, j) /= l;
    for (Eigen::Index c = j + 1; c <= j + reach; ++c) {
      const double ljc = band(c - j, j);
      for (Eigen::Index r = c; r <= j + reach; ++r) {
        band(r - c, c) -= band(r - j, j) * ljc;
      }
    }
  }
  band_ = std::move(band);
}

Matrix BandedCholesky::solve(const Matrix& rhs) const {
  const Eigen::Index n = band_.cols();
  const Eigen::Index bw = band_.rows() - 1;
  Matrix x = rhs;
  for (Eigen::Index j = 0; j < n; ++j) {
    x.row(j) /= band_(0, j);
    const Eigen::Index reach = std::min(bw, n - 1 - j);
    for (Eigen::Index k = 1; k <= reach; ++k) {
      x.row(j + k) -= band_(k, j) * x.row(j);
    }
  }
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const Eigen::Index reach = std::min(bw, n - 1 - j);
    for (Eigen::Index k = 1; k <= reach; ++k) {
      x.row(j) -= band_(k, j) * x.row(j + k);
    }
    x.row(j) /= band_(0, j);
  }
  return x;
}

namespace {

// Five-point stencil on an n_sep x half subgrid, nodes ordered row-major
// (index = row * half + col) so the bandwidth is `half`.
Matrix side_stencil_band(Eigen::Index n_sep, int half) {
  const Eigen::Index n = n_sep * half;
  Matrix band = Matrix::Zero(half + 1, n);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    const int col = static_cast<int>(idx % half);
    band(0, idx) = 4.0;
    if (col + 1 < half) band(1, idx) = -1.0;       // (row, col + 1)
    if (idx + half < n) band(half, idx) = -1.0;    // (row + 1, col)
  }
  return band;
}

}  // namespace

FrontalOperator::FrontalOperator(Eigen::Index n_sep, int width)
    : n_(n_sep), width_(width), half_((width - 1) / 2) {
  if (n_sep < 4) throw std::invalid_argument("separator needs >= 4 nodes");
  if (width % 2 == 0 || width < 3) {
    throw std::invalid_argument("grid width must be odd and >= 3");
  }
  left_.factor(side_stencil_band(n_, half_));
  right_.factor(side_stencil_band(n_, half_));
}

// C_{3s} C_{ss}^{-1} C_{s3} x for one side: the separator couples to the
// adjacent subgrid column with -1 entries.
Matrix FrontalOperator::side_coupling(const Matrix& x, bool right) const {
  const BandedCholesky& chol = right ? right_ : left_;
  // Column adjacent to the separator: local col half_-1 for the left block,
  // local col 0 for the right block.
  const int touch = right ? 0 : half_ - 1;
  Matrix rhs = Matrix::Zero(n_ * half_, x.cols());
  for (Eigen::Index row = 0; row < n_; ++row) {
    rhs.row(row * half_ + touch) = -x.row(row);
  }
  const Matrix sol = chol.solve(rhs);
  Matrix out(n_, x.cols());
  for (Eigen::Index row = 0; row < n_; ++row) {
    out.row(row) = -sol.row(row * half_ + touch);
  }
  return out;
}

Matrix FrontalOperator::apply(const Matrix& x) const {
  // C_33 x: tridiagonal along the separator column.
  Matrix y = 4.0 * x;
  y.topRows(n_ - 1) -= x.bottomRows(n_ - 1);
  y.bottomRows(n_ - 1) -= x.topRows(n_ - 1);
  y -= side_coupling(x, false);
  y -= side_coupling(x, true);
  return y;
}

// ---------------------------------------------------------------------------
// Counting decorator

Matrix CountingOperator::apply(const Matrix& x) const {
  const auto t0 = std::chrono::steady_clock::now();
  Matrix y = inner_->apply(x);
  const std::chrono::duration<double> dt =
      std::chrono::steady_clock::now() - t0;
  std::lock_guard<std::mutex> lock(mu_);
  stats_.forward_cols += x.cols();
  stats_.forward_calls += 1;
  stats_.forward_seconds += dt.count();
  return y;
}

Matrix CountingOperator::apply_adjoint(const Matrix& x) const {
  const auto t0 = std::chrono::steady_clock::now();
  Matrix y = inner_->apply_adjoint(x);
  const std::chrono::duration<double> dt =
      std::chrono::steady_clock::now() - t0;
  std::lock_guard<std::mutex> lock(mu_);
  stats_.adjoint_cols += x.cols();
  stats_.adjoint_calls += 1;
  stats_.adjoint_seconds += dt.count();
  return y;
}

CountingOperator::Stats CountingOperator::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

void CountingOperator::reset() {
  std::lock_guard<std::mutex> lock(mu_);
  stats_ = Stats{};
}

// ---------------------------------------------------------------------------
// Synthetic rank-structured ground truth

namespace {

void scatter_block(Matrix& a, const std::vector<int>& rows,
                   const std::vector<int>& cols, const Matrix& block) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      a(rows[i], cols[j]) = block(i, j);
    }
  }
}

Matrix orth_gaussian(Eigen::Index rows, int k, std::uint64_t seed) {
  const int cols = static_cast<int>(std::min<Eigen::Index>(rows, k));
  return qr_orthonormal(gaussian_matrix(rows, cols, seed)).q;
}

}  // namespace

Matrix synth_rank_structured(const BoxTree& tree, const AdjacencyInfo& adj,
                             RepFormat format, int k, std::uint64_t seed) {
  const Eigen::Index n = tree.num_points();
  if (n > 4096) throw std::invalid_argument("synthetic dense capped at 4096");
  Matrix a = Matrix::Zero(n, n);

  // Shared bases for the uniform and nested formats.
  std::vector<Matrix> bu, bv;
  if (format != RepFormat::kH1) {
    bu.resize(tree.num_boxes());
    bv.resize(tree.num_boxes());
    for (int l = tree.depth(); l >= 1; --l) {
      for (int id : tree.level_boxes(l)) {
        const Box& b = tree.box(id);
        const Eigen::Index rows = static_cast<Eigen::Index>(b.points.size());
        if (format == RepFormat::kUnifH1 || b.is_leaf()) {
          bu[id] = orth_gaussian(rows, k, mix_seed(seed, 101, id));
          bv[id] = orth_gaussian(rows, k, mix_seed(seed, 102, id));
        } else {
          // Nested: the long basis is the children's bases times a random
          // orthonormal transfer.
          auto nest = [&](const std::vector<Matrix>& child_bases,
                          std::uint64_t s) {
            Eigen::Index stacked = 0;
            for (int c : b.children) stacked += child_bases[c].cols();
            const Matrix t = orth_gaussian(stacked, k, s);
            Matrix out(rows, t.cols());
            Eigen::Index off = 0;
            for (std::size_t ci = 0; ci < b.children.size(); ++ci) {
              const Matrix& cb = child_bases[b.children[ci]];
              const Matrix piece = cb * t.middleRows(off, cb.cols());
              off += cb.cols();
              const auto& rws = b.child_rows[ci];
              for (std::size_t r = 0; r < rws.size(); ++r) {
                out.row(rws[r]) = piece.row(r);
              }
            }
            return out;
          };
          bu[id] = nest(bu, mix_seed(seed, 103, id));
          bv[id] = nest(bv, mix_seed(seed, 104, id));
        }
      }
    }
  }

  for (int l = 2; l <= tree.depth(); ++l) {
    for (auto [alpha, beta] : admissible_pairs(tree, adj, l)) {
      const auto& rows = tree.box(alpha).points;
      const auto& cols = tree.box(beta).points;
      Matrix block;
      if (format == RepFormat::kH1) {
        const Matrix gu =
            gaussian_matrix(rows.size(), k, mix_seed(seed, 201, alpha, beta));
        const Matrix gv =
            gaussian_matrix(k, cols.size(), mix_seed(seed, 202, alpha, beta));
        block = gu * gv / std::sqrt(double(k));
      } else {
        const Matrix core = gaussian_matrix(bu[alpha].cols(), bv[beta].cols(),
                                            mix_seed(seed, 203, alpha, beta));
        block = bu[alpha] * core * bv[beta].transpose();
      }
      scatter_block(a, rows, cols, block);
    }
  }
  for (auto [lam, mu] : dense_pairs(tree, adj)) {
    const auto& rows = tree.box(lam).points;
    const auto& cols = tree.box(mu).points;
    scatter_block(a, rows, cols,
                  gaussian_matrix(rows.size(), cols.size(),
                                  mix_seed(seed, 204, lam, mu)));
  }
  return a;
}

}  // namespace hpeel
