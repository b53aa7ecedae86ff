#include "hpeel/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hpeel/flops.hpp"

namespace hpeel::flops {

namespace {
thread_local std::int64_t tally = 0;
}

std::int64_t current() { return tally; }
void add(std::int64_t n) { tally += n; }
void reset() { tally = 0; }

}  // namespace hpeel::flops

namespace hpeel {

TruncationSpec TruncationSpec::fixed_rank(int k, int p) {
  TruncationSpec spec;
  spec.mode = Mode::kFixedRank;
  spec.rank = k;
  spec.oversample = p;
  spec.validate();
  return spec;
}

TruncationSpec TruncationSpec::rel_tol(double eps, int width_cap) {
  TruncationSpec spec;
  spec.mode = Mode::kRelTol;
  spec.tol = eps;
  spec.rank = width_cap;
  spec.oversample = 0;
  spec.validate();
  return spec;
}

void TruncationSpec::validate() const {
  if (mode == Mode::kFixedRank) {
    if (rank < 1) throw std::invalid_argument("fixed rank must be >= 1");
  } else {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
    if (rank < 1) throw std::invalid_argument("width cap must be >= 1");
  }
  if (oversample < 0) throw std::invalid_argument("negative oversampling");
}

OrthoBasis qr_orthonormal(const Matrix& m, int max_rank) {
  OrthoBasis out;
  if (m.rows() == 0 || m.cols() == 0) {
    out.q = Matrix(m.rows(), 0);
    return out;
  }
  if (!m.allFinite()) throw std::invalid_argument("non-finite matrix in qr");
  flops::add(flops::qr(m.rows(), m.cols()));

  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  const Matrix& r = qr.matrixR();
  const Eigen::Index kmax = std::min(m.rows(), m.cols());
  const double pivot0 = std::abs(r(0, 0));
  Eigen::Index keep = 0;
  while (keep < kmax && std::abs(r(keep, keep)) > kQrRankDropTol * pivot0) {
    ++keep;
  }
  const Eigen::Index numerical_rank = keep;
  if (max_rank >= 0) keep = std::min<Eigen::Index>(keep, max_rank);
  out.dropped_rank = static_cast<int>(kmax - numerical_rank);

  Matrix thin = Matrix::Identity(m.rows(), keep);
  thin.applyOnTheLeft(qr.householderQ());
  out.q = std::move(thin);
  return out;
}

SvdResult svd_trunc(const Matrix& m, const TruncationSpec& spec) {
  SvdResult out;
  if (m.rows() == 0 || m.cols() == 0) {
    out.u = Matrix(m.rows(), 0);
    out.sigma = Vector(0);
    out.v = Matrix(m.cols(), 0);
    return out;
  }
  if (!m.allFinite()) throw std::invalid_argument("non-finite matrix in svd");
  flops::add(flops::svd(m.rows(), m.cols()));

  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const Eigen::Index full = sv.size();
  Eigen::Index keep = 0;
  if (spec.mode == TruncationSpec::Mode::kFixedRank) {
    while (keep < std::min<Eigen::Index>(full, spec.rank) && sv(keep) > 0.0) {
      ++keep;
    }
  } else {
    const double cut = spec.tol * sv(0);
    while (keep < full && sv(keep) > cut) ++keep;
    keep = std::min<Eigen::Index>(keep, spec.rank);
  }
  out.u = svd.matrixU().leftCols(keep);
  out.sigma = sv.head(keep);
  out.v = svd.matrixV().leftCols(keep);
  return out;
}

Matrix pinv_apply(const Matrix& c, const Matrix& rhs) {
  if (c.rows() != rhs.rows()) {
    throw std::invalid_argument("pinv_apply: row mismatch");
  }
  if (c.rows() == 0 || c.cols() == 0) return Matrix::Zero(c.cols(), rhs.cols());
  if (!c.allFinite()) throw std::invalid_argument("non-finite matrix in pinv");
  flops::add(flops::svd(c.rows(), c.cols()) +
             flops::gemm(c.cols(), rhs.cols(), c.rows()));

  Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = kPinvCutoff * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * (svd.matrixU().transpose() * rhs);
}

UBV compress_double_random(const LinearOperator& op, const TruncationSpec& spec,
                           std::uint64_t seed) {
  if (op.rows() <= 0 || op.cols() <= 0) {
    throw std::invalid_argument("operator with empty shape");
  }
  const int r = spec.sample_width();
  const Matrix g1 = gaussian_matrix(op.cols(), r, mix_seed(seed, 1));
  const Matrix g2 = gaussian_matrix(op.rows(), r, mix_seed(seed, 2));
  const Matrix y = op.apply(g1);
  if (y.rows() != op.rows()) {
    throw std::invalid_argument("operator apply returned inconsistent shape");
  }
  const Matrix z = op.apply_adjoint(g2);

  UBV out;
  out.u = qr_orthonormal(y, spec.rank).q;
  out.v = qr_orthonormal(z, spec.rank).q;
  // G2^T A G1 is read off the sample Y; no further products with A.
  const Matrix middle = g2.transpose() * y;
  const Matrix left = pinv_apply(g2.transpose() * out.u, middle);
  out.b = pinv_apply((out.v.transpose() * g1).transpose(), left.transpose())
              .transpose();
  return out;
}

UBV compress_two_stage(const LinearOperator& op, const TruncationSpec& spec,
                       std::uint64_t seed) {
  if (op.rows() <= 0 || op.cols() <= 0) {
    throw std::invalid_argument("operator with empty shape");
  }
  const int r = spec.sample_width();
  const Matrix g = gaussian_matrix(op.cols(), r, mix_seed(seed, 1));
  const Matrix y = op.apply(g);
  UBV out;
  out.u = qr_orthonormal(y, spec.rank).q;
  const Matrix w = op.apply_adjoint(out.u);
  // W = V B^T, so an unpivoted QR of W yields V and B.
  Eigen::HouseholderQR<Matrix> qr(w);
  const Eigen::Index k = std::min(w.rows(), w.cols());
  Matrix thin = Matrix::Identity(w.rows(), k);
  thin.applyOnTheLeft(qr.householderQ());
  out.v = std::move(thin);
  const Matrix rfac =
      qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  out.b = rfac.transpose();
  return out;
}

namespace {

double power_norm_diff(const LinearOperator* a, const LinearOperator* b,
                       int iters, std::uint64_t seed) {
  const Eigen::Index n = a->cols();
  Matrix x = gaussian_matrix(n, 1, seed);
  x /= x.norm();
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    Matrix y = a->apply(x);
    if (b != nullptr) y -= b->apply(x);
    Matrix z = a->apply_adjoint(y);
    if (b != nullptr) z -= b->apply_adjoint(y);
    const double nz = z.norm();
    if (nz == 0.0) return 0.0;
    estimate = std::sqrt(nz);
    x = z / nz;
  }
  return estimate;
}

}  // namespace

double norm_power_method(const LinearOperator& op, int iters,
                         std::uint64_t seed) {
  if (iters < 1) throw std::invalid_argument("power method needs iters >= 1");
  return power_norm_diff(&op, nullptr, iters, seed);
}

double rel_error_power_method(const LinearOperator& op_approx,
                              const LinearOperator& op_ref, int iters,
                              std::uint64_t seed) {
  if (iters < 1) throw std::invalid_argument("power method needs iters >= 1");
  if (op_approx.rows() != op_ref.rows() || op_approx.cols() != op_ref.cols()) {
    throw std::invalid_argument("operator dimension mismatch");
  }
  const double err =
      power_norm_diff(&op_approx, &op_ref, iters, mix_seed(seed, 11));
  const double ref = power_norm_diff(&op_ref, nullptr, iters, mix_seed(seed, 12));
  if (ref == 0.0) return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return err / ref;
}

}  // namespace hpeel
