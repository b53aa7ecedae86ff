#include <cmath>

#include "doctest.h"
#include "hpeel/linalg.hpp"
#include "hpeel/operators.hpp"

using namespace hpeel;

namespace {

Matrix random_orthonormal(Eigen::Index n, int k, std::uint64_t seed) {
  return qr_orthonormal(gaussian_matrix(n, k, seed)).q;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double spectral_norm(const Matrix& m) {
  return Eigen::BDCSVD<Matrix>(m).singularValues()(0);
}

}  // namespace

TEST_CASE("gaussian matrix shapes and determinism") {
  const Matrix empty = gaussian_matrix(0, 5, 42);
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 5);

  const Matrix a = gaussian_matrix(3, 3, 7);
  const Matrix b = gaussian_matrix(3, 3, 7);
  CHECK(a == b);
  const Matrix c = gaussian_matrix(3, 3, 8);
  CHECK(a != c);
}

TEST_CASE("gaussian matrix moments") {
  const Matrix g = gaussian_matrix(1000, 1, 123);
  const double mean = g.mean();
  const double var = (g.array() - mean).square().sum() / double(g.size() - 1);
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::abs(var - 1.0) < 0.15);
}

TEST_CASE("qr_orthonormal identity and contracts") {
  const Matrix eye = Matrix::Identity(3, 3);
  const OrthoBasis basis = qr_orthonormal(eye);
  CHECK(basis.q.cols() == 3);
  CHECK(max_abs(basis.q.cwiseAbs() - eye) < 1e-14);

  const Matrix m = gaussian_matrix(10, 4, 5);
  const Matrix q = qr_orthonormal(m, 4).q;
  CHECK(q.cols() == 4);
  CHECK(max_abs(q.transpose() * q - Matrix::Identity(4, 4)) <= 1e-12);
}

TEST_CASE("qr_orthonormal rank-deficient input") {
  const Matrix v = gaussian_matrix(8, 1, 11);
  Matrix m(8, 2);
  m.col(0) = v;
  m.col(1) = 2.0 * v;
  const OrthoBasis basis = qr_orthonormal(m);
  CHECK(basis.q.cols() == 1);
  CHECK(basis.dropped_rank == 1);
  const Matrix proj = basis.q * (basis.q.transpose() * m);
  CHECK((proj - m).norm() <= 1e-12 * m.norm());
}

TEST_CASE("qr_orthonormal projection error tracks best rank") {
  // |M - Q Q^T M| <= |M - M_j| + 1e-10 |M| with Q spanning the numerical
  // rank.
  const Matrix u = random_orthonormal(30, 5, 1);
  const Matrix v = random_orthonormal(20, 5, 2);
  Vector s(5);
  s << 10, 5, 1, 0.1, 0.01;
  const Matrix m = u * s.asDiagonal() * v.transpose();
  const Matrix q = qr_orthonormal(m, 5).q;
  CHECK(spectral_norm(m - q * (q.transpose() * m)) <= 1e-10 * m.norm());
}

TEST_CASE("svd_trunc diagonal and zero cases") {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 3, 2, 1;
  const SvdResult r = svd_trunc(m, TruncationSpec::fixed_rank(2, 0));
  REQUIRE(r.rank() == 2);
  CHECK(r.sigma(0) == doctest::Approx(3.0));
  CHECK(r.sigma(1) == doctest::Approx(2.0));
  CHECK(spectral_norm(m - r.u * r.sigma.asDiagonal() * r.v.transpose()) ==
        doctest::Approx(1.0));

  const SvdResult zero = svd_trunc(Matrix::Zero(4, 4),
                                   TruncationSpec::fixed_rank(2, 0));
  CHECK(zero.rank() == 0);
}

TEST_CASE("svd_trunc relative tolerance finds exact rank") {
  const Matrix a = gaussian_matrix(40, 1, 3), b = gaussian_matrix(40, 1, 4);
  const Matrix c = gaussian_matrix(40, 1, 5), d = gaussian_matrix(40, 1, 6);
  const Matrix m = a * b.transpose() + c * d.transpose();
  const SvdResult r = svd_trunc(m, TruncationSpec::rel_tol(1e-10, 40));
  CHECK(r.rank() == 2);
}

TEST_CASE("pinv_apply identity, solve oracle, zero") {
  const Matrix rhs = gaussian_matrix(6, 3, 9);
  CHECK(max_abs(pinv_apply(Matrix::Identity(6, 6), rhs) - rhs) < 1e-12);

  const Matrix c = gaussian_matrix(8, 8, 10) + 8.0 * Matrix::Identity(8, 8);
  const Matrix x = pinv_apply(c, rhs.topRows(8).eval());
  const Matrix direct = c.partialPivLu().solve(rhs.topRows(8).eval());
  CHECK((x - direct).norm() <= 1e-10 * direct.norm());

  CHECK(max_abs(pinv_apply(Matrix::Zero(5, 4), gaussian_matrix(5, 2, 1))) ==
        0.0);
}

TEST_CASE("compress_double_random recovers synthetic low rank") {
  const int k = 6;
  const Matrix u = random_orthonormal(60, k, 21);
  const Matrix v = random_orthonormal(50, k, 22);
  const Matrix b = gaussian_matrix(k, k, 23);
  const Matrix a = u * b * v.transpose();
  DenseOperator op(a);
  const UBV f = compress_double_random(op, TruncationSpec::fixed_rank(k, 10), 7);
  CHECK(spectral_norm(a - f.u * f.b * f.v.transpose()) <= 1e-10 * spectral_norm(a));

  DenseOperator zero(Matrix::Zero(20, 20));
  const UBV fz = compress_double_random(zero, TruncationSpec::fixed_rank(3, 5), 7);
  CHECK(fz.b.size() == 0);

  DenseOperator eye(Matrix::Identity(5, 5));
  const UBV fi = compress_double_random(eye, TruncationSpec::fixed_rank(5, 5), 7);
  CHECK(spectral_norm(Matrix::Identity(5, 5) -
                      fi.u * fi.b * fi.v.transpose()) <= 1e-10);
}

TEST_CASE("compress_two_stage recovers synthetic low rank") {
  const int k = 5;
  const Matrix u = random_orthonormal(40, k, 31);
  const Matrix v = random_orthonormal(40, k, 32);
  const Matrix b = gaussian_matrix(k, k, 33);
  const Matrix a = u * b * v.transpose();
  DenseOperator op(a);
  const UBV f = compress_two_stage(op, TruncationSpec::fixed_rank(k, 10), 3);
  CHECK(spectral_norm(a - f.u * f.b * f.v.transpose()) <= 1e-10 * spectral_norm(a));

  // Symmetric full-rank input is reproduced exactly at full rank.
  Matrix sym = gaussian_matrix(50, 50, 34);
  sym = (sym * sym.transpose()).eval();
  DenseOperator symop(sym);
  const UBV fs = compress_two_stage(symop, TruncationSpec::fixed_rank(50, 0), 3);
  CHECK(spectral_norm(sym - fs.u * fs.b * fs.v.transpose()) <=
        1e-10 * spectral_norm(sym));

  Matrix e11 = Matrix::Zero(4, 4);
  e11(0, 0) = 1.0;
  DenseOperator elem(e11);
  const UBV fe = compress_two_stage(elem, TruncationSpec::fixed_rank(1, 3), 4);
  REQUIRE(fe.u.cols() == 1);
  CHECK(std::abs(std::abs(fe.u(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(fe.b(0, 0)) - 1.0) < 1e-12);
}

TEST_CASE("two compression routes agree on column span") {
  const int k = 4;
  const Matrix u = random_orthonormal(32, k, 41);
  const Matrix v = random_orthonormal(32, k, 42);
  const Matrix a = u * gaussian_matrix(k, k, 43) * v.transpose();
  DenseOperator op(a);
  const auto spec = TruncationSpec::fixed_rank(k, 8);
  const UBV f1 = compress_double_random(op, spec, 99);
  const UBV f2 = compress_two_stage(op, spec, 99);
  // Same first-stage seed: identical sample Y, so the column spans match up
  // to the factorization (principal angles ~ 0).
  const Matrix overlap = f1.u.transpose() * f2.u;
  const Vector cosines = Eigen::BDCSVD<Matrix>(overlap).singularValues();
  CHECK(cosines.minCoeff() >= 1.0 - 1e-8);
}

TEST_CASE("power method relative error") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 3, 2;  // approx - ref = diag(2, 1)
  DenseOperator approx(d);
  DenseOperator ref(Matrix::Identity(2, 2));
  CHECK(rel_error_power_method(approx, ref, 20, 5) ==
        doctest::Approx(2.0).epsilon(1e-6));

  DenseOperator same(d);
  CHECK(rel_error_power_method(approx, same, 10, 5) <= 1e-14);
}

TEST_CASE("power method approaches dense spectral norm") {
  // Eigengap >= 1.5 so 20 iterations land within 5%.
  const Matrix u = random_orthonormal(100, 100, 51);
  const Matrix v = random_orthonormal(100, 100, 52);
  Vector s(100);
  for (int i = 0; i < 100; ++i) s(i) = (i == 0 ? 3.0 : 2.0 / (1.0 + i));
  const Matrix e = u * s.asDiagonal() * v.transpose();
  DenseOperator op(e);
  const double est = norm_power_method(op, 20, 7);
  CHECK(est <= 3.0 * (1.0 + 1e-12));
  CHECK(est >= 3.0 / 1.05);
}

TEST_CASE("randomized rangefinder error bound holds statistically") {
  // 200 trials, k = 10, p = 10: failures allowed on at most 1% of trials.
  const int n = 200, k = 10, p = 10;
  int pass = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t seed = 1000 + trial;
    const Matrix u = random_orthonormal(n, n, mix_seed(seed, 1));
    const Matrix v = random_orthonormal(n, n, mix_seed(seed, 2));
    Vector s(n);
    for (int i = 0; i < n; ++i) s(i) = std::pow(0.8, i);
    const Matrix a = u * s.asDiagonal() * v.transpose();
    const Matrix g = gaussian_matrix(n, k + p, mix_seed(seed, 3));
    const Matrix q = qr_orthonormal(a * g).q;
    const double err = spectral_norm(a - q * (q.transpose() * a));
    const double bound =
        (1.0 + 11.0 * std::sqrt(double(k + p)) * std::sqrt(double(n))) * s(k);
    if (err <= bound) ++pass;
  }
  CHECK(pass >= 198);
}
