#include "hpeel/hmatrix.hpp"

#include <algorithm>
#include <stdexcept>

#include "hpeel/flops.hpp"

namespace hpeel {

const char* format_name(RepFormat f) {
  switch (f) {
    case RepFormat::kH1: return "h1";
    case RepFormat::kUnifH1: return "unif-h1";
    case RepFormat::kH2: return "h2";
  }
  return "?";
}

namespace detail {

Matrix gather_rows(const Matrix& x, const std::vector<int>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = x.row(idx[i]);
  return out;
}

void scatter_add_rows(Matrix& y, const std::vector<int>& idx,
                      const Matrix& rows) {
  for (std::size_t i = 0; i < idx.size(); ++i) y.row(idx[i]) += rows.row(i);
}

}  // namespace detail

namespace {

using detail::gather_rows;
using detail::scatter_add_rows;

void check_level(int level, int built, const char* what) {
  if (level > built) {
    throw std::runtime_error(std::string(what) +
                             ": representation incomplete for level " +
                             std::to_string(level));
  }
}

void add_to(Matrix& acc, const Matrix& term) {
  if (acc.size() == 0) {
    acc = term;
  } else {
    acc += term;
  }
}

std::int64_t matrix_count(const Matrix& m) {
  return static_cast<std::int64_t>(m.size());
}

void dense_contribution(const std::map<PairKey, Matrix>& dense,
                        const BoxTree& tree, const Matrix& x, Matrix& y,
                        bool adjoint) {
  for (const auto& [key, d] : dense) {
    const auto& rows_of = tree.box(adjoint ? key.second : key.first).points;
    const auto& cols_of = tree.box(adjoint ? key.first : key.second).points;
    const Matrix xin = gather_rows(x, cols_of);
    flops::add(flops::gemm(d.rows(), x.cols(), d.cols()));
    if (adjoint) {
      scatter_add_rows(y, rows_of, d.transpose() * xin);
    } else {
      scatter_add_rows(y, rows_of, d * xin);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// H1

H1Rep::H1Rep(std::shared_ptr<const BoxTree> t,
             std::shared_ptr<const AdjacencyInfo> a)
    : tree(std::move(t)), adj(std::move(a)) {
  if (tree) levels.resize(tree->depth() + 1);
}

Matrix H1Rep::apply_truncated(int level, const Matrix& x) const {
  check_level(level, built_level, "h1 apply");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (int l = 2; l <= std::min(level, tree->depth()); ++l) {
    for (const auto& [key, blk] : levels[l]) {
      const Matrix xin = gather_rows(x, tree->box(key.second).points);
      flops::add(flops::gemm(blk.v.cols(), x.cols(), blk.v.rows()) +
                 flops::gemm(blk.b.rows(), x.cols(), blk.b.cols()) +
                 flops::gemm(blk.u.rows(), x.cols(), blk.u.cols()));
      scatter_add_rows(y, tree->box(key.first).points,
                       blk.u * (blk.b * (blk.v.transpose() * xin)));
    }
  }
  return y;
}

Matrix H1Rep::apply_truncated_adjoint(int level, const Matrix& x) const {
  check_level(level, built_level, "h1 adjoint apply");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (int l = 2; l <= std::min(level, tree->depth()); ++l) {
    for (const auto& [key, blk] : levels[l]) {
      const Matrix xin = gather_rows(x, tree->box(key.first).points);
      flops::add(flops::gemm(blk.u.cols(), x.cols(), blk.u.rows()) +
                 flops::gemm(blk.b.cols(), x.cols(), blk.b.rows()) +
                 flops::gemm(blk.v.rows(), x.cols(), blk.v.cols()));
      scatter_add_rows(y, tree->box(key.second).points,
                       blk.v * (blk.b.transpose() * (blk.u.transpose() * xin)));
    }
  }
  return y;
}

Matrix H1Rep::apply(const Matrix& x) const {
  if (!dense_ready) throw std::runtime_error("h1 apply: dense blocks missing");
  Matrix y = apply_truncated(tree->depth(), x);
  dense_contribution(dense, *tree, x, y, false);
  return y;
}

Matrix H1Rep::apply_adjoint(const Matrix& x) const {
  if (!dense_ready) throw std::runtime_error("h1 apply: dense blocks missing");
  Matrix y = apply_truncated_adjoint(tree->depth(), x);
  dense_contribution(dense, *tree, x, y, true);
  return y;
}

StorageStats H1Rep::storage() const {
  StorageStats s;
  auto tally = [&s](int level, const char* cat, std::int64_t n) {
    s.breakdown[{level, cat}] += n;
    s.total += n;
  };
  for (int l = 0; l < static_cast<int>(levels.size()); ++l) {
    for (const auto& [key, blk] : levels[l]) {
      tally(l, "U", matrix_count(blk.u));
      tally(l, "B", matrix_count(blk.b));
      tally(l, "V", matrix_count(blk.v));
    }
  }
  for (const auto& [key, d] : dense) {
    tally(tree->box(key.first).level, "dense", matrix_count(d));
  }
  s.per_dof = double(s.total) / double(tree->num_points());
  return s;
}

// ---------------------------------------------------------------------------
// Uniform H1

UnifH1Rep::UnifH1Rep(std::shared_ptr<const BoxTree> t,
                     std::shared_ptr<const AdjacencyInfo> a)
    : tree(std::move(t)), adj(std::move(a)) {
  if (tree) {
    level_b.resize(tree->depth() + 1);
    box_u.resize(tree->num_boxes());
    box_v.resize(tree->num_boxes());
  }
}

Matrix UnifH1Rep::apply_truncated(int level, const Matrix& x) const {
  check_level(level, built_level, "unif-h1 apply");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  std::vector<Matrix> qhat(tree->num_boxes());
  std::vector<Matrix> uhat(tree->num_boxes());
  for (int l = 2; l <= std::min(level, tree->depth()); ++l) {
    for (const auto& [key, b] : level_b[l]) {
      Matrix& q = qhat[key.second];
      if (q.size() == 0) {
        const Matrix& v = box_v[key.second];
        q = v.transpose() * gather_rows(x, tree->box(key.second).points);
        flops::add(flops::gemm(v.cols(), x.cols(), v.rows()));
      }
      flops::add(flops::gemm(b.rows(), x.cols(), b.cols()));
      add_to(uhat[key.first], b * q);
    }
    for (const auto& [key, b] : level_b[l]) {
      Matrix& u = uhat[key.first];
      if (u.size() == 0) continue;
      const Matrix& ub = box_u[key.first];
      flops::add(flops::gemm(ub.rows(), x.cols(), ub.cols()));
      scatter_add_rows(y, tree->box(key.first).points, ub * u);
      u.resize(0, 0);
    }
  }
  return y;
}

Matrix UnifH1Rep::apply_truncated_adjoint(int level, const Matrix& x) const {
  check_level(level, built_level, "unif-h1 adjoint apply");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  std::vector<Matrix> qhat(tree->num_boxes());
  std::vector<Matrix> vhat(tree->num_boxes());
  for (int l = 2; l <= std::min(level, tree->depth()); ++l) {
    for (const auto& [key, b] : level_b[l]) {
      Matrix& q = qhat[key.first];
      if (q.size() == 0) {
        const Matrix& u = box_u[key.first];
        q = u.transpose() * gather_rows(x, tree->box(key.first).points);
        flops::add(flops::gemm(u.cols(), x.cols(), u.rows()));
      }
      flops::add(flops::gemm(b.cols(), x.cols(), b.rows()));
      add_to(vhat[key.second], b.transpose() * q);
    }
    for (const auto& [key, b] : level_b[l]) {
      Matrix& v = vhat[key.second];
      if (v.size() == 0) continue;
      const Matrix& vb = box_v[key.second];
      flops::add(flops::gemm(vb.rows(), x.cols(), vb.cols()));
      scatter_add_rows(y, tree->box(key.second).points, vb * v);
      v.resize(0, 0);
    }
  }
  return y;
}

Matrix UnifH1Rep::apply(const Matrix& x) const {
  if (!dense_ready) {
    throw std::runtime_error("unif-h1 apply: dense blocks missing");
  }
  Matrix y = apply_truncated(tree->depth(), x);
  dense_contribution(dense, *tree, x, y, false);
  return y;
}

Matrix UnifH1Rep::apply_adjoint(const Matrix& x) const {
  if (!dense_ready) {
    throw std::runtime_error("unif-h1 apply: dense blocks missing");
  }
  Matrix y = apply_truncated_adjoint(tree->depth(), x);
  dense_contribution(dense, *tree, x, y, true);
  return y;
}

StorageStats UnifH1Rep::storage() const {
  StorageStats s;
  auto tally = [&s](int level, const char* cat, std::int64_t n) {
    s.breakdown[{level, cat}] += n;
    s.total += n;
  };
  for (const Box& b : tree->boxes()) {
    tally(b.level, "U", matrix_count(box_u[b.id]));
    tally(b.level, "V", matrix_count(box_v[b.id]));
  }
  for (int l = 0; l < static_cast<int>(level_b.size()); ++l) {
    for (const auto& [key, b] : level_b[l]) tally(l, "B", matrix_count(b));
  }
  for (const auto& [key, d] : dense) {
    tally(tree->box(key.first).level, "dense", matrix_count(d));
  }
  s.per_dof = double(s.total) / double(tree->num_points());
  return s;
}

// ---------------------------------------------------------------------------
// H2

H2Rep::H2Rep(std::shared_ptr<const BoxTree> t,
             std::shared_ptr<const AdjacencyInfo> a)
    : tree(std::move(t)), adj(std::move(a)) {
  if (tree) {
    level_b.resize(tree->depth() + 1);
    const int nb = tree->num_boxes();
    long_u.resize(nb);
    long_v.resize(nb);
    short_u.resize(nb);
    short_v.resize(nb);
    sigma_in.resize(nb);
    sigma_out.resize(nb);
  }
}

namespace {

// Shared skeleton of the H2 forward and adjoint passes. `up` selects the
// bases used for outgoing expansions (V for the forward map, U for the
// adjoint); `down` the other family; `transpose_b` flips the coupling.
struct H2Pass {
  const BoxTree& tree;
  const std::vector<Matrix>& long_up;
  const std::vector<Matrix>& short_up;
  const std::vector<Matrix>& long_down;
  const std::vector<Matrix>& short_down;
  const std::vector<std::map<PairKey, Matrix>>& level_b;
  bool transpose_b;

  Matrix run(int level, const Matrix& x) const {
    Matrix y = Matrix::Zero(x.rows(), x.cols());
    if (level < 2) return y;
    const int depth = tree.depth();
    std::vector<Matrix> qhat(tree.num_boxes());
    std::vector<Matrix> uhat(tree.num_boxes());

    // Outgoing expansions, finest level first so parents can stack children.
    for (int l = depth; l >= 2; --l) {
      for (int id : tree.level_boxes(l)) {
        const Box& b = tree.box(id);
        if (long_up[id].size() != 0) {
          const Matrix& basis = long_up[id];
          qhat[id] = basis.transpose() * gather_rows(x, b.points);
          flops::add(flops::gemm(basis.cols(), x.cols(), basis.rows()));
        } else if (short_up[id].size() != 0) {
          Matrix stacked(short_up[id].rows(), x.cols());
          Eigen::Index off = 0;
          for (int c : b.children) {
            stacked.middleRows(off, qhat[c].rows()) = qhat[c];
            off += qhat[c].rows();
          }
          qhat[id] = short_up[id].transpose() * stacked;
          flops::add(flops::gemm(short_up[id].cols(), x.cols(),
                                 short_up[id].rows()));
        }
      }
    }

    // Couplings for every built level up to the truncation level. B_{a,b}
    // sends expansions from b to a; the transposed coupling runs a to b.
    for (int l = 2; l <= std::min(level, depth); ++l) {
      for (const auto& [key, b] : level_b[l]) {
        const int src = transpose_b ? key.first : key.second;
        const int dst = transpose_b ? key.second : key.first;
        if (qhat[src].size() == 0) continue;
        if (transpose_b) {
          flops::add(flops::gemm(b.cols(), x.cols(), b.rows()));
          add_to(uhat[dst], b.transpose() * qhat[src]);
        } else {
          flops::add(flops::gemm(b.rows(), x.cols(), b.cols()));
          add_to(uhat[dst], b * qhat[src]);
        }
      }
    }

    // Incoming expansions travel down through the transfer bases.
    for (int l = 2; l <= depth; ++l) {
      for (int id : tree.level_boxes(l)) {
        const Box& b = tree.box(id);
        if (uhat[id].size() == 0) continue;
        if (long_down[id].size() != 0) {
          const Matrix& basis = long_down[id];
          flops::add(flops::gemm(basis.rows(), x.cols(), basis.cols()));
          scatter_add_rows(y, b.points, basis * uhat[id]);
        } else if (short_down[id].size() != 0) {
          const Matrix& t = short_down[id];
          flops::add(flops::gemm(t.rows(), x.cols(), t.cols()));
          const Matrix expanded = t * uhat[id];
          Eigen::Index off = 0;
          for (std::size_t ci = 0; ci < b.children.size(); ++ci) {
            const int c = b.children[ci];
            const Eigen::Index kc = basis_width(c);
            if (kc > 0) add_to(uhat[c], expanded.middleRows(off, kc));
            off += kc;
          }
        }
      }
    }
    return y;
  }

  Eigen::Index basis_width(int box) const {
    if (long_down[box].size() != 0) return long_down[box].cols();
    return short_down[box].cols();
  }
};

}  // namespace

Matrix H2Rep::apply_truncated(int level, const Matrix& x) const {
  check_level(level, built_level, "h2 apply");
  H2Pass pass{*tree, long_v, short_v, long_u, short_u, level_b, false};
  return pass.run(level, x);
}

Matrix H2Rep::apply_truncated_adjoint(int level, const Matrix& x) const {
  check_level(level, built_level, "h2 adjoint apply");
  // Couplings are keyed (alpha, beta) = B_{alpha,beta}; the adjoint sends
  // expansions from alpha to beta through B^T.
  H2Pass pass{*tree, long_u, short_u, long_v, short_v, level_b, true};
  return pass.run(level, x);
}

Matrix H2Rep::apply(const Matrix& x) const {
  if (!dense_ready) throw std::runtime_error("h2 apply: dense blocks missing");
  Matrix y = apply_truncated(tree->depth(), x);
  dense_contribution(dense, *tree, x, y, false);
  return y;
}

Matrix H2Rep::apply_adjoint(const Matrix& x) const {
  if (!dense_ready) throw std::runtime_error("h2 apply: dense blocks missing");
  Matrix y = apply_truncated_adjoint(tree->depth(), x);
  dense_contribution(dense, *tree, x, y, true);
  return y;
}

namespace {

Matrix reconstruct_long(const BoxTree& tree, const std::vector<Matrix>& longs,
                        const std::vector<Matrix>& shorts, int box) {
  if (longs[box].size() != 0) return longs[box];
  const Box& b = tree.box(box);
  if (shorts[box].size() == 0) {
    return Matrix(static_cast<Eigen::Index>(b.points.size()), 0);
  }
  Matrix out(static_cast<Eigen::Index>(b.points.size()), shorts[box].cols());
  Eigen::Index off = 0;
  for (std::size_t ci = 0; ci < b.children.size(); ++ci) {
    const Matrix child = reconstruct_long(tree, longs, shorts, b.children[ci]);
    const Matrix piece = child * shorts[box].middleRows(off, child.cols());
    off += child.cols();
    const auto& rows = b.child_rows[ci];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.row(rows[r]) = piece.row(r);
    }
  }
  return out;
}

}  // namespace

Matrix H2Rep::reconstruct_long_u(int box) const {
  return reconstruct_long(*tree, long_u, short_u, box);
}

Matrix H2Rep::reconstruct_long_v(int box) const {
  return reconstruct_long(*tree, long_v, short_v, box);
}

StorageStats H2Rep::storage() const {
  StorageStats s;
  auto tally = [&s](int level, const char* cat, std::int64_t n) {
    s.breakdown[{level, cat}] += n;
    s.total += n;
  };
  for (const Box& b : tree->boxes()) {
    tally(b.level, "U", matrix_count(long_u[b.id]) + sigma_in[b.id].size());
    tally(b.level, "V", matrix_count(long_v[b.id]) + sigma_out[b.id].size());
    tally(b.level, "transfer",
          matrix_count(short_u[b.id]) + matrix_count(short_v[b.id]));
  }
  for (int l = 0; l < static_cast<int>(level_b.size()); ++l) {
    for (const auto& [key, b] : level_b[l]) tally(l, "B", matrix_count(b));
  }
  for (const auto& [key, d] : dense) {
    tally(tree->box(key.first).level, "dense", matrix_count(d));
  }
  s.per_dof = double(s.total) / double(tree->num_points());
  return s;
}

// ---------------------------------------------------------------------------
// Variant helpers

Matrix rep_apply(const CompressedRep& rep, const Matrix& x) {
  return std::visit([&](const auto& r) { return r.apply(x); }, rep);
}

Matrix rep_apply_adjoint(const CompressedRep& rep, const Matrix& x) {
  return std::visit([&](const auto& r) { return r.apply_adjoint(x); }, rep);
}

StorageStats rep_storage(const CompressedRep& rep) {
  return std::visit([](const auto& r) { return r.storage(); }, rep);
}

const RepMeta& rep_meta(const CompressedRep& rep) {
  return std::visit([](const auto& r) -> const RepMeta& { return r.meta; },
                    rep);
}

}  // namespace hpeel
