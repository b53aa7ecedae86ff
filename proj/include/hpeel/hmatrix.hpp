#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hpeel/box_tree.hpp"
#include "hpeel/linear_operator.hpp"

namespace hpeel {

enum class RepFormat : std::uint8_t { kH1 = 1, kUnifH1 = 2, kH2 = 3 };

const char* format_name(RepFormat f);

struct RepMeta {
  RepFormat format = RepFormat::kH1;
  std::int64_t n = 0;
  int dim = 0;
  int depth = 0;
  int leaf_capacity = 0;
  int rank = 0;
};

struct StorageStats {
  std::int64_t total = 0;
  double per_dof = 0.0;
  // (level, category) -> stored scalars; categories U, V, B, dense, transfer.
  std::map<std::pair<int, std::string>, std::int64_t> breakdown;
};

using PairKey = std::pair<int, int>;

/// One admissible block A(I_alpha, I_beta) ~ u * b * v^T.
struct LowRankBlock {
  Matrix u;
  Matrix b;
  Matrix v;
};

namespace detail {
Matrix gather_rows(const Matrix& x, const std::vector<int>& idx);
void scatter_add_rows(Matrix& y, const std::vector<int>& idx,
                      const Matrix& rows);
}  // namespace detail

/// Per-pair factorizations plus dense leaf blocks.
class H1Rep {
 public:
  std::shared_ptr<const BoxTree> tree;
  std::shared_ptr<const AdjacencyInfo> adj;
  RepMeta meta;
  int built_level = 1;   // admissible levels 2..built_level are present
  bool dense_ready = false;
  std::vector<std::map<PairKey, LowRankBlock>> levels;  // indexed by level
  std::map<PairKey, Matrix> dense;

  explicit H1Rep(std::shared_ptr<const BoxTree> t = nullptr,
                 std::shared_ptr<const AdjacencyInfo> a = nullptr);

  Matrix apply_truncated(int level, const Matrix& x) const;
  Matrix apply_truncated_adjoint(int level, const Matrix& x) const;
  Matrix apply(const Matrix& x) const;
  Matrix apply_adjoint(const Matrix& x) const;
  StorageStats storage() const;
};

/// Shared per-box bases; per-pair cores.
class UnifH1Rep {
 public:
  std::shared_ptr<const BoxTree> tree;
  std::shared_ptr<const AdjacencyInfo> adj;
  RepMeta meta;
  int built_level = 1;
  bool dense_ready = false;
  std::vector<Matrix> box_u;  // indexed by box id; 0x0 when absent
  std::vector<Matrix> box_v;
  std::vector<std::map<PairKey, Matrix>> level_b;
  std::map<PairKey, Matrix> dense;

  explicit UnifH1Rep(std::shared_ptr<const BoxTree> t = nullptr,
                     std::shared_ptr<const AdjacencyInfo> a = nullptr);

  Matrix apply_truncated(int level, const Matrix& x) const;
  Matrix apply_truncated_adjoint(int level, const Matrix& x) const;
  Matrix apply(const Matrix& x) const;
  Matrix apply_adjoint(const Matrix& x) const;
  StorageStats storage() const;
};

/// Nested bases: boxes on the basis frontier (leaves, or the finest built
/// level while compression is in progress) carry long bases; boxes above
/// them carry short transfer bases expressing their long basis in terms of
/// their children's (children stacked in ascending id order).
class H2Rep {
 public:
  std::shared_ptr<const BoxTree> tree;
  std::shared_ptr<const AdjacencyInfo> adj;
  RepMeta meta;
  int built_level = 1;
  bool dense_ready = false;
  std::vector<Matrix> long_u, long_v;    // 0x0 when absent
  std::vector<Matrix> short_u, short_v;  // 0x0 when absent
  std::vector<Vector> sigma_in, sigma_out;
  std::vector<std::map<PairKey, Matrix>> level_b;
  std::map<PairKey, Matrix> dense;

  explicit H2Rep(std::shared_ptr<const BoxTree> t = nullptr,
                 std::shared_ptr<const AdjacencyInfo> a = nullptr);

  Matrix apply_truncated(int level, const Matrix& x) const;
  Matrix apply_truncated_adjoint(int level, const Matrix& x) const;
  Matrix apply(const Matrix& x) const;
  Matrix apply_adjoint(const Matrix& x) const;
  StorageStats storage() const;

  /// Long basis of a box materialized through the transfer chain (testing
  /// and diagnostics; applies never form it).
  Matrix reconstruct_long_u(int box) const;
  Matrix reconstruct_long_v(int box) const;
};

using CompressedRep = std::variant<H1Rep, UnifH1Rep, H2Rep>;

Matrix rep_apply(const CompressedRep& rep, const Matrix& x);
Matrix rep_apply_adjoint(const CompressedRep& rep, const Matrix& x);
StorageStats rep_storage(const CompressedRep& rep);
const RepMeta& rep_meta(const CompressedRep& rep);

/// LinearOperator view over a compressed representation.
class RepOperator : public LinearOperator {
 public:
  explicit RepOperator(const CompressedRep& rep) : rep_(&rep) {}
  Eigen::Index rows() const override { return rep_meta(*rep_).n; }
  Eigen::Index cols() const override { return rep_meta(*rep_).n; }
  Matrix apply(const Matrix& x) const override { return rep_apply(*rep_, x); }
  Matrix apply_adjoint(const Matrix& x) const override {
    return rep_apply_adjoint(*rep_, x);
  }

 private:
  const CompressedRep* rep_;
};

/// Versioned little-endian binary container; round-trips bit-exactly and
/// embeds the box tree, so a loaded representation is self-contained.
void save_rep(const std::string& path, const CompressedRep& rep);
CompressedRep load_rep(const std::string& path);

/// Raw dense matrix dump (offline oracles).
void save_dense_matrix(const std::string& path, const Matrix& m);
Matrix load_dense_matrix(const std::string& path);

}  // namespace hpeel
