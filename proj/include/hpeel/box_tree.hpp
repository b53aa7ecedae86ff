#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hpeel {

/// N points in d dimensions, affinely rescaled per dimension into [0,1]^d on
/// construction. Row i of coords is point i.
struct PointCloud {
  Eigen::MatrixXd coords;

  int dim() const { return static_cast<int>(coords.cols()); }
  Eigen::Index size() const { return coords.rows(); }

  /// Rescales raw coordinates into the unit cube. Constant dimensions map to
  /// 0.5.
  static PointCloud from_raw(const Eigen::MatrixXd& raw);

  /// Reads one point per line, d whitespace- or comma-separated columns.
  static PointCloud from_file(const std::string& path);
};

struct Box {
  int id = -1;                       // breadth-first, root = 0
  int level = 0;
  std::vector<std::int64_t> coord;   // per-dim integer index at this level
  int parent = -1;
  std::vector<int> children;         // ascending ids
  std::vector<int> points;           // indices into the cloud, input order
  // Row positions of each child's points within this box's point list,
  // parallel to `children`.
  std::vector<std::vector<int>> child_rows;

  bool is_leaf() const { return children.empty(); }
};

/// Hierarchy of dyadic boxes over [0,1]^d. Level l+1 bisects every level-l
/// box along each dimension; empty boxes are omitted; boxes with more than m
/// points are split. Box bounds are exact dyadic rationals, so the integer
/// coordinates fully determine the geometry.
class BoxTree {
 public:
  // int64 box coordinates bound the usable depth
  static constexpr int kMaxDepth = 62;

  /// Throws std::runtime_error on degenerate geometry (coincident points
  /// that can never satisfy the leaf capacity).
  static BoxTree build(const PointCloud& cloud, int leaf_capacity);

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  int leaf_capacity() const { return leaf_capacity_; }
  Eigen::Index num_points() const { return num_points_; }

  const std::vector<Box>& boxes() const { return boxes_; }
  const Box& box(int id) const { return boxes_[id]; }
  int num_boxes() const { return static_cast<int>(boxes_.size()); }

  const std::vector<int>& level_boxes(int level) const {
    return levels_[level];
  }

  /// Largest point count over the leaves.
  int max_leaf_size() const;

  /// True when every box down to `depth()` has the full 2^d children.
  bool is_fully_populated() const;

  /// Rebuilds a tree from serialized boxes (level lists and child row
  /// positions are derived).
  static BoxTree from_parts(int dim, int leaf_capacity, Eigen::Index n,
                            std::vector<Box> boxes);

 private:
  int dim_ = 0;
  int depth_ = 0;
  int leaf_capacity_ = 0;
  Eigen::Index num_points_ = 0;
  std::vector<Box> boxes_;
  std::vector<std::vector<int>> levels_;
};

/// Same-level neighbor and interaction lists plus the bookkeeping that makes
/// peeling exact on adaptive trees: for every box, the coarse leaves whose
/// blocks stay un-compressed through that box's level, and the pairs of
/// leaves whose interaction is never admissible (stored dense).
struct AdjacencyInfo {
  // Indexed by box id; ids are sorted ascending in every list.
  std::vector<std::vector<int>> neighbors;     // includes the box itself
  std::vector<std::vector<int>> interaction;
  // Leaf boxes at strictly coarser levels that neighbor this box's ancestor
  // at their own level. Their content is never peeled, so sampling at this
  // box's level must zero them out.
  std::vector<std::vector<int>> coarse_leaf_neighbors;
  // For each leaf, the leaves it forms a dense block with (includes itself).
  std::vector<std::vector<int>> dense_partners;  // empty for non-leaves
  // Count of cross-level neighbor relations (diagnostic; zero on uniform
  // trees).
  std::size_t cross_level_adjacencies = 0;
};

AdjacencyInfo adjacency(const BoxTree& tree);

/// All ordered pairs (alpha, beta) with beta in the interaction list of
/// alpha at the given level, 2 <= level <= depth.
std::vector<std::pair<int, int>> admissible_pairs(const BoxTree& tree,
                                                  const AdjacencyInfo& adj,
                                                  int level);

/// All ordered dense pairs (leaf, leaf), including self pairs.
std::vector<std::pair<int, int>> dense_pairs(const BoxTree& tree,
                                             const AdjacencyInfo& adj);

}  // namespace hpeel
