#include "hpeel/box_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace hpeel {

namespace {

// Encodes (level, per-dim coords) for hash lookup. Levels are handled by
// separate maps, so only coords are packed here.
struct CoordHash {
  std::size_t operator()(const std::vector<std::int64_t>& c) const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (std::int64_t v : c) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) +
           (h >> 2);
    }
    return h;
  }
};

using CoordMap =
    std::unordered_map<std::vector<std::int64_t>, int, CoordHash>;

bool chebyshev_le(const std::vector<std::int64_t>& a,
                  const std::vector<std::int64_t>& b, std::int64_t radius) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
    if (d > radius) return false;
  }
  return true;
}

void compute_child_rows(Eigen::Index num_points, std::vector<Box>& boxes) {
  std::vector<int> owner(num_points, -1);
  for (Box& b : boxes) {
    if (b.is_leaf()) continue;
    for (std::size_t ci = 0; ci < b.children.size(); ++ci) {
      for (int p : boxes[b.children[ci]].points) owner[p] = int(ci);
    }
    b.child_rows.assign(b.children.size(), {});
    for (std::size_t r = 0; r < b.points.size(); ++r) {
      b.child_rows[owner[b.points[r]]].push_back(static_cast<int>(r));
    }
  }
}

}  // namespace

PointCloud PointCloud::from_raw(const Eigen::MatrixXd& raw) {
  if (raw.rows() < 1) throw std::invalid_argument("empty point cloud");
  if (!raw.allFinite()) throw std::invalid_argument("non-finite coordinates");
  PointCloud cloud;
  cloud.coords = raw;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double lo = raw.col(j).minCoeff();
    const double hi = raw.col(j).maxCoeff();
    if (hi > lo) {
      cloud.coords.col(j) = (raw.col(j).array() - lo) / (hi - lo);
    } else {
      cloud.coords.col(j).setConstant(0.5);
    }
  }
  return cloud;
}

PointCloud PointCloud::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("inconsistent column count in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no points in " + path);
  Eigen::MatrixXd raw(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) raw(i, j) = rows[i][j];
  }
  return from_raw(raw);
}

BoxTree BoxTree::build(const PointCloud& cloud, int leaf_capacity) {
  if (leaf_capacity < 1) throw std::invalid_argument("leaf capacity >= 1");
  const int d = cloud.dim();
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");

  BoxTree tree;
  tree.dim_ = d;
  tree.leaf_capacity_ = leaf_capacity;
  tree.num_points_ = cloud.size();

  Box root;
  root.id = 0;
  root.level = 0;
  root.coord.assign(d, 0);
  root.points.resize(cloud.size());
  for (Eigen::Index i = 0; i < cloud.size(); ++i) root.points[i] = int(i);
  tree.boxes_.push_back(std::move(root));
  tree.levels_.push_back({0});

  // Breadth-first: process one level at a time so ids are level-contiguous.
  std::vector<int> frontier = {0};
  int level = 0;
  while (true) {
    bool any_split = false;
    for (int id : frontier) {
      if (tree.boxes_[id].points.size() > static_cast<std::size_t>(leaf_capacity)) {
        any_split = true;
        break;
      }
    }
    if (!any_split) break;
    if (level >= kMaxDepth) {
      throw std::runtime_error(
          "degenerate geometry: leaf capacity unreachable at depth cap");
    }

    std::vector<int> next;
    for (int id : frontier) {
      Box& parent = tree.boxes_[id];
      if (parent.points.size() <= static_cast<std::size_t>(leaf_capacity)) {
        continue;
      }
      // Child bucket per corner bitmask; bit j set means the upper half in
      // dimension j. A point exactly on a bisection plane goes to the lower
      // child; boxes are closed on their upper side.
      std::vector<std::vector<int>> buckets(std::size_t(1) << d);
      for (int pt : parent.points) {
        std::size_t mask = 0;
        for (int j = 0; j < d; ++j) {
          const double lo = std::ldexp(double(parent.coord[j]), -parent.level);
          const double hi =
              std::ldexp(double(parent.coord[j] + 1), -parent.level);
          const double mid = 0.5 * (lo + hi);
          if (cloud.coords(pt, j) > mid) mask |= std::size_t(1) << j;
        }
        buckets[mask].push_back(pt);
      }
      for (std::size_t mask = 0; mask < buckets.size(); ++mask) {
        if (buckets[mask].empty()) continue;
        Box child;
        child.id = static_cast<int>(tree.boxes_.size());
        child.level = level + 1;
        child.parent = id;
        child.coord.resize(d);
        for (int j = 0; j < d; ++j) {
          child.coord[j] = 2 * tree.boxes_[id].coord[j] +
                           ((mask >> j) & 1 ? 1 : 0);
        }
        child.points = std::move(buckets[mask]);
        tree.boxes_[id].children.push_back(child.id);
        next.push_back(child.id);
        tree.boxes_.push_back(std::move(child));
      }
    }
    tree.levels_.push_back(next);
    frontier = tree.levels_.back();
    ++level;
  }
  tree.depth_ = level;
  compute_child_rows(tree.num_points_, tree.boxes_);
  return tree;
}

BoxTree BoxTree::from_parts(int dim, int leaf_capacity, Eigen::Index n,
                            std::vector<Box> boxes) {
  BoxTree tree;
  tree.dim_ = dim;
  tree.leaf_capacity_ = leaf_capacity;
  tree.num_points_ = n;
  tree.boxes_ = std::move(boxes);
  int depth = 0;
  for (const Box& b : tree.boxes_) depth = std::max(depth, b.level);
  tree.depth_ = depth;
  tree.levels_.assign(depth + 1, {});
  for (const Box& b : tree.boxes_) tree.levels_[b.level].push_back(b.id);
  compute_child_rows(tree.num_points_, tree.boxes_);
  return tree;
}

int BoxTree::max_leaf_size() const {
  int m = 0;
  for (const Box& b : boxes_) {
    if (b.is_leaf()) m = std::max(m, static_cast<int>(b.points.size()));
  }
  return m;
}

bool BoxTree::is_fully_populated() const {
  const std::size_t want = std::size_t(1) << dim_;
  for (const Box& b : boxes_) {
    if (b.level < depth_ && b.children.size() != want) return false;
  }
  return true;
}

AdjacencyInfo adjacency(const BoxTree& tree) {
  const int d = tree.dim();
  AdjacencyInfo adj;
  const int nb = tree.num_boxes();
  adj.neighbors.resize(nb);
  adj.interaction.resize(nb);
  adj.coarse_leaf_neighbors.resize(nb);
  adj.dense_partners.resize(nb);

  // Per-level coordinate lookup.
  std::vector<CoordMap> maps(tree.depth() + 1);
  for (const Box& b : tree.boxes()) maps[b.level].emplace(b.coord, b.id);

  // Neighbors: same level, integer coordinates within Chebyshev distance 1.
  // Closed dyadic boxes share a boundary point exactly in that case.
  std::vector<std::int64_t> probe(d);
  for (const Box& b : tree.boxes()) {
    std::vector<int> ns;
    const std::int64_t limit = (std::int64_t(1) << b.level) - 1;
    std::vector<int> offset(d, -1);
    while (true) {
      bool in_range = true;
      for (int j = 0; j < d; ++j) {
        probe[j] = b.coord[j] + offset[j];
        if (probe[j] < 0 || probe[j] > limit) in_range = false;
      }
      if (in_range) {
        auto it = maps[b.level].find(probe);
        if (it != maps[b.level].end()) ns.push_back(it->second);
      }
      int j = 0;
      for (; j < d; ++j) {
        if (++offset[j] <= 1) break;
        offset[j] = -1;
      }
      if (j == d) break;
    }
    std::sort(ns.begin(), ns.end());
    adj.neighbors[b.id] = std::move(ns);
  }

  // Interaction list: children of the parent's neighbors that are not
  // neighbors themselves.
  for (const Box& b : tree.boxes()) {
    if (b.parent < 0) continue;
    std::vector<int> il;
    for (int pn : adj.neighbors[b.parent]) {
      for (int c : tree.box(pn).children) {
        if (!chebyshev_le(tree.box(c).coord, b.coord, 1)) il.push_back(c);
      }
    }
    std::sort(il.begin(), il.end());
    adj.interaction[b.id] = std::move(il);
  }

  // Coarse leaf neighbors accumulate down the tree: a box inherits its
  // parent's set plus any of the parent's neighbors that are leaves.
  for (const Box& b : tree.boxes()) {
    if (b.parent < 0) continue;
    std::vector<int> cl = adj.coarse_leaf_neighbors[b.parent];
    for (int pn : adj.neighbors[b.parent]) {
      if (tree.box(pn).is_leaf()) cl.push_back(pn);
    }
    std::sort(cl.begin(), cl.end());
    cl.erase(std::unique(cl.begin(), cl.end()), cl.end());
    adj.cross_level_adjacencies += cl.size();
    adj.coarse_leaf_neighbors[b.id] = std::move(cl);
  }

  // Dense partners: same-level leaf neighbors, plus the cross-level pairs
  // implied by coarse leaf neighbors (symmetrized).
  for (const Box& b : tree.boxes()) {
    if (!b.is_leaf()) continue;
    for (int n : adj.neighbors[b.id]) {
      if (tree.box(n).is_leaf()) adj.dense_partners[b.id].push_back(n);
    }
    for (int coarse : adj.coarse_leaf_neighbors[b.id]) {
      adj.dense_partners[b.id].push_back(coarse);
      adj.dense_partners[coarse].push_back(b.id);
    }
  }
  for (auto& dp : adj.dense_partners) {
    std::sort(dp.begin(), dp.end());
    dp.erase(std::unique(dp.begin(), dp.end()), dp.end());
  }
  return adj;
}

std::vector<std::pair<int, int>> admissible_pairs(const BoxTree& tree,
                                                  const AdjacencyInfo& adj,
                                                  int level) {
  if (level < 2 || level > tree.depth()) {
    throw std::invalid_argument("admissible pairs exist for levels 2..depth");
  }
  std::vector<std::pair<int, int>> pairs;
  for (int id : tree.level_boxes(level)) {
    for (int beta : adj.interaction[id]) pairs.emplace_back(id, beta);
  }
  return pairs;
}

std::vector<std::pair<int, int>> dense_pairs(const BoxTree& tree,
                                             const AdjacencyInfo& adj) {
  std::vector<std::pair<int, int>> pairs;
  for (const Box& b : tree.boxes()) {
    if (!b.is_leaf()) continue;
    for (int mu : adj.dense_partners[b.id]) pairs.emplace_back(b.id, mu);
  }
  return pairs;
}

}  // namespace hpeel
