#include "hpeel/coloring.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>

namespace hpeel {

namespace {

std::vector<int> sorted_union(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

void erase_value(std::vector<int>& v, int value) {
  v.erase(std::remove(v.begin(), v.end(), value), v.end());
}

// Dedup accumulator keyed by the literal (payload, zero) requirement.
class SetCollector {
 public:
  void add(std::vector<std::pair<int, PayloadTag>> payload,
           std::vector<int> zero, std::pair<int, int> owner) {
    auto key = std::make_pair(payload, zero);
    auto it = index_.find(key);
    if (it == index_.end()) {
      ConstraintSet set;
      set.payload = std::move(payload);
      set.zero = std::move(zero);
      set.owners.push_back(owner);
      index_.emplace(std::move(key), static_cast<int>(sets_.size()));
      sets_.push_back(std::move(set));
    } else {
      sets_[it->second].owners.push_back(owner);
    }
  }

  std::vector<ConstraintSet> take() { return std::move(sets_); }

 private:
  std::map<std::pair<std::vector<std::pair<int, PayloadTag>>, std::vector<int>>,
           int>
      index_;
  std::vector<ConstraintSet> sets_;
};

}  // namespace

std::vector<ConstraintSet> build_constraints(const BoxTree& tree,
                                             const AdjacencyInfo& adj,
                                             int level, SampleMode mode) {
  SetCollector collector;
  switch (mode) {
    case SampleMode::kH1:
    case SampleMode::kUnifStage2: {
      for (auto [alpha, beta] : admissible_pairs(tree, adj, level)) {
        if (mode == SampleMode::kH1) {
          // Probe the column space of block (alpha, beta): random rows on
          // beta, zeros on everything else that reaches rows I_alpha.
          std::vector<int> zero = sorted_union(
              adj.neighbors[alpha],
              sorted_union(adj.interaction[alpha],
                           adj.coarse_leaf_neighbors[alpha]));
          erase_value(zero, beta);
          collector.add({{beta, PayloadTag::kGaussian}}, std::move(zero),
                        {alpha, beta});
        } else {
          // Adjoint-side probe carrying the alpha basis; observed at I_beta.
          std::vector<int> zero = sorted_union(
              adj.neighbors[beta],
              sorted_union(adj.interaction[beta],
                           adj.coarse_leaf_neighbors[beta]));
          erase_value(zero, alpha);
          collector.add({{alpha, PayloadTag::kBasis}}, std::move(zero),
                        {alpha, beta});
        }
      }
      break;
    }
    case SampleMode::kUnifStage1: {
      if (level < 2 || level > tree.depth()) {
        throw std::invalid_argument("sampling level out of range");
      }
      for (int alpha : tree.level_boxes(level)) {
        if (adj.interaction[alpha].empty()) continue;
        std::vector<std::pair<int, PayloadTag>> payload;
        for (int beta : adj.interaction[alpha]) {
          payload.emplace_back(beta, PayloadTag::kGaussian);
        }
        std::vector<int> zero = sorted_union(
            adj.neighbors[alpha], adj.coarse_leaf_neighbors[alpha]);
        collector.add(std::move(payload), std::move(zero), {alpha, -1});
      }
      break;
    }
    case SampleMode::kLeaf: {
      for (auto [lambda, mu] : dense_pairs(tree, adj)) {
        std::vector<int> zero = adj.dense_partners[lambda];
        erase_value(zero, mu);
        collector.add({{mu, PayloadTag::kIdentity}}, std::move(zero),
                      {lambda, mu});
      }
      break;
    }
  }
  return collector.take();
}

bool incompatible(const ConstraintSet& a, const ConstraintSet& b) {
  auto payload_hits_zero = [](const ConstraintSet& s, const ConstraintSet& t) {
    auto pit = s.payload.begin();
    auto zit = t.zero.begin();
    while (pit != s.payload.end() && zit != t.zero.end()) {
      if (pit->first < *zit) {
        ++pit;
      } else if (*zit < pit->first) {
        ++zit;
      } else {
        return true;
      }
    }
    return false;
  };
  if (payload_hits_zero(a, b) || payload_hits_zero(b, a)) return true;
  // A shared payload box is fine only when both sides want the same content.
  auto ait = a.payload.begin();
  auto bit = b.payload.begin();
  while (ait != a.payload.end() && bit != b.payload.end()) {
    if (ait->first < bit->first) {
      ++ait;
    } else if (bit->first < ait->first) {
      ++bit;
    } else {
      if (ait->second != bit->second) return true;
      ++ait;
      ++bit;
    }
  }
  return false;
}

int IncompatibilityGraph::max_degree() const {
  std::size_t d = 0;
  for (const auto& a : edges) d = std::max(d, a.size());
  return static_cast<int>(d);
}

IncompatibilityGraph build_graph(const std::vector<ConstraintSet>& sets) {
  IncompatibilityGraph g;
  g.num_vertices = static_cast<int>(sets.size());
  g.edges.resize(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (incompatible(sets[i], sets[j])) {
        g.edges[i].push_back(static_cast<int>(j));
        g.edges[j].push_back(static_cast<int>(i));
      }
    }
  }
  return g;
}

Coloring dsatur_color(const IncompatibilityGraph& graph) {
  const int n = graph.num_vertices;
  Coloring result;
  result.color.assign(n, -1);
  if (n == 0) return result;

  std::vector<std::set<int>> neighbor_colors(n);
  std::vector<int> uncolored_degree(n);
  std::vector<std::uint64_t> stamp(n, 0);
  for (int v = 0; v < n; ++v) {
    uncolored_degree[v] = static_cast<int>(graph.edges[v].size());
  }

  // Max-heap entries (saturation, uncolored degree, -index, stamp); stale
  // entries are skipped on pop.
  using Entry = std::tuple<int, int, int, std::uint64_t>;
  std::priority_queue<Entry> queue;
  for (int v = 0; v < n; ++v) {
    queue.emplace(0, uncolored_degree[v], -v, 0);
    ++result.queue_ops;
  }

  int colored = 0;
  while (colored < n) {
    auto [sat, udeg, negv, st] = queue.top();
    queue.pop();
    ++result.queue_ops;
    const int v = -negv;
    if (result.color[v] != -1 || st != stamp[v]) continue;

    int c = 0;
    while (neighbor_colors[v].count(c) != 0) ++c;
    result.color[v] = c;
    result.num_colors = std::max(result.num_colors, c + 1);
    ++colored;

    for (int w : graph.edges[v]) {
      if (result.color[w] != -1) continue;
      --uncolored_degree[w];
      neighbor_colors[w].insert(c);
      ++stamp[w];
      queue.emplace(static_cast<int>(neighbor_colors[w].size()),
                    uncolored_degree[w], -w, stamp[w]);
      ++result.queue_ops;
    }
  }
  return result;
}

Coloring plan_coloring(const BoxTree& tree,
                       const std::vector<ConstraintSet>& sets,
                       const IncompatibilityGraph& graph, SampleMode mode) {
  Coloring best = dsatur_color(graph);
  if (mode == SampleMode::kUnifStage2 || !tree.is_fully_populated()) {
    return best;
  }
  const int mod = mode == SampleMode::kH1 ? 6
                  : mode == SampleMode::kUnifStage1 ? 5
                                                    : 3;
  // Tile coloring: payload (or owner) boxes congruent mod `mod` per
  // dimension always have compatible requirements, so the tile index is a
  // proper coloring.
  std::vector<int> tile(sets.size());
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const int box = mode == SampleMode::kUnifStage1
                        ? sets[i].owners.front().first
                        : sets[i].payload.front().first;
    int idx = 0, mul = 1;
    for (std::int64_t c : tree.box(box).coord) {
      idx += static_cast<int>(c % mod) * mul;
      mul *= mod;
    }
    auto [it, inserted] = relabel.emplace(idx, static_cast<int>(relabel.size()));
    tile[i] = it->second;
  }
  if (static_cast<int>(relabel.size()) < best.num_colors) {
    best.color = std::move(tile);
    best.num_colors = static_cast<int>(relabel.size());
  }
  return best;
}

Matrix payload_gaussian(const BoxTree& tree, int box, int width,
                        std::uint64_t seed, int level, int phase) {
  return gaussian_matrix(
      static_cast<Eigen::Index>(tree.box(box).points.size()), width,
      mix_seed(seed, static_cast<std::uint64_t>(level),
               static_cast<std::uint64_t>(box),
               static_cast<std::uint64_t>(phase)));
}

Matrix BlockTestMatrix::realize(const BoxTree& tree,
                                const std::map<int, Matrix>* basis_table) const {
  Matrix out = Matrix::Zero(rows, width);
  for (auto [box, tag] : payload) {
    const auto& pts = tree.box(box).points;
    Matrix block;
    switch (tag) {
      case PayloadTag::kGaussian:
        block = payload_gaussian(tree, box, width, seed, level, phase);
        break;
      case PayloadTag::kIdentity: {
        block = Matrix::Zero(pts.size(), width);
        const Eigen::Index k =
            std::min<Eigen::Index>(pts.size(), width);
        block.topLeftCorner(k, k).setIdentity();
        break;
      }
      case PayloadTag::kBasis: {
        if (basis_table == nullptr || basis_table->count(box) == 0) {
          throw std::runtime_error("missing basis for payload box");
        }
        const Matrix& basis = basis_table->at(box);
        block = Matrix::Zero(pts.size(), width);
        block.leftCols(basis.cols()) = basis;
        break;
      }
    }
    for (std::size_t r = 0; r < pts.size(); ++r) out.row(pts[r]) = block.row(r);
  }
  return out;
}

std::vector<BlockTestMatrix> assemble_test_matrices(
    const std::vector<ConstraintSet>& sets, const Coloring& coloring,
    const BoxTree& tree, int level, int width, std::uint64_t seed, int phase,
    const std::map<int, Matrix>* basis_table) {
  std::vector<BlockTestMatrix> matrices(coloring.num_colors);
  std::vector<std::map<int, PayloadTag>> merged(coloring.num_colors);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    BlockTestMatrix& m = matrices[coloring.color[i]];
    m.serves.push_back(static_cast<int>(i));
    for (auto [box, tag] : sets[i].payload) {
      auto [it, inserted] = merged[coloring.color[i]].emplace(box, tag);
      if (!inserted && it->second != tag) {
        throw std::logic_error("conflicting payload tags within a color");
      }
    }
    m.zero = sorted_union(std::move(m.zero), sets[i].zero);
  }
  for (int c = 0; c < coloring.num_colors; ++c) {
    matrices[c].payload.assign(merged[c].begin(), merged[c].end());
  }
  for (BlockTestMatrix& m : matrices) {
    m.rows = tree.num_points();
    m.level = level;
    m.seed = seed;
    m.phase = phase;
    m.width = width;
    bool any_basis = false;
    int w = 1;
    for (auto [box, tag] : m.payload) {
      if (tag != PayloadTag::kBasis) continue;
      any_basis = true;
      if (basis_table == nullptr || basis_table->count(box) == 0) {
        throw std::runtime_error("missing basis for payload box");
      }
      w = std::max(w, static_cast<int>(basis_table->at(box).cols()));
    }
    if (any_basis) m.width = w;
  }
  return matrices;
}

std::vector<BlockTestMatrix> fallback_pattern_matrices(
    const BoxTree& tree, const AdjacencyInfo& adj, int level, SampleMode mode,
    int width, std::uint64_t seed, int phase) {
  if (!tree.is_fully_populated()) {
    throw std::invalid_argument(
        "pattern test matrices require a fully populated uniform tree");
  }
  if (mode == SampleMode::kUnifStage2) {
    throw std::invalid_argument("no pattern construction for basis probes");
  }
  const int d = tree.dim();
  const int mod = mode == SampleMode::kH1 ? 6
                  : mode == SampleMode::kUnifStage1 ? 5
                                                    : 3;
  if (mode == SampleMode::kLeaf) level = tree.depth();
  if (level < 2 || level > tree.depth()) {
    throw std::invalid_argument("sampling level out of range");
  }
  int count = 1;
  for (int j = 0; j < d; ++j) count *= mod;

  std::vector<BlockTestMatrix> matrices(count);
  for (int idx = 0; idx < count; ++idx) {
    BlockTestMatrix& m = matrices[idx];
    m.rows = tree.num_points();
    m.width = width;
    m.seed = seed;
    m.level = level;
    m.phase = phase;
    std::vector<int> shift(d);
    int rem = idx;
    for (int j = 0; j < d; ++j) {
      shift[j] = rem % mod;
      rem /= mod;
    }
    for (int id : tree.level_boxes(level)) {
      const Box& b = tree.box(id);
      bool active;
      if (mode == SampleMode::kUnifStage1) {
        // Zero on the 3^d cluster around each aligned center; payload
        // everywhere else.
        bool in_cluster = true;
        for (int j = 0; j < d; ++j) {
          const int rel = static_cast<int>((b.coord[j] - shift[j]) % mod +
                                           mod) %
                          mod;
          if (rel != 0 && rel != 1 && rel != mod - 1) {
            in_cluster = false;
            break;
          }
        }
        active = !in_cluster;
      } else {
        active = true;
        for (int j = 0; j < d; ++j) {
          if (b.coord[j] % mod != shift[j]) {
            active = false;
            break;
          }
        }
      }
      if (active) {
        m.payload.emplace_back(id, mode == SampleMode::kLeaf
                                       ? PayloadTag::kIdentity
                                       : PayloadTag::kGaussian);
      } else {
        m.zero.push_back(id);
      }
    }
    std::sort(m.payload.begin(), m.payload.end());
    std::sort(m.zero.begin(), m.zero.end());
  }
  return matrices;
}

}  // namespace hpeel
