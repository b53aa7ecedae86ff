#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "hpeel/box_tree.hpp"
#include "hpeel/rng.hpp"

namespace hpeel {

enum class PayloadTag : std::uint8_t {
  kGaussian = 0,  // G_beta, keyed by (seed, level, box, phase)
  kIdentity = 1,  // [I | 0] of the box's point count
  kBasis = 2,     // a per-box orthonormal basis from a table
};

enum class SampleMode : std::uint8_t {
  kH1 = 0,          // per-block gaussian probes
  kUnifStage1 = 1,  // whole-interaction-list gaussian probes
  kUnifStage2 = 2,  // basis payloads probed through the adjoint
  kLeaf = 3,        // identity probes for dense blocks
};

/// What one admissible (or dense) block demands of a test matrix: payload
/// rows on some boxes, zero rows on others. Equal sets are deduplicated, so
/// one set may serve several blocks.
struct ConstraintSet {
  std::vector<std::pair<int, PayloadTag>> payload;  // sorted by box id
  std::vector<int> zero;                            // sorted box ids
  std::vector<std::pair<int, int>> owners;          // (alpha, beta) blocks

  bool same_requirements(const ConstraintSet& other) const {
    return payload == other.payload && zero == other.zero;
  }
};

/// Builds one deduplicated constraint set per distinct requirement for the
/// given level and mode. kLeaf ignores `level` and covers every dense pair.
std::vector<ConstraintSet> build_constraints(const BoxTree& tree,
                                             const AdjacencyInfo& adj,
                                             int level, SampleMode mode);

struct IncompatibilityGraph {
  int num_vertices = 0;
  std::vector<std::vector<int>> edges;  // sorted adjacency per vertex

  std::size_t num_edges() const {
    std::size_t e = 0;
    for (const auto& a : edges) e += a.size();
    return e / 2;
  }
  int max_degree() const;
};

/// Two sets conflict when a payload box of one lies in the zero set of the
/// other (or the same box carries differently tagged payloads).
bool incompatible(const ConstraintSet& a, const ConstraintSet& b);

IncompatibilityGraph build_graph(const std::vector<ConstraintSet>& sets);

struct Coloring {
  std::vector<int> color;  // per vertex
  int num_colors = 0;
  std::size_t queue_ops = 0;  // priority-queue pushes + pops
};

/// Greedy coloring by descending saturation degree; ties broken by uncolored
/// degree, then lowest vertex index. The assigned color is always the
/// smallest valid index.
Coloring dsatur_color(const IncompatibilityGraph& graph);

/// Coloring used when planning test matrices: DSatur, except on fully
/// populated uniform trees where the tile-shift coloring (6^d / 5^d / 3^d)
/// is also valid and is taken when it uses fewer colors.
Coloring plan_coloring(const BoxTree& tree,
                       const std::vector<ConstraintSet>& sets,
                       const IncompatibilityGraph& graph, SampleMode mode);

/// One structured test matrix: zero everywhere except the payload blocks.
struct BlockTestMatrix {
  Eigen::Index rows = 0;
  int width = 0;
  std::uint64_t seed = 0;  // gaussian payload key base
  int level = 0;
  int phase = 0;  // extra gaussian key component (forward/adjoint streams)
  std::vector<std::pair<int, PayloadTag>> payload;  // sorted by box id
  std::vector<int> zero;       // union of the class's zero rows
  std::vector<int> serves;     // constraint-set indices realized

  Matrix realize(const BoxTree& tree,
                 const std::map<int, Matrix>* basis_table) const;
};

/// Gaussian payload block for `box`: reproducible across every matrix that
/// mentions the box at this (seed, level, phase).
Matrix payload_gaussian(const BoxTree& tree, int box, int width,
                        std::uint64_t seed, int level, int phase);

/// One test matrix per color class. Gaussian widths use `width`; identity
/// payloads are padded to `width` columns; basis payloads take their width
/// from the table (matrix width becomes the class maximum).
std::vector<BlockTestMatrix> assemble_test_matrices(
    const std::vector<ConstraintSet>& sets, const Coloring& coloring,
    const BoxTree& tree, int level, int width, std::uint64_t seed, int phase,
    const std::map<int, Matrix>* basis_table = nullptr);

/// Tile-shift pattern matrices for fully populated uniform grids: 6^d for
/// kH1, 3^d for kLeaf, 5^d for kUnifStage1. Rejects non-uniform trees.
std::vector<BlockTestMatrix> fallback_pattern_matrices(
    const BoxTree& tree, const AdjacencyInfo& adj, int level, SampleMode mode,
    int width, std::uint64_t seed, int phase);

}  // namespace hpeel
