#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hpeel/coloring.hpp"
#include "hpeel/hmatrix.hpp"
#include "hpeel/linalg.hpp"
#include "hpeel/operators.hpp"

namespace hpeel {

enum class PeelFormat : std::uint8_t {
  kH1 = 0,
  kUnifH1 = 1,
  kH1PlusUnif = 2,  // per-pair compression followed by uniformization
  kH2 = 3,
};

const char* peel_format_name(PeelFormat f);
PeelFormat parse_peel_format(const std::string& name);

enum class ColoringStrategy : std::uint8_t { kGraph = 0, kFallbackPattern = 1 };

struct PeelConfig {
  TruncationSpec trunc = TruncationSpec::fixed_rank(8, 10);
  int leaf_capacity = 64;
  std::uint64_t seed = 0;
  PeelFormat format = PeelFormat::kH1;
  ColoringStrategy strategy = ColoringStrategy::kGraph;
  bool h2_parent_carry = true;  // diagnostic toggle for the nested samples
};

struct PhaseReport {
  std::string phase;
  int level = 0;
  int colors = 0;
  std::int64_t forward_cols = 0;
  std::int64_t adjoint_cols = 0;
  double wall_ms_total = 0.0;
  double wall_ms_net = 0.0;
  std::int64_t net_flops = 0;
};

struct RunReport {
  std::vector<PhaseReport> phases;
  std::int64_t forward_cols = 0;
  std::int64_t adjoint_cols = 0;
  int max_sampling_colors = 0;  // over all non-leaf sampling phases
  double wall_s_total = 0.0;
  double wall_s_net = 0.0;
  std::int64_t net_flops = 0;

  std::string to_csv() const;  // one row per phase
};

struct PeelResult {
  CompressedRep rep;
  RunReport report;
};

/// Level-by-level randomized compression of the black box into the format
/// requested by the config.
PeelResult compress(const LinearOperator& op,
                    std::shared_ptr<const BoxTree> tree,
                    const PeelConfig& config);

/// Recompresses per-pair factors into shared per-box bases by stacking
/// scaled factors and changing basis; consumes no black-box products.
UnifH1Rep uniformize_h1(const H1Rep& rep, const TruncationSpec& trunc);

/// Identity-probe extraction of every dense block of A - A^(L); assumes all
/// admissible levels of `rep` are built.
void extract_leaf(const LinearOperator& op, CompressedRep& rep,
                  const PeelConfig& config, RunReport& report);

/// Per-level coloring diagnostics (the CSV dump behind the CLI).
struct ColoringDiag {
  int level = 0;
  SampleMode mode = SampleMode::kH1;
  std::size_t n_blocks = 0;
  std::size_t n_vertices = 0;
  std::size_t n_edges = 0;
  int n_colors = 0;
  double wall_ms = 0.0;
};

std::vector<ColoringDiag> coloring_diagnostics(const BoxTree& tree,
                                               const AdjacencyInfo& adj,
                                               SampleMode mode);

}  // namespace hpeel
