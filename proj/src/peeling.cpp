#include "hpeel/peeling.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hpeel/flops.hpp"

namespace hpeel {

namespace {

using Clock = std::chrono::steady_clock;

// Gaussian stream tags: forward and adjoint probe payloads, then the H2
// carry streams.
constexpr int kForwardPhase = 0;
constexpr int kAdjointPhase = 1;
constexpr std::uint64_t kCarryInTag = 2;
constexpr std::uint64_t kCarryOutTag = 3;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double op_seconds(const CountingOperator& op) {
  const auto s = op.stats();
  return s.forward_seconds + s.adjoint_seconds;
}

/// Wall/net bracketing for one report phase.
class PhaseScope {
 public:
  PhaseScope(RunReport& report, const CountingOperator& op, std::string phase,
             int level)
      : report_(report), op_(op) {
    entry_.phase = std::move(phase);
    entry_.level = level;
    t0_ = Clock::now();
    net_before_ = op_seconds(op_);
    flops_before_ = flops::current();
  }
  PhaseReport& entry() { return entry_; }
  ~PhaseScope() {
    entry_.wall_ms_total = ms_between(t0_, Clock::now());
    entry_.wall_ms_net =
        entry_.wall_ms_total - 1e3 * (op_seconds(op_) - net_before_);
    entry_.net_flops = flops::current() - flops_before_;
    report_.phases.push_back(entry_);
  }

 private:
  RunReport& report_;
  const CountingOperator& op_;
  PhaseReport entry_;
  Clock::time_point t0_;
  double net_before_ = 0.0;
  std::int64_t flops_before_ = 0;
};

Matrix basis_from_sample(const Matrix& sample, const TruncationSpec& spec,
                         Vector* sigma = nullptr) {
  if (spec.mode == TruncationSpec::Mode::kFixedRank && sigma == nullptr) {
    return qr_orthonormal(sample, spec.rank).q;
  }
  SvdResult svd = svd_trunc(sample, spec);
  if (sigma != nullptr) *sigma = svd.sigma;
  return std::move(svd.u);
}

struct SamplingPlan {
  std::vector<BlockTestMatrix> matrices;
  std::map<PairKey, int> block_to_matrix;
  std::map<int, int> box_to_matrix;
  std::size_t n_vertices = 0;
  std::size_t n_edges = 0;

  int colors() const { return static_cast<int>(matrices.size()); }

  const Matrix& block_sample(const std::vector<Matrix>& samples, int alpha,
                             int beta) const {
    return samples[block_to_matrix.at({alpha, beta})];
  }
};

int pattern_index(const Box& box, int mod) {
  int idx = 0;
  int mul = 1;
  for (std::size_t j = 0; j < box.coord.size(); ++j) {
    idx += static_cast<int>(box.coord[j] % mod) * mul;
    mul *= mod;
  }
  return idx;
}

SamplingPlan make_plan(const BoxTree& tree, const AdjacencyInfo& adj,
                       int level, SampleMode mode, int width,
                       std::uint64_t seed, int phase,
                       ColoringStrategy strategy,
                       const std::map<int, Matrix>* basis_table = nullptr) {
  SamplingPlan plan;
  // Basis probes have no grid pattern; they always go through the graph.
  if (strategy == ColoringStrategy::kGraph || mode == SampleMode::kUnifStage2) {
    const auto sets = build_constraints(tree, adj, level, mode);
    if (sets.empty()) return plan;
    const auto graph = build_graph(sets);
    const auto coloring = plan_coloring(tree, sets, graph, mode);
    plan.n_vertices = sets.size();
    plan.n_edges = graph.num_edges();
    plan.matrices = assemble_test_matrices(sets, coloring, tree, level, width,
                                           seed, phase, basis_table);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (const auto& owner : sets[i].owners) {
        if (mode == SampleMode::kUnifStage1) {
          plan.box_to_matrix[owner.first] = coloring.color[i];
        } else {
          plan.block_to_matrix[owner] = coloring.color[i];
        }
      }
    }
    return plan;
  }

  plan.matrices =
      fallback_pattern_matrices(tree, adj, level, mode, width, seed, phase);
  const int mod = mode == SampleMode::kH1 ? 6
                  : mode == SampleMode::kUnifStage1 ? 5
                                                    : 3;
  switch (mode) {
    case SampleMode::kH1:
      for (auto [alpha, beta] : admissible_pairs(tree, adj, level)) {
        plan.block_to_matrix[{alpha, beta}] =
            pattern_index(tree.box(beta), mod);
      }
      break;
    case SampleMode::kUnifStage1:
      for (int alpha : tree.level_boxes(level)) {
        if (!adj.interaction[alpha].empty()) {
          plan.box_to_matrix[alpha] = pattern_index(tree.box(alpha), mod);
        }
      }
      break;
    case SampleMode::kLeaf:
      for (auto [lam, mu] : dense_pairs(tree, adj)) {
        plan.block_to_matrix[{lam, mu}] = pattern_index(tree.box(mu), mod);
      }
      break;
    case SampleMode::kUnifStage2:
      break;  // unreachable
  }
  return plan;
}

/// Applies the residual A - A^(prev) (or its adjoint) to every planned test
/// matrix. Empty pattern matrices are skipped and yield empty samples.
template <typename Rep>
std::vector<Matrix> residual_samples(const CountingOperator& op,
                                     const Rep& rep, int prev_level,
                                     const SamplingPlan& plan, bool adjoint,
                                     const std::map<int, Matrix>* basis_table,
                                     std::int64_t& cols_used) {
  std::vector<Matrix> samples(plan.matrices.size());
  for (std::size_t i = 0; i < plan.matrices.size(); ++i) {
    const BlockTestMatrix& m = plan.matrices[i];
    if (m.payload.empty()) continue;
    const Matrix omega = m.realize(*rep.tree, basis_table);
    Matrix y = adjoint ? op.apply_adjoint(omega) : op.apply(omega);
    cols_used += omega.cols();
    if (prev_level >= 2) {
      y -= adjoint ? rep.apply_truncated_adjoint(prev_level, omega)
                   : rep.apply_truncated(prev_level, omega);
    }
    samples[i] = std::move(y);
  }
  return samples;
}

RepMeta make_meta(RepFormat format, const BoxTree& tree,
                  const PeelConfig& config) {
  RepMeta meta;
  meta.format = format;
  meta.n = tree.num_points();
  meta.dim = tree.dim();
  meta.depth = tree.depth();
  meta.leaf_capacity = config.leaf_capacity;
  meta.rank = config.trunc.rank;
  return meta;
}

// Every admissible pair must have its swap in the list; the forward coloring
// then serves the adjoint probes with fresh payload streams.
void check_symmetric_pairs(const std::vector<std::pair<int, int>>& pairs) {
  std::set<std::pair<int, int>> all(pairs.begin(), pairs.end());
  for (auto [a, b] : pairs) {
    if (all.find({b, a}) == all.end()) {
      throw std::logic_error("asymmetric admissibility structure");
    }
  }
}

SamplingPlan rephase(SamplingPlan plan, int phase) {
  for (auto& m : plan.matrices) m.phase = phase;
  return plan;
}

// ---------------------------------------------------------------------------
// H1 driver

H1Rep run_h1(const CountingOperator& op, std::shared_ptr<const BoxTree> tree,
             std::shared_ptr<const AdjacencyInfo> adj,
             const PeelConfig& config, RunReport& report) {
  H1Rep rep(tree, adj);
  rep.meta = make_meta(RepFormat::kH1, *tree, config);
  const TruncationSpec& spec = config.trunc;
  const int r = spec.sample_width();

  for (int l = 2; l <= tree->depth(); ++l) {
    const auto pairs = admissible_pairs(*tree, *adj, l);
    if (pairs.empty()) continue;
    check_symmetric_pairs(pairs);

    PhaseScope scope(report, op, "h1", l);
    const SamplingPlan plan =
        make_plan(*tree, *adj, l, SampleMode::kH1, r, config.seed,
                  kForwardPhase, config.strategy);
    scope.entry().colors = plan.colors();

    const auto ys = residual_samples(op, rep, l - 1, plan, false, nullptr,
                                     scope.entry().forward_cols);
    std::map<PairKey, Matrix> u_bases;
    for (auto [alpha, beta] : pairs) {
      const Matrix& y = plan.block_sample(ys, alpha, beta);
      u_bases[{alpha, beta}] = basis_from_sample(
          detail::gather_rows(y, tree->box(alpha).points), spec);
    }

    // The structure is symmetric, so the adjoint probes reuse the forward
    // color classes; block (alpha, beta) is read off the class of the
    // swapped pair.
    const SamplingPlan adjoint_plan = rephase(plan, kAdjointPhase);
    const auto zs = residual_samples(op, rep, l - 1, adjoint_plan, true,
                                     nullptr, scope.entry().adjoint_cols);
    for (auto [alpha, beta] : pairs) {
      const Matrix& z = adjoint_plan.block_sample(zs, beta, alpha);
      LowRankBlock blk;
      blk.u = std::move(u_bases[{alpha, beta}]);
      blk.v = basis_from_sample(
          detail::gather_rows(z, tree->box(beta).points), spec);

      // B from the samples already in hand: with G the forward payload on
      // beta and G' the adjoint payload on alpha,
      //   B = pinv(G'^T U) (G'^T A_ab G) pinv(V^T G),
      // where G'^T A_ab G = G'^T Y(I_alpha, :).
      const Matrix g = payload_gaussian(*tree, beta, r, config.seed, l,
                                        kForwardPhase);
      const Matrix gp = payload_gaussian(*tree, alpha, r, config.seed, l,
                                         kAdjointPhase);
      const Matrix y_block = detail::gather_rows(
          plan.block_sample(ys, alpha, beta), tree->box(alpha).points);
      flops::add(flops::gemm(r, r, gp.rows()) +
                 flops::gemm(r, blk.u.cols(), gp.rows()) +
                 flops::gemm(blk.v.cols(), r, blk.v.rows()));
      const Matrix middle = gp.transpose() * y_block;
      const Matrix left = pinv_apply(gp.transpose() * blk.u, middle);
      blk.b = pinv_apply((blk.v.transpose() * g).transpose(), left.transpose())
                  .transpose();
      rep.levels[l].emplace(PairKey{alpha, beta}, std::move(blk));
    }
    rep.built_level = l;
  }
  rep.built_level = tree->depth();
  return rep;
}

// ---------------------------------------------------------------------------
// Uniform / nested driver

struct UniformTargets {
  // Either unif (non-null) or h2 (non-null).
  UnifH1Rep* unif = nullptr;
  H2Rep* h2 = nullptr;

  Matrix& u(int box) { return unif ? unif->box_u[box] : h2->long_u[box]; }
  Matrix& v(int box) { return unif ? unif->box_v[box] : h2->long_v[box]; }
  std::map<PairKey, Matrix>& level_b(int l) {
    return unif ? unif->level_b[l] : h2->level_b[l];
  }
};

template <typename Rep>
void run_uniform(const CountingOperator& op, Rep& rep, UniformTargets t,
                 const PeelConfig& config, RunReport& report) {
  const BoxTree& tree = *rep.tree;
  const AdjacencyInfo& adj = *rep.adj;
  const TruncationSpec& spec = config.trunc;
  const int r = spec.sample_width();
  const bool nested = t.h2 != nullptr;

  for (int l = 2; l <= tree.depth(); ++l) {
    const auto pairs = admissible_pairs(tree, adj, l);
    if (pairs.empty()) continue;
    check_symmetric_pairs(pairs);

    // Stage 1: collective samples of each box against its whole interaction
    // list, optionally augmented with the parent's weighted basis.
    {
      PhaseScope scope(report, op, "unif-stage1", l);
      const SamplingPlan plan =
          make_plan(tree, adj, l, SampleMode::kUnifStage1, r, config.seed,
                    kForwardPhase, config.strategy);
      scope.entry().colors = plan.colors();
      const auto ys = residual_samples(op, rep, l - 1, plan, false, nullptr,
                                       scope.entry().forward_cols);
      for (int alpha : tree.level_boxes(l)) {
        const Box& box = tree.box(alpha);
        Matrix sample =
            Matrix::Zero(static_cast<Eigen::Index>(box.points.size()), r);
        bool have_content = false;
        auto it = plan.box_to_matrix.find(alpha);
        if (it != plan.box_to_matrix.end()) {
          sample = detail::gather_rows(ys[it->second], box.points);
          have_content = true;
        }
        if (nested && config.h2_parent_carry && box.parent >= 0) {
          const Matrix& pu = t.h2->long_u[box.parent];
          const Vector& psig = t.h2->sigma_in[box.parent];
          if (pu.size() != 0 && psig.size() != 0) {
            const Box& parent = tree.box(box.parent);
            const auto ci = std::find(parent.children.begin(),
                                      parent.children.end(), alpha) -
                            parent.children.begin();
            const Matrix rows =
                detail::gather_rows(pu, parent.child_rows[ci]);
            const Matrix carry_g = gaussian_matrix(
                psig.size(), r,
                mix_seed(config.seed, kCarryInTag, l, alpha));
            flops::add(flops::gemm(rows.rows(), r, rows.cols()));
            sample += rows * psig.asDiagonal() * carry_g;
            have_content = true;
          }
        }
        if (!have_content) continue;
        Vector sigma;
        t.u(alpha) = basis_from_sample(sample, spec, &sigma);
        if (nested) t.h2->sigma_in[alpha] = std::move(sigma);
      }
    }

    // Stage 2: adjoint probes loaded with the stage-1 bases give per-pair
    // projected samples, the shared row bases, and the couplings.
    {
      PhaseScope scope(report, op, "unif-stage2", l);
      std::map<int, Matrix> basis_table;
      for (int alpha : tree.level_boxes(l)) {
        if (!adj.interaction[alpha].empty()) basis_table[alpha] = t.u(alpha);
      }
      const SamplingPlan plan =
          make_plan(tree, adj, l, SampleMode::kUnifStage2, r, config.seed,
                    kAdjointPhase, ColoringStrategy::kGraph, &basis_table);
      scope.entry().colors = plan.colors();
      const auto zs = residual_samples(op, rep, l - 1, plan, true,
                                       &basis_table, scope.entry().adjoint_cols);

      std::map<PairKey, Matrix> projected;  // S_ab = A_ab^T U_a
      for (auto [alpha, beta] : pairs) {
        const Matrix& z = plan.block_sample(zs, alpha, beta);
        projected[{alpha, beta}] =
            detail::gather_rows(z, tree.box(beta).points)
                .leftCols(t.u(alpha).cols());
      }

      for (int beta : tree.level_boxes(l)) {
        Eigen::Index width = 0;
        for (int alpha : adj.interaction[beta]) {
          width = std::max(width, projected.at({alpha, beta}).cols());
        }
        const Box& box = tree.box(beta);
        bool have_content = width > 0;
        Matrix carry;
        if (nested && config.h2_parent_carry && box.parent >= 0) {
          const Matrix& pv = t.h2->long_v[box.parent];
          const Vector& psig = t.h2->sigma_out[box.parent];
          if (pv.size() != 0 && psig.size() != 0) {
            const Box& parent = tree.box(box.parent);
            const auto ci = std::find(parent.children.begin(),
                                      parent.children.end(), beta) -
                            parent.children.begin();
            const Matrix rows =
                detail::gather_rows(pv, parent.child_rows[ci]);
            const Matrix carry_g = gaussian_matrix(
                psig.size(), r,
                mix_seed(config.seed, kCarryOutTag, l, beta));
            flops::add(flops::gemm(rows.rows(), r, rows.cols()));
            carry = rows * psig.asDiagonal() * carry_g;
            width = std::max<Eigen::Index>(width, r);
            have_content = true;
          }
        }
        if (!have_content) continue;
        Matrix sum = Matrix::Zero(
            static_cast<Eigen::Index>(box.points.size()), width);
        for (int alpha : adj.interaction[beta]) {
          const Matrix& s = projected.at({alpha, beta});
          sum.leftCols(s.cols()) += s;
        }
        if (carry.size() != 0) sum.leftCols(carry.cols()) += carry;
        Vector sigma;
        t.v(beta) = basis_from_sample(sum, spec, &sigma);
        if (nested) t.h2->sigma_out[beta] = std::move(sigma);
      }

      for (auto [alpha, beta] : pairs) {
        const Matrix& s = projected.at({alpha, beta});
        const Matrix& vb = t.v(beta);
        flops::add(flops::gemm(s.cols(), vb.cols(), s.rows()));
        t.level_b(l)[{alpha, beta}] = s.transpose() * vb;
      }
    }
    rep.built_level = l;

    // Nest the previous level: express each parent's long basis in its
    // children's and drop the long form.
    if (nested && l >= 3) {
      for (int tau : tree.level_boxes(l - 1)) {
        const Box& parent = tree.box(tau);
        if (parent.is_leaf()) continue;
        auto nest_one = [&](std::vector<Matrix>& longs,
                            std::vector<Matrix>& shorts) {
          Matrix& lng = longs[tau];
          if (lng.size() == 0) return;
          Eigen::Index stacked = 0;
          for (int c : parent.children) stacked += longs[c].cols();
          Matrix shrt(stacked, lng.cols());
          Eigen::Index off = 0;
          for (std::size_t ci = 0; ci < parent.children.size(); ++ci) {
            const Matrix& cb = longs[parent.children[ci]];
            const Matrix rows =
                detail::gather_rows(lng, parent.child_rows[ci]);
            flops::add(flops::gemm(cb.cols(), lng.cols(), cb.rows()));
            shrt.middleRows(off, cb.cols()) = cb.transpose() * rows;
            off += cb.cols();
          }
          shorts[tau] = std::move(shrt);
          lng.resize(0, 0);
        };
        nest_one(t.h2->long_u, t.h2->short_u);
        nest_one(t.h2->long_v, t.h2->short_v);
      }
    }
  }
  rep.built_level = tree.depth();
}

}  // namespace

// ---------------------------------------------------------------------------

const char* peel_format_name(PeelFormat f) {
  switch (f) {
    case PeelFormat::kH1: return "h1";
    case PeelFormat::kUnifH1: return "unif-h1";
    case PeelFormat::kH1PlusUnif: return "h1-plus-unif";
    case PeelFormat::kH2: return "h2";
  }
  return "?";
}

PeelFormat parse_peel_format(const std::string& name) {
  if (name == "h1") return PeelFormat::kH1;
  if (name == "unif-h1") return PeelFormat::kUnifH1;
  if (name == "h1-plus-unif") return PeelFormat::kH1PlusUnif;
  if (name == "h2") return PeelFormat::kH2;
  throw std::invalid_argument("unknown format: " + name);
}

std::string RunReport::to_csv() const {
  std::ostringstream out;
  out << "phase,level,colors,forward_cols,adjoint_cols,wall_ms_total,"
         "wall_ms_net,net_flops\n";
  for (const PhaseReport& p : phases) {
    out << p.phase << ',' << p.level << ',' << p.colors << ','
        << p.forward_cols << ',' << p.adjoint_cols << ',' << p.wall_ms_total
        << ',' << p.wall_ms_net << ',' << p.net_flops << '\n';
  }
  return out.str();
}

void extract_leaf(const LinearOperator& op, CompressedRep& rep,
                  const PeelConfig& config, RunReport& report) {
  std::visit(
      [&](auto& r) {
        const BoxTree& tree = *r.tree;
        const AdjacencyInfo& adj = *r.adj;
        if (r.built_level < tree.depth()) {
          throw std::runtime_error(
              "leaf extraction needs all admissible levels built");
        }
        CountingOperator counted(op);
        PhaseScope scope(report, counted, "leaf", tree.depth());
        const int width = tree.max_leaf_size();
        const ColoringStrategy strategy = tree.depth() < 2
                                              ? ColoringStrategy::kGraph
                                              : config.strategy;
        const SamplingPlan plan =
            make_plan(tree, adj, tree.depth(), SampleMode::kLeaf, width,
                      config.seed, kForwardPhase, strategy);
        scope.entry().colors = plan.colors();
        const auto ys =
            residual_samples(counted, r, tree.depth(), plan, false, nullptr,
                             scope.entry().forward_cols);
        for (auto [lam, mu] : dense_pairs(tree, adj)) {
          const Matrix& y = plan.block_sample(ys, lam, mu);
          r.dense[{lam, mu}] = detail::gather_rows(y, tree.box(lam).points)
                                   .leftCols(tree.box(mu).points.size());
        }
        r.dense_ready = true;
        const auto s = counted.stats();
        report.forward_cols += s.forward_cols;
        report.adjoint_cols += s.adjoint_cols;
      },
      rep);
}

UnifH1Rep uniformize_h1(const H1Rep& rep, const TruncationSpec& trunc) {
  UnifH1Rep out(rep.tree, rep.adj);
  out.meta = rep.meta;
  out.meta.format = RepFormat::kUnifH1;
  const BoxTree& tree = *rep.tree;
  const AdjacencyInfo& adj = *rep.adj;

  for (int l = 2; l <= tree.depth(); ++l) {
    if (rep.levels[l].empty()) continue;
    for (int alpha : tree.level_boxes(l)) {
      if (adj.interaction[alpha].empty()) continue;
      // Column basis from the stack of scaled per-pair factors U_ab B_ab;
      // row basis from the stack of V_ba B_ba^T.
      Eigen::Index ucols = 0, vcols = 0;
      for (int beta : adj.interaction[alpha]) {
        ucols += rep.levels[l].at({alpha, beta}).b.cols();
        vcols += rep.levels[l].at({beta, alpha}).b.rows();
      }
      const Eigen::Index rows = tree.box(alpha).points.size();
      Matrix ustack(rows, ucols), vstack(rows, vcols);
      Eigen::Index uo = 0, vo = 0;
      for (int beta : adj.interaction[alpha]) {
        const LowRankBlock& ab = rep.levels[l].at({alpha, beta});
        flops::add(flops::gemm(ab.u.rows(), ab.b.cols(), ab.u.cols()));
        ustack.middleCols(uo, ab.b.cols()) = ab.u * ab.b;
        uo += ab.b.cols();
        const LowRankBlock& ba = rep.levels[l].at({beta, alpha});
        flops::add(flops::gemm(ba.v.rows(), ba.b.rows(), ba.v.cols()));
        vstack.middleCols(vo, ba.b.rows()) = ba.v * ba.b.transpose();
        vo += ba.b.rows();
      }
      out.box_u[alpha] = basis_from_sample(ustack, trunc);
      out.box_v[alpha] = basis_from_sample(vstack, trunc);
    }
    for (const auto& [key, blk] : rep.levels[l]) {
      const Matrix& ua = out.box_u[key.first];
      const Matrix& vb = out.box_v[key.second];
      flops::add(flops::gemm(ua.cols(), blk.b.cols(), ua.rows()) +
                 flops::gemm(blk.v.cols(), vb.cols(), blk.v.rows()) +
                 flops::gemm(ua.cols(), vb.cols(), blk.b.cols()));
      out.level_b[l][key] =
          (ua.transpose() * blk.u) * blk.b * (blk.v.transpose() * vb);
    }
  }
  out.dense = rep.dense;
  out.built_level = rep.built_level;
  out.dense_ready = rep.dense_ready;
  return out;
}

PeelResult compress(const LinearOperator& op,
                    std::shared_ptr<const BoxTree> tree,
                    const PeelConfig& config) {
  if (op.rows() != tree->num_points() || op.cols() != tree->num_points()) {
    throw std::invalid_argument("operator and tree dimensions differ");
  }
  config.trunc.validate();
  auto adj = std::make_shared<const AdjacencyInfo>(adjacency(*tree));

  CountingOperator counted(op);
  PeelResult result;
  const auto t0 = Clock::now();
  const std::int64_t flops0 = flops::current();

  switch (config.format) {
    case PeelFormat::kH1: {
      result.rep = run_h1(counted, tree, adj, config, result.report);
      break;
    }
    case PeelFormat::kH1PlusUnif: {
      H1Rep h1 = run_h1(counted, tree, adj, config, result.report);
      CompressedRep tmp = std::move(h1);
      extract_leaf(counted, tmp, config, result.report);
      result.rep = uniformize_h1(std::get<H1Rep>(tmp), config.trunc);
      break;
    }
    case PeelFormat::kUnifH1: {
      UnifH1Rep rep(tree, adj);
      rep.meta = make_meta(RepFormat::kUnifH1, *tree, config);
      UniformTargets targets;
      targets.unif = &rep;
      run_uniform(counted, rep, targets, config, result.report);
      result.rep = std::move(rep);
      break;
    }
    case PeelFormat::kH2: {
      H2Rep rep(tree, adj);
      rep.meta = make_meta(RepFormat::kH2, *tree, config);
      UniformTargets targets;
      targets.h2 = &rep;
      run_uniform(counted, rep, targets, config, result.report);
      result.rep = std::move(rep);
      break;
    }
  }
  if (config.format != PeelFormat::kH1PlusUnif) {
    extract_leaf(counted, result.rep, config, result.report);
  }

  RunReport& rr = result.report;
  const auto stats = counted.stats();
  rr.forward_cols = stats.forward_cols;
  rr.adjoint_cols = stats.adjoint_cols;
  rr.wall_s_total =
      std::chrono::duration<double>(Clock::now() - t0).count();
  rr.wall_s_net = rr.wall_s_total - op_seconds(counted);
  rr.net_flops = flops::current() - flops0;
  for (const PhaseReport& p : rr.phases) {
    if (p.phase != "leaf") {
      rr.max_sampling_colors = std::max(rr.max_sampling_colors, p.colors);
    }
  }
  return result;
}

std::vector<ColoringDiag> coloring_diagnostics(const BoxTree& tree,
                                               const AdjacencyInfo& adj,
                                               SampleMode mode) {
  std::vector<ColoringDiag> diags;
  const int lo = mode == SampleMode::kLeaf ? tree.depth() : 2;
  const int hi = tree.depth();
  for (int l = lo; l <= hi; ++l) {
    ColoringDiag d;
    d.level = l;
    d.mode = mode;
    const auto t0 = Clock::now();
    const auto sets = build_constraints(tree, adj, l, mode);
    if (mode == SampleMode::kLeaf) {
      d.n_blocks = dense_pairs(tree, adj).size();
    } else if (mode == SampleMode::kUnifStage1) {
      std::size_t boxes = 0;
      for (int id : tree.level_boxes(l)) {
        if (!adj.interaction[id].empty()) ++boxes;
      }
      d.n_blocks = boxes;
    } else {
      d.n_blocks = admissible_pairs(tree, adj, l).size();
    }
    d.n_vertices = sets.size();
    if (!sets.empty()) {
      const auto graph = build_graph(sets);
      d.n_edges = graph.num_edges();
      d.n_colors = plan_coloring(tree, sets, graph, mode).num_colors;
    }
    d.wall_ms = ms_between(t0, Clock::now());
    diags.push_back(d);
  }
  return diags;
}

}  // namespace hpeel
