#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hpeel/peeling.hpp"

namespace {

using namespace hpeel;

struct RunConfig {
  std::string experiment = "synthetic";
  std::string format = "h1";
  std::int64_t n = 1024;
  int dim = 1;
  int rank = 10;
  int oversample = 10;
  double tol = 0.0;
  int leaf = 0;  // 0: experiment default
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::int64_t> sweep;
  std::string coloring_csv;
  std::string strategy = "graph";
  int iters = 20;
  std::string rep_path;
  std::vector<int> dims = {1, 2, 3};
  std::vector<double> sigmas = {0.0, 0.01, 0.1};
};

int default_leaf(const std::string& experiment) {
  if (experiment == "fmm3d" || experiment == "frontal") return 50;
  if (experiment == "bie" || experiment == "n2d") return 200;
  return 64;
}

struct Experiment {
  std::shared_ptr<LinearOperator> op;
  std::shared_ptr<const BoxTree> tree;
  std::shared_ptr<const AdjacencyInfo> adj;
  Eigen::MatrixXd raw_points;
};

Experiment build_experiment(const RunConfig& config, std::int64_t n) {
  Experiment e;
  if (config.experiment == "bie" || config.experiment == "n2d") {
    const Contour2D contour = star_contour(n);
    e.raw_points = contour.points;
    if (config.experiment == "bie") {
      e.op = std::make_shared<DenseOperator>(assemble_bie_double_layer(contour));
    } else {
      e.op = std::make_shared<N2dOperator>(contour);
    }
  } else if (config.experiment == "fmm3d") {
    e.raw_points = sphere_points(n, mix_seed(config.seed, 0xfee1));
    e.op = std::make_shared<DenseOperator>(
        assemble_inverse_distance(e.raw_points));
  } else if (config.experiment == "frontal") {
    e.raw_points = equispaced_1d(n);
    e.op = std::make_shared<FrontalOperator>(n, 51);
  } else if (config.experiment == "synthetic") {
    e.raw_points = config.dim == 1
                       ? Eigen::MatrixXd(equispaced_1d(n))
                       : random_cloud(n, config.dim,
                                      mix_seed(config.seed, 0xc10d));
  } else {
    throw std::invalid_argument("unknown experiment: " + config.experiment);
  }

  const int leaf =
      config.leaf > 0 ? config.leaf : default_leaf(config.experiment);
  e.tree = std::make_shared<const BoxTree>(
      BoxTree::build(PointCloud::from_raw(e.raw_points), leaf));
  e.adj = std::make_shared<const AdjacencyInfo>(adjacency(*e.tree));

  if (config.experiment == "synthetic") {
    const PeelFormat pf = parse_peel_format(config.format);
    const RepFormat truth = pf == PeelFormat::kH1
                                ? RepFormat::kH1
                                : (pf == PeelFormat::kH2 ? RepFormat::kH2
                                                         : RepFormat::kUnifH1);
    e.op = std::make_shared<DenseOperator>(synth_rank_structured(
        *e.tree, *e.adj, truth, config.rank, mix_seed(config.seed, 0x5117)));
  }
  return e;
}

PeelConfig make_peel_config(const RunConfig& config, int leaf) {
  PeelConfig pc;
  pc.trunc = config.tol > 0.0
                 ? TruncationSpec::rel_tol(config.tol,
                                           config.rank + config.oversample)
                 : TruncationSpec::fixed_rank(config.rank, config.oversample);
  pc.leaf_capacity = leaf;
  pc.seed = config.seed;
  pc.format = parse_peel_format(config.format);
  if (config.strategy == "fallback-pattern") {
    pc.strategy = ColoringStrategy::kFallbackPattern;
  } else if (config.strategy == "graph") {
    pc.strategy = ColoringStrategy::kGraph;
  } else {
    throw std::invalid_argument("unknown strategy: " + config.strategy);
  }
  return pc;
}

void write_coloring_csv(const Experiment& e, const std::string& path) {
  std::ofstream out(path);
  out << "level,mode,n_blocks,n_vertices,n_edges,n_colors,wall_ms\n";
  for (SampleMode mode :
       {SampleMode::kH1, SampleMode::kUnifStage1, SampleMode::kLeaf}) {
    const char* name = mode == SampleMode::kH1 ? "h1"
                       : mode == SampleMode::kUnifStage1 ? "unif-stage1"
                                                         : "leaf";
    for (const ColoringDiag& d : coloring_diagnostics(*e.tree, *e.adj, mode)) {
      out << d.level << ',' << name << ',' << d.n_blocks << ','
          << d.n_vertices << ',' << d.n_edges << ',' << d.n_colors << ','
          << d.wall_ms << '\n';
    }
  }
}

std::string artifact_name(const RunConfig& config, const char* prefix,
                          std::int64_t n, const char* ext) {
  std::ostringstream name;
  name << prefix << '_' << config.experiment << '_' << config.format << '_'
       << n << ext;
  return name.str();
}

int cmd_compress(const RunConfig& config) {
  std::vector<std::int64_t> sizes = config.sweep;
  if (sizes.empty()) sizes.push_back(config.n);
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw std::invalid_argument("sweep sizes must be strictly increasing");
    }
  }

  const std::filesystem::path out_dir = config.out.empty() ? "." : config.out;
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path results_path = out_dir / "results.csv";
  const bool fresh = !std::filesystem::exists(results_path);
  std::ofstream results(results_path, std::ios::app);
  const char* header =
      "experiment,format,N,k,p,m,seed,t_total_s,t_net_s,apply_cols,"
      "adjoint_cols,rel_err_power20,scalars_per_dof,colors_max";
  if (fresh) results << header << '\n';
  std::cout << header << '\n';

  for (std::int64_t n : sizes) {
    const Experiment e = build_experiment(config, n);
    const PeelConfig pc = make_peel_config(config, e.tree->leaf_capacity());
    const PeelResult result = compress(*e.op, e.tree, pc);

    const RepOperator approx(result.rep);
    const double rel_err = rel_error_power_method(
        approx, *e.op, 20, mix_seed(config.seed, 0xe51));
    const StorageStats stats = rep_storage(result.rep);

    save_rep((out_dir / artifact_name(config, "rep", n, ".hrep")).string(),
             result.rep);
    std::ofstream(out_dir / artifact_name(config, "run_report", n, ".csv"))
        << result.report.to_csv();
    if (!config.coloring_csv.empty()) {
      write_coloring_csv(e, config.coloring_csv);
    }

    std::ostringstream row;
    row << config.experiment << ',' << config.format << ',' << n << ','
        << pc.trunc.rank << ',' << pc.trunc.oversample << ','
        << e.tree->leaf_capacity() << ',' << config.seed << ','
        << result.report.wall_s_total << ',' << result.report.wall_s_net << ','
        << result.report.forward_cols << ',' << result.report.adjoint_cols
        << ',' << rel_err << ',' << stats.per_dof << ','
        << result.report.max_sampling_colors;
    results << row.str() << '\n';
    std::cout << row.str() << std::endl;
  }
  return 0;
}

int cmd_coloring_study(const RunConfig& config) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!config.out.empty()) {
    file.open(config.out);
    if (!file) throw std::runtime_error("cannot write " + config.out);
    out = &file;
  }
  (*out) << "d,sigma,level,n_colors\n";
  const int leaf = config.leaf > 0 ? config.leaf : 64;
  for (int d : config.dims) {
    if (d < 1 || d > 6) throw std::invalid_argument("dims must lie in 1..6");
    for (double sigma : config.sigmas) {
      const Eigen::MatrixXd pts = line_with_noise_points(
          config.n, d, sigma, mix_seed(config.seed, 0x11e, d));
      const BoxTree tree = BoxTree::build(PointCloud::from_raw(pts), leaf);
      const AdjacencyInfo adj = adjacency(tree);
      for (const ColoringDiag& diag :
           coloring_diagnostics(tree, adj, SampleMode::kH1)) {
        (*out) << d << ',' << sigma << ',' << diag.level << ','
               << diag.n_colors << '\n';
      }
    }
  }
  return 0;
}

int cmd_verify(const RunConfig& config) {
  if (config.iters < 1) {
    throw std::invalid_argument("power method needs iters >= 1");
  }
  const CompressedRep rep = load_rep(config.rep_path);
  const RepMeta& meta = rep_meta(rep);
  const Experiment e = build_experiment(config, config.n);
  if (meta.n != e.tree->num_points()) {
    throw std::runtime_error("representation size " + std::to_string(meta.n) +
                             " does not match operator size " +
                             std::to_string(e.tree->num_points()));
  }
  const RepOperator approx(rep);
  const double rel_err = rel_error_power_method(
      approx, *e.op, config.iters, mix_seed(config.seed, 0xe51));

  const Matrix x = gaussian_matrix(meta.n, 1, mix_seed(config.seed, 1));
  const Matrix y = gaussian_matrix(meta.n, 1, mix_seed(config.seed, 2));
  const double lhs = (approx.apply(x).transpose() * y)(0, 0);
  const double rhs = (x.transpose() * approx.apply_adjoint(y))(0, 0);
  const double adj_residual =
      std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));

  const StorageStats stats = rep_storage(rep);
  std::cout << "format: " << format_name(meta.format) << "\n"
            << "n: " << meta.n << "\n"
            << "rel_err_power" << config.iters << ": " << rel_err << "\n"
            << "adjoint_probe_residual: " << adj_residual << "\n"
            << "stored_scalars: " << stats.total << "\n"
            << "scalars_per_dof: " << stats.per_dof << "\n";
  for (const auto& [key, count] : stats.breakdown) {
    if (count > 0) {
      std::cout << "storage[level=" << key.first << ',' << key.second
                << "]: " << count << "\n";
    }
  }
  return 0;
}

int cmd_synth(const RunConfig& config) {
  if (config.n > 4096) {
    throw std::invalid_argument("dense mirror dumps are capped at 4096");
  }
  const std::filesystem::path out_dir = config.out.empty() ? "." : config.out;
  std::filesystem::create_directories(out_dir);
  RunConfig local = config;
  local.experiment = "synthetic";
  const Experiment e = build_experiment(local, config.n);
  const auto& dense_op = dynamic_cast<const DenseOperator&>(*e.op);
  save_dense_matrix(
      (out_dir / artifact_name(local, "synth", config.n, ".bin")).string(),
      dense_op.dense());
  std::ofstream pts(out_dir /
                    artifact_name(local, "synth", config.n, "_points.csv"));
  for (Eigen::Index i = 0; i < e.raw_points.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.raw_points.cols(); ++j) {
      pts << e.raw_points(i, j) << (j + 1 < e.raw_points.cols() ? "," : "");
    }
    pts << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-structured compression from black-box products"};
  app.require_subcommand(1);
  app.set_config("--config");

  RunConfig config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--experiment", config.experiment,
                    "bie | n2d | fmm3d | frontal | synthetic");
    cmd->add_option("--format", config.format,
                    "h1 | unif-h1 | h1-plus-unif | h2");
    cmd->add_option("--n", config.n, "problem size");
    cmd->add_option("--dim", config.dim, "ambient dimension (synthetic)");
    cmd->add_option("--rank", config.rank, "target rank k");
    cmd->add_option("--oversample", config.oversample, "oversampling p");
    cmd->add_option("--tol", config.tol, "relative tolerance (overrides rank)");
    cmd->add_option("--leaf", config.leaf, "leaf capacity m");
    cmd->add_option("--seed", config.seed, "random seed")
        ->envname("HPEEL_SEED");
    cmd->add_option("--out", config.out, "output directory or file");
    cmd->add_option("--strategy", config.strategy, "graph | fallback-pattern");
  };

  CLI::App* compress_cmd =
      app.add_subcommand("compress", "compress a black box");
  add_common(compress_cmd);
  compress_cmd
      ->add_option("--sweep", config.sweep, "comma-separated increasing sizes")
      ->delimiter(',');
  compress_cmd->add_option("--coloring-csv", config.coloring_csv,
                           "write per-level coloring diagnostics here");

  CLI::App* study_cmd =
      app.add_subcommand("coloring-study", "line-with-noise color counts");
  add_common(study_cmd);
  study_cmd->add_option("--dims", config.dims, "ambient dimensions")
      ->delimiter(',');
  study_cmd->add_option("--sigmas", config.sigmas, "noise levels")
      ->delimiter(',');

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "check a stored representation");
  add_common(verify_cmd);
  verify_cmd->add_option("--rep", config.rep_path, "representation file")
      ->required();
  verify_cmd->add_option("--iters", config.iters, "power method iterations");

  CLI::App* synth_cmd =
      app.add_subcommand("synth", "dump a synthetic dense mirror");
  add_common(synth_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (compress_cmd->parsed()) return cmd_compress(config);
    if (study_cmd->parsed()) return cmd_coloring_study(config);
    if (verify_cmd->parsed()) return cmd_verify(config);
    if (synth_cmd->parsed()) return cmd_synth(config);
  } catch (const std::invalid_argument& err) {
    std::cout << nlohmann::json{{"error", err.what()}}.dump() << std::endl;
    return 2;
  } catch (const std::exception& err) {
    std::cout << nlohmann::json{{"error", err.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
