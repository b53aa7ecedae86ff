#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hpeel/hmatrix.hpp"

namespace hpeel {

namespace {

constexpr std::uint64_t kRepMagic = 0x3150524C45455048ull;    // "HPEELRP1"
constexpr std::uint64_t kDenseMagic = 0x314D444C45455048ull;  // "HPEELDM1"

struct Writer {
  std::ofstream out;
  explicit Writer(const std::string& path)
      : out(path, std::ios::binary | std::ios::trunc) {
    if (!out) throw std::runtime_error("cannot write " + path);
  }
  template <typename T>
  void put(T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_ints(const std::vector<int>& v) {
    put<std::int32_t>(static_cast<std::int32_t>(v.size()));
    for (int x : v) put<std::int32_t>(x);
  }
  void put_matrix(const Matrix& m) {
    put<std::int64_t>(m.rows());
    put<std::int64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              sizeof(double) * m.size());
  }
  void put_vector(const Vector& v) {
    put<std::int64_t>(v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              sizeof(double) * v.size());
  }
  void put_pair_blocks(const std::map<PairKey, Matrix>& m) {
    put<std::int32_t>(static_cast<std::int32_t>(m.size()));
    for (const auto& [key, mat] : m) {
      put<std::int32_t>(key.first);
      put<std::int32_t>(key.second);
      put_matrix(mat);
    }
  }
};

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("cannot read " + path);
  }
  template <typename T>
  T get() {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("truncated representation file");
    return v;
  }
  std::vector<int> get_ints() {
    const auto n = get<std::int32_t>();
    std::vector<int> v(n);
    for (auto& x : v) x = get<std::int32_t>();
    return v;
  }
  Matrix get_matrix() {
    const auto rows = get<std::int64_t>();
    const auto cols = get<std::int64_t>();
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), sizeof(double) * m.size());
    if (!in) throw std::runtime_error("truncated representation file");
    return m;
  }
  Vector get_vector() {
    const auto n = get<std::int64_t>();
    Vector v(n);
    in.read(reinterpret_cast<char*>(v.data()), sizeof(double) * v.size());
    if (!in) throw std::runtime_error("truncated representation file");
    return v;
  }
  std::map<PairKey, Matrix> get_pair_blocks() {
    std::map<PairKey, Matrix> m;
    const auto count = get<std::int32_t>();
    for (std::int32_t i = 0; i < count; ++i) {
      const int a = get<std::int32_t>();
      const int b = get<std::int32_t>();
      m.emplace(PairKey{a, b}, get_matrix());
    }
    return m;
  }
};

void write_tree(Writer& w, const BoxTree& tree) {
  w.put<std::int32_t>(tree.dim());
  w.put<std::int32_t>(tree.leaf_capacity());
  w.put<std::int64_t>(tree.num_points());
  w.put<std::int32_t>(tree.num_boxes());
  for (const Box& b : tree.boxes()) {
    w.put<std::int32_t>(b.level);
    w.put<std::int32_t>(b.parent);
    for (std::int64_t c : b.coord) w.put<std::int64_t>(c);
    w.put_ints(b.children);
    w.put_ints(b.points);
  }
}

std::shared_ptr<const BoxTree> read_tree(Reader& r) {
  const int dim = r.get<std::int32_t>();
  const int leaf = r.get<std::int32_t>();
  const auto n = r.get<std::int64_t>();
  const int nboxes = r.get<std::int32_t>();
  std::vector<Box> boxes(nboxes);
  for (int i = 0; i < nboxes; ++i) {
    Box& b = boxes[i];
    b.id = i;
    b.level = r.get<std::int32_t>();
    b.parent = r.get<std::int32_t>();
    b.coord.resize(dim);
    for (auto& c : b.coord) c = r.get<std::int64_t>();
    b.children = r.get_ints();
    b.points = r.get_ints();
  }
  return std::make_shared<BoxTree>(
      BoxTree::from_parts(dim, leaf, n, std::move(boxes)));
}

void write_meta(Writer& w, const RepMeta& meta, int built_level,
                bool dense_ready) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(meta.format));
  w.put<std::int64_t>(meta.n);
  w.put<std::int32_t>(meta.dim);
  w.put<std::int32_t>(meta.depth);
  w.put<std::int32_t>(meta.leaf_capacity);
  w.put<std::int32_t>(meta.rank);
  w.put<std::int32_t>(built_level);
  w.put<std::uint8_t>(dense_ready ? 1 : 0);
}

RepMeta read_meta(Reader& r, int& built_level, bool& dense_ready) {
  RepMeta meta;
  meta.format = static_cast<RepFormat>(r.get<std::uint8_t>());
  meta.n = r.get<std::int64_t>();
  meta.dim = r.get<std::int32_t>();
  meta.depth = r.get<std::int32_t>();
  meta.leaf_capacity = r.get<std::int32_t>();
  meta.rank = r.get<std::int32_t>();
  built_level = r.get<std::int32_t>();
  dense_ready = r.get<std::uint8_t>() != 0;
  return meta;
}

}  // namespace

void save_rep(const std::string& path, const CompressedRep& rep) {
  Writer w(path);
  w.put<std::uint64_t>(kRepMagic);
  std::visit(
      [&](const auto& r) {
        write_meta(w, r.meta, r.built_level, r.dense_ready);
        write_tree(w, *r.tree);
      },
      rep);

  if (const auto* h1 = std::get_if<H1Rep>(&rep)) {
    for (const auto& level : h1->levels) {
      w.put<std::int32_t>(static_cast<std::int32_t>(level.size()));
      for (const auto& [key, blk] : level) {
        w.put<std::int32_t>(key.first);
        w.put<std::int32_t>(key.second);
        w.put_matrix(blk.u);
        w.put_matrix(blk.b);
        w.put_matrix(blk.v);
      }
    }
    w.put_pair_blocks(h1->dense);
  } else if (const auto* uh = std::get_if<UnifH1Rep>(&rep)) {
    for (const Matrix& m : uh->box_u) w.put_matrix(m);
    for (const Matrix& m : uh->box_v) w.put_matrix(m);
    for (const auto& level : uh->level_b) w.put_pair_blocks(level);
    w.put_pair_blocks(uh->dense);
  } else if (const auto* h2 = std::get_if<H2Rep>(&rep)) {
    for (const Matrix& m : h2->long_u) w.put_matrix(m);
    for (const Matrix& m : h2->long_v) w.put_matrix(m);
    for (const Matrix& m : h2->short_u) w.put_matrix(m);
    for (const Matrix& m : h2->short_v) w.put_matrix(m);
    for (const Vector& v : h2->sigma_in) w.put_vector(v);
    for (const Vector& v : h2->sigma_out) w.put_vector(v);
    for (const auto& level : h2->level_b) w.put_pair_blocks(level);
    w.put_pair_blocks(h2->dense);
  }
}

CompressedRep load_rep(const std::string& path) {
  Reader r(path);
  if (r.get<std::uint64_t>() != kRepMagic) {
    throw std::runtime_error("not a representation file: " + path);
  }
  int built_level;
  bool dense_ready;
  const RepMeta meta = read_meta(r, built_level, dense_ready);
  auto tree = read_tree(r);
  auto adj = std::make_shared<const AdjacencyInfo>(adjacency(*tree));

  switch (meta.format) {
    case RepFormat::kH1: {
      H1Rep rep(tree, adj);
      rep.meta = meta;
      rep.built_level = built_level;
      rep.dense_ready = dense_ready;
      for (auto& level : rep.levels) {
        const auto count = r.get<std::int32_t>();
        for (std::int32_t i = 0; i < count; ++i) {
          const int a = r.get<std::int32_t>();
          const int b = r.get<std::int32_t>();
          LowRankBlock blk;
          blk.u = r.get_matrix();
          blk.b = r.get_matrix();
          blk.v = r.get_matrix();
          level.emplace(PairKey{a, b}, std::move(blk));
        }
      }
      rep.dense = r.get_pair_blocks();
      return rep;
    }
    case RepFormat::kUnifH1: {
      UnifH1Rep rep(tree, adj);
      rep.meta = meta;
      rep.built_level = built_level;
      rep.dense_ready = dense_ready;
      for (auto& m : rep.box_u) m = r.get_matrix();
      for (auto& m : rep.box_v) m = r.get_matrix();
      for (auto& level : rep.level_b) level = r.get_pair_blocks();
      rep.dense = r.get_pair_blocks();
      return rep;
    }
    case RepFormat::kH2: {
      H2Rep rep(tree, adj);
      rep.meta = meta;
      rep.built_level = built_level;
      rep.dense_ready = dense_ready;
      for (auto& m : rep.long_u) m = r.get_matrix();
      for (auto& m : rep.long_v) m = r.get_matrix();
      for (auto& m : rep.short_u) m = r.get_matrix();
      for (auto& m : rep.short_v) m = r.get_matrix();
      for (auto& v : rep.sigma_in) v = r.get_vector();
      for (auto& v : rep.sigma_out) v = r.get_vector();
      for (auto& level : rep.level_b) level = r.get_pair_blocks();
      rep.dense = r.get_pair_blocks();
      return rep;
    }
  }
  throw std::runtime_error("unknown representation format tag");
}

void save_dense_matrix(const std::string& path, const Matrix& m) {
  Writer w(path);
  w.put<std::uint64_t>(kDenseMagic);
  w.put_matrix(m);
}

Matrix load_dense_matrix(const std::string& path) {
  Reader r(path);
  if (r.get<std::uint64_t>() != kDenseMagic) {
    throw std::runtime_error("not a dense matrix file: " + path);
  }
  return r.get_matrix();
}

}  // namespace hpeel
