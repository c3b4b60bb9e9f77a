#include "catgeo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "catgeo/error.hpp"
#include "catgeo/geometry.hpp"
#include "catgeo/random.hpp"

namespace catgeo {

namespace {

constexpr std::uint64_t kDirectionStream = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kNullStream = 0x8CB92BA72F3D8DD7ULL;

std::uint64_t token_seed(std::uint64_t seed, std::int64_t row) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(row) + 1));
}

std::vector<std::string> root_path(const ConceptHierarchy& h, std::string id) {
  std::vector<std::string> path{id};
  while (auto p = h.primary_parent(id)) {
    id = *p;
    path.push_back(id);
  }
  return path;
}

void validate(const PlantedSpec& spec) {
  if (spec.tree.nodes.empty()) throw Error(Errc::InvalidArgument, "planted tree is empty");
  for (const auto& [id, n] : spec.tree.nodes) {
    if (n.parent_ids.size() > 1) throw Error(Errc::InvalidArgument, id + " has several parents");
    auto it = spec.alphas.find(id);
    if (it == spec.alphas.end() || !(it->second > 0.0))
      throw Error(Errc::InvalidArgument, id + " needs a positive alpha");
  }
  if (spec.tokens_per_leaf < 1) throw Error(Errc::InvalidArgument, "tokens_per_leaf must be >= 1");
  if (spec.random_tokens < 0) throw Error(Errc::InvalidArgument, "random_tokens must be >= 0");
  if (!(spec.noise_sigma >= 0.0)) throw Error(Errc::InvalidArgument, "noise_sigma must be >= 0");
  const auto nodes = static_cast<std::int64_t>(spec.tree.nodes.size());
  if (spec.ambient_dim < nodes + 1)
    throw Error(Errc::DimensionTooSmall, "ambient_dim " + std::to_string(spec.ambient_dim) +
                                             " < node count + 1 = " + std::to_string(nodes + 1));
}

}  // namespace

ConceptHierarchy balanced_tree(int depth, int branching) {
  if (depth < 1 || branching < 1) throw Error(Errc::InvalidArgument, "depth and branching must be >= 1");
  ConceptHierarchy h;
  h.pos_tag = "synthetic";
  std::vector<std::string> level{"n"};
  h.nodes["n"].id = "n";
  for (int d = 1; d < depth; ++d) {
    std::vector<std::string> next;
    for (const auto& p : level)
      for (int b = 0; b < branching; ++b) {
        std::string id = p + "." + std::to_string(b);
        ConceptNode& n = h.nodes[id];
        n.id = id;
        n.parent_ids.insert(p);
        next.push_back(std::move(id));
      }
    level = std::move(next);
  }
  return h;
}

PlantedSpec default_planted_spec(double noise_sigma, std::uint64_t seed) {
  PlantedSpec spec;
  spec.tree = balanced_tree(3, 3);
  for (const auto& id : spec.tree.ids()) spec.alphas[id] = 1.0;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  return spec;
}

PlantedData generate_planted(const PlantedSpec& spec) {
  validate(spec);
  const ConceptHierarchy& tree = spec.tree;
  const std::vector<std::string> ids = tree.ids();
  const auto n_nodes = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index dim = spec.ambient_dim;

  std::map<std::string, Eigen::Index> column;
  for (Eigen::Index i = 0; i < n_nodes; ++i) column[ids[static_cast<std::size_t>(i)]] = i;

  // Orthonormal node directions: Q factor of a seeded Gaussian matrix.
  SplitMix64 dir_rng(spec.seed ^ kDirectionStream);
  Eigen::MatrixXd gauss(dim, n_nodes);
  for (Eigen::Index c = 0; c < n_nodes; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) gauss(r, c) = dir_rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  const Eigen::MatrixXd u = qr.householderQ() * Eigen::MatrixXd::Identity(dim, n_nodes);

  PlantedData out;
  PlantedTruth& truth = out.truth;
  truth.directions = u;

  std::map<std::string, std::set<std::string>> ancestors;  // inclusive
  for (const auto& id : ids) {
    const auto path = root_path(tree, id);
    ancestors[id] = std::set<std::string>(path.begin(), path.end());
    Vector v = Vector::Zero(dim);
    double b = 0.0;
    for (const auto& a : path) {
      const double alpha = spec.alphas.at(a);
      v += alpha * u.col(column[a]);
      b += alpha * alpha;
    }
    truth.vectors[id] = std::move(v);
    truth.magnitudes[id] = b;
  }

  const auto kids = tree.children();
  std::vector<std::string> leaves;
  for (const auto& id : ids)
    if (kids.at(id).empty()) leaves.push_back(id);

  const std::int64_t n_rows =
      static_cast<std::int64_t>(leaves.size()) * spec.tokens_per_leaf + spec.random_tokens;
  UnembeddingMatrix& m = out.matrix;
  m.data = Matrix::Zero(n_rows, dim);
  m.vocab.reserve(static_cast<std::size_t>(n_rows));
  m.source_tag = "planted(seed=" + std::to_string(spec.seed) + ")";
  truth.token_assignment.reserve(static_cast<std::size_t>(n_rows));

  auto add_noise = [&](std::int64_t row) {
    if (spec.noise_sigma == 0.0) return;
    SplitMix64 rng(token_seed(spec.seed, row));
    Vector z(dim);
    for (Eigen::Index k = 0; k < dim; ++k) z(k) = spec.noise_sigma * rng.normal();
    z -= u * (u.transpose() * z);
    m.data.row(row) += z.transpose();
  };

  std::map<std::string, IndexSet> leaf_tokens;
  std::int64_t row = 0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const std::string& leaf = leaves[li];
    const auto& on_path = ancestors.at(leaf);
    Vector pattern = Vector::Zero(dim);
    for (const auto& a : ids) {
      const double alpha = spec.alphas.at(a);
      double coord = 0.0;
      if (on_path.count(a)) {
        coord = alpha;
      } else if (auto p = tree.primary_parent(a); p && on_path.count(*p)) {
        coord = -truth.magnitudes.at(*p) / alpha;
      }
      if (coord != 0.0) pattern += coord * u.col(column[a]);
    }
    for (std::int64_t j = 0; j < spec.tokens_per_leaf; ++j, ++row) {
      m.data.row(row) = pattern.transpose();
      add_noise(row);
      m.vocab.push_back("leaf" + std::to_string(li) + "_tok" + std::to_string(j));
      truth.token_assignment.push_back(leaf);
      leaf_tokens[leaf].push_back(row);
    }
  }
  for (std::int64_t j = 0; j < spec.random_tokens; ++j, ++row) {
    add_noise(row);
    m.vocab.push_back("rand_tok" + std::to_string(j));
    truth.token_assignment.push_back("random");
  }

  ConceptHierarchy& h = out.hierarchy;
  h.pos_tag = tree.pos_tag.empty() ? "synthetic" : tree.pos_tag;
  h.vocab_size = n_rows;
  for (const auto& id : ids) {
    ConceptNode n;
    n.id = id;
    n.parent_ids = tree.node(id).parent_ids;
    for (const auto& leaf : leaves)
      if (ancestors.at(leaf).count(id)) {
        const auto& t = leaf_tokens[leaf];
        n.token_ids.insert(n.token_ids.end(), t.begin(), t.end());
      }
    std::sort(n.token_ids.begin(), n.token_ids.end());
    h.nodes.emplace(id, std::move(n));
  }
  return out;
}

ConceptVectorSet truth_vector_set(const PlantedTruth& truth) {
  ConceptVectorSet set;
  set.transform_mode = TransformMode::identity;
  for (const auto& [id, v] : truth.vectors) {
    ConceptVector cv;
    cv.concept_id = id;
    cv.vector = v;
    cv.magnitude = v.norm();
    set.dim = v.size();
    set.vectors.emplace(id, std::move(cv));
  }
  return set;
}

namespace {

Vector gaussian_mean(std::int64_t d, std::int64_t count, SplitMix64& rng) {
  Vector acc = Vector::Zero(d);
  for (std::int64_t i = 0; i < count; ++i)
    for (std::int64_t k = 0; k < d; ++k) acc(k) += rng.normal();
  return acc / static_cast<double>(count);
}

void check_null_args(std::int64_t d, std::int64_t n_a, std::int64_t n_b) {
  if (d < 2) throw Error(Errc::InvalidArgument, "d must be >= 2");
  if (n_a < 1 || n_b < 1) throw Error(Errc::InvalidArgument, "n_a and n_b must be >= 1");
}

}  // namespace

double set_inclusion_null(std::int64_t d, std::int64_t n_a, std::int64_t n_b, std::uint64_t seed) {
  check_null_args(d, n_a, n_b);
  SplitMix64 rng(seed ^ kNullStream);
  const Vector mean_a = gaussian_mean(d, n_a, rng);
  const Vector mean_b = gaussian_mean(d, n_b, rng);
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const Vector v_z = mean_a;
  const Vector v_w = (na * mean_a + nb * mean_b) / (na + nb);
  return cosine(v_z - v_w, v_w);
}

double set_disjoint_null(std::int64_t d, std::int64_t n_a, std::int64_t n_b, std::uint64_t seed) {
  check_null_args(d, n_a, n_b);
  SplitMix64 rng(seed ^ kNullStream);
  const Vector v_z = gaussian_mean(d, n_a, rng);
  const Vector v_w = gaussian_mean(d, n_a + n_b, rng);
  return cosine(v_z - v_w, v_w);
}

}  // namespace catgeo
