#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catgeo/estimation.hpp"
#include "catgeo/hierarchy.hpp"
#include "catgeo/matrix_io.hpp"

namespace catgeo {

/// Recipe for a matrix whose geometry satisfies the magnitude and hierarchical
/// orthogonality identities exactly. Only the structure of `tree` is used.
struct PlantedSpec {
  ConceptHierarchy tree;
  std::map<std::string, double> alphas;
  std::int64_t tokens_per_leaf = 80;
  std::int64_t random_tokens = 500;
  std::int64_t ambient_dim = 256;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct PlantedTruth {
  /// l_w = sum over the root path of alpha_a u_a.
  std::map<std::string, Vector> vectors;
  /// b_w = sum over the root path of alpha_a^2, the member projection level.
  std::map<std::string, double> magnitudes;
  /// Leaf id per row, or "random".
  std::vector<std::string> token_assignment;
  /// Orthonormal node directions, one column per node in sorted id order.
  Matrix directions;
};

struct PlantedData {
  UnembeddingMatrix matrix;
  ConceptHierarchy hierarchy;  // token sets filled in, no split
  PlantedTruth truth;
};

/// Balanced tree with `depth` levels (depth 1 = root only). Ids are "n",
/// "n.0", "n.0.2", ...
ConceptHierarchy balanced_tree(int depth, int branching);

/// Depth-3, branching-3 tree, alpha = 1, 80 tokens per leaf, 500 random tokens, dim 256.
PlantedSpec default_planted_spec(double noise_sigma, std::uint64_t seed);

/// Rows: leaf tokens grouped by leaf in sorted leaf order, then random tokens.
/// A token of leaf m has coordinate alpha_a on u_a for a on m's root path,
/// -b_p / alpha_a when only a's parent p is on the path, 0 otherwise, plus
/// Gaussian noise confined to the complement of the node directions.
PlantedData generate_planted(const PlantedSpec& spec);

/// Wraps planted vectors as a vector set (all scope), for running analyses on truth.
ConceptVectorSet truth_vector_set(const PlantedTruth& truth);

/// cos(v_z - v_w, v_w) with v_z the mean of n_a standard normals in R^d and
/// v_w the mean of those plus n_b more.
double set_inclusion_null(std::int64_t d, std::int64_t n_a, std::int64_t n_b, std::uint64_t seed);

/// Same statistic with v_w the mean of n_a + n_b fresh draws disjoint from the child's.
double set_disjoint_null(std::int64_t d, std::int64_t n_a, std::int64_t n_b, std::uint64_t seed);

}  // namespace catgeo
