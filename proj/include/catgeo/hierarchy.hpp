#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "catgeo/types.hpp"

namespace catgeo {

/// One attribute w with its token set Y(w) (sorted row indices).
struct ConceptNode {
  std::string id;
  std::set<std::string> parent_ids;
  IndexSet token_ids;
  std::optional<IndexSet> train_ids;
  std::optional<IndexSet> test_ids;
  /// Ids absorbed by merge_single_children.
  std::vector<std::string> merged_ids;
  /// Set when filter_min_tokens re-attached this node to a surviving ancestor.
  bool reparented = false;
};

/// Concept DAG. Values are immutable in practice: every operation returns a new hierarchy.
struct ConceptHierarchy {
  std::map<std::string, ConceptNode> nodes;
  std::string pos_tag;
  std::int64_t vocab_size = 0;
  /// (child, parent) edges whose token sets are not nested. Warning only.
  std::vector<std::pair<std::string, std::string>> inclusion_violations;

  const ConceptNode& node(std::string_view id) const;
  bool contains(std::string_view id) const { return nodes.find(std::string(id)) != nodes.end(); }
  std::vector<std::string> ids() const;
  std::vector<std::string> roots() const;
  std::map<std::string, std::vector<std::string>> children() const;
  /// Lexicographically smallest parent, used wherever a unique parent is needed.
  std::optional<std::string> primary_parent(std::string_view id) const;
  bool has_split() const;
};

/// Parses the hierarchy JSON document; checks references, cycles and token ranges,
/// and records set-inclusion violations as warnings.
ConceptHierarchy parse_hierarchy(std::string_view json_text, std::int64_t vocab_size);
ConceptHierarchy load_hierarchy(const std::filesystem::path& path, std::int64_t vocab_size);
std::string hierarchy_to_json(const ConceptHierarchy& h);
void save_hierarchy(const ConceptHierarchy& h, const std::filesystem::path& path);

/// Recomputes inclusion_violations from scratch.
std::vector<std::pair<std::string, std::string>> find_inclusion_violations(const ConceptHierarchy& h);

/// Folds every only-child into its parent until no internal node has a single child.
/// Splits are dropped if any merge happens; split after merging.
ConceptHierarchy merge_single_children(const ConceptHierarchy& h);

/// Drops nodes with fewer than k tokens, re-attaching orphans to their nearest
/// surviving ancestors.
ConceptHierarchy filter_min_tokens(const ConceptHierarchy& h, std::int64_t k);

/// Independent per-node train/test split; node generator seeded with
/// fnv1a64(id) ^ seed, train size ceil(fraction * |Y|).
ConceptHierarchy split_tokens(const ConceptHierarchy& h, double train_fraction, std::uint64_t seed);

struct ClosenessMatrix {
  std::vector<std::string> ids;
  Matrix values;
};

/// 1 / (1 + shortest undirected path length); 0 for disconnected pairs.
ClosenessMatrix graph_closeness(const ConceptHierarchy& h);

/// Y(z) is a subset of Y(w).
bool is_subordinate(const ConceptHierarchy& h, std::string_view z_id, std::string_view w_id);

/// ceil(fraction * n), tolerant of representation error in fraction * n.
std::int64_t train_count(std::int64_t n, double fraction);

}  // namespace catgeo
