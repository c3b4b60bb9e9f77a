#include "catgeo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "catgeo/error.hpp"
#include "catgeo/random.hpp"
#include "catgeo/reductions.hpp"

namespace catgeo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_row(const Matrix& g, std::int64_t r) {
  if (r < 0 || r >= g.rows())
    throw Error(Errc::TokenOutOfRange, "token " + std::to_string(r) + " outside the matrix");
}

}  // namespace

std::string_view to_string(ProjectionGroup g) noexcept {
  switch (g) {
    case ProjectionGroup::train: return "train";
    case ProjectionGroup::test: return "test";
    case ProjectionGroup::random: return "random";
  }
  return "unknown";
}

std::string_view to_string(OrthoStatement s) noexcept {
  switch (s) {
    case OrthoStatement::a: return "a";
    case OrthoStatement::b: return "b";
    case OrthoStatement::c: return "c";
    case OrthoStatement::d: return "d";
  }
  return "?";
}

std::string_view to_string(OrthoControl c) noexcept {
  switch (c) {
    case OrthoControl::none: return "none";
    case OrthoControl::random_parent: return "random-parent";
    case OrthoControl::shuffled: return "shuffled";
  }
  return "unknown";
}

OrthoStatement parse_statement(std::string_view text) {
  if (text == "a") return OrthoStatement::a;
  if (text == "b") return OrthoStatement::b;
  if (text == "c") return OrthoStatement::c;
  if (text == "d") return OrthoStatement::d;
  throw Error(Errc::InvalidArgument, "statement must be one of a, b, c, d");
}

OrthoControl parse_control(std::string_view text) {
  if (text == "none") return OrthoControl::none;
  if (text == "random-parent" || text == "random_parent") return OrthoControl::random_parent;
  if (text == "shuffled") return OrthoControl::shuffled;
  throw Error(Errc::InvalidArgument, "control must be none, random-parent or shuffled");
}

std::string_view to_string(PairRole r) noexcept { return r == PairRole::parent ? "parent" : "child"; }

double cosine(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return kNaN;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------- projections

std::vector<ProjectionRow> ProjectionReport::group(ProjectionGroup g) const {
  std::vector<ProjectionRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [g](const auto& r) { return r.group == g; });
  return out;
}

ProjectionReport projection_report(const ConceptVectorSet& set, const ConceptHierarchy& h,
                                   const Matrix& g, std::int64_t random_count, std::uint64_t seed) {
  ProjectionReport report;
  for (const auto& [id, cv] : set.vectors) {
    const ConceptNode& node = h.node(id);
    const double norm2 = cv.vector.squaredNorm();
    if (!(norm2 > 0.0)) {
      report.skipped.push_back(id);
      continue;
    }

    auto emit = [&](ProjectionGroup group, const IndexSet& tokens) {
      std::vector<double> values;
      values.reserve(tokens.size());
      for (auto t : tokens) {
        check_row(g, t);
        values.push_back(g.row(t).dot(cv.vector) / norm2);
      }
      const auto [mean, std] = reductions::mean_std(values);
      report.rows.push_back({id, group, mean, std, static_cast<std::int64_t>(values.size())});
    };

    if (cv.token_scope == TokenScope::train) {
      if (!node.train_ids || !node.test_ids)
        throw Error(Errc::Precondition, id + ": train-scope vector but the hierarchy has no split");
      if (node.test_ids->empty()) throw Error(Errc::EmptyGroup, id + " has no test tokens");
      emit(ProjectionGroup::train, *node.train_ids);
      emit(ProjectionGroup::test, *node.test_ids);
    } else {
      emit(ProjectionGroup::train, node.token_ids);
    }

    if (random_count > 0) {
      IndexSet outside;
      outside.reserve(static_cast<std::size_t>(g.rows()) - std::min<std::size_t>(node.token_ids.size(), static_cast<std::size_t>(g.rows())));
      auto it = node.token_ids.begin();
      for (std::int64_t r = 0; r < g.rows(); ++r) {
        while (it != node.token_ids.end() && *it < r) ++it;
        if (it == node.token_ids.end() || *it != r) outside.push_back(r);
      }
      if (!outside.empty()) {
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(random_count), outside.size());
        SplitMix64 rng(fnv1a64(id) ^ seed);
        // Partial Fisher-Yates: the first `take` slots become the sample.
        for (std::size_t i = 0; i < take; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng.below(outside.size() - i));
          std::swap(outside[i], outside[j]);
        }
        outside.resize(take);
        emit(ProjectionGroup::random, outside);
      }
    }
  }
  return report;
}

// -------------------------------------------------------------------- cosines

CosineMatrix cosine_matrix(const ConceptVectorSet& set) {
  if (set.vectors.empty()) throw Error(Errc::EmptySet, "no vectors");
  CosineMatrix out;
  std::vector<const Vector*> vs;
  for (const auto& [id, cv] : set.vectors) {
    out.ids.push_back(id);
    vs.push_back(&cv.vector);
    if (!(cv.vector.norm() > 0.0)) out.zero_ids.push_back(id);
  }
  const auto n = static_cast<Eigen::Index>(vs.size());
  out.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double c = i == j && vs[static_cast<std::size_t>(i)]->norm() > 0.0
                           ? 1.0
                           : cosine(*vs[static_cast<std::size_t>(i)], *vs[static_cast<std::size_t>(j)]);
      out.values(i, j) = c;
      out.values(j, i) = c;
    }
  return out;
}

// ------------------------------------------------------ hierarchical orthogonality

OrthoSummary OrthoReport::summary() const {
  OrthoSummary s;
  std::vector<double> values;
  std::vector<double> abs_values;
  for (const auto& r : rows) {
    if (std::isnan(r.cosine)) {
      ++s.nan_count;
      continue;
    }
    values.push_back(r.cosine);
    abs_values.push_back(std::abs(r.cosine));
  }
  s.count = static_cast<std::int64_t>(values.size());
  s.mean_cosine = reductions::mean_std(values).first;
  s.mean_abs_cosine = reductions::mean_std(abs_values).first;
  return s;
}

namespace {

class RandomNodePicker {
 public:
  RandomNodePicker(const ConceptVectorSet& set, std::uint64_t seed) : rng_(seed) {
    for (const auto& [id, _] : set.vectors) ids_.push_back(id);
  }

  /// Uniform over ids not in `exclude`; nullopt when nothing is left.
  std::optional<std::string> pick(const std::set<std::string>& exclude) {
    std::vector<const std::string*> pool;
    for (const auto& id : ids_)
      if (!exclude.count(id)) pool.push_back(&id);
    if (pool.empty()) return std::nullopt;
    return *pool[static_cast<std::size_t>(rng_.below(pool.size()))];
  }

 private:
  SplitMix64 rng_;
  std::vector<std::string> ids_;
};

std::vector<std::string> children_in_set(const std::map<std::string, std::vector<std::string>>& kids,
                                         const std::string& id, const ConceptVectorSet& set) {
  std::vector<std::string> out;
  for (const auto& c : kids.at(id))
    if (set.contains(c)) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

OrthoReport ortho_stats(const ConceptVectorSet& set, const ConceptHierarchy& h, OrthoStatement statement,
                        OrthoControl control, std::uint64_t seed) {
  OrthoReport report;
  RandomNodePicker picker(set, seed);
  const bool randomize = control == OrthoControl::random_parent;
  const auto kids = h.children();
  auto vec = [&](const std::string& id) -> const Vector& { return set.at(id).vector; };
  auto add = [&](const std::string& owner, std::string tuple, double c) {
    report.rows.push_back({owner, std::move(tuple), statement, c, control});
  };

  for (const auto& [id, _] : set.vectors) {
    if (!h.contains(id)) continue;
    switch (statement) {
      case OrthoStatement::a: {
        auto parent = h.primary_parent(id);
        if (!parent || !set.contains(*parent)) break;
        std::string w = *parent;
        if (randomize) {
          auto r = picker.pick({id, *parent});
          if (!r) break;
          w = *r;
        }
        add(id, w + "|" + id, cosine(vec(w), vec(id) - vec(w)));
        break;
      }
      case OrthoStatement::b: {
        const auto children = children_in_set(kids, id, set);
        for (std::size_t i = 0; i < children.size(); ++i)
          for (std::size_t j = i + 1; j < children.size(); ++j) {
            const auto& z0 = children[i];
            const auto& z1 = children[j];
            std::string w = id;
            if (randomize) {
              auto r = picker.pick({id, z0, z1});
              if (!r) continue;
              w = *r;
            }
            add(id, w + "|" + z0 + "|" + z1, cosine(vec(w), vec(z1) - vec(z0)));
          }
        break;
      }
      case OrthoStatement::c: {
        auto parent = h.primary_parent(id);
        if (!parent || !set.contains(*parent)) break;
        const auto siblings = children_in_set(kids, *parent, set);
        auto w0 = std::find_if(siblings.begin(), siblings.end(), [&](const auto& s) { return s != id; });
        if (w0 == siblings.end()) break;
        const auto children = children_in_set(kids, id, set);
        for (std::size_t i = 0; i < children.size(); ++i)
          for (std::size_t j = i + 1; j < children.size(); ++j) {
            const auto& z0 = children[i];
            const auto& z1 = children[j];
            std::string w1 = id;
            if (randomize) {
              auto r = picker.pick({id, *w0, z0, z1});
              if (!r) continue;
              w1 = *r;
            }
            add(id, w1 + "|" + *w0 + "|" + z0 + "|" + z1,
                cosine(vec(w1) - vec(*w0), vec(z1) - vec(z0)));
          }
        break;
      }
      case OrthoStatement::d: {
        auto p1 = h.primary_parent(id);
        if (!p1 || !set.contains(*p1)) break;
        auto p0 = h.primary_parent(*p1);
        if (!p0 || !set.contains(*p0)) break;
        std::string w1 = *p1;
        std::string w0 = *p0;
        if (randomize) {
          auto r1 = picker.pick({id, *p1, *p0});
          if (!r1) break;
          auto r0 = picker.pick({id, *p1, *p0, *r1});
          if (!r0) break;
          w1 = *r1;
          w0 = *r0;
        }
        add(id, w0 + "|" + w1 + "|" + id, cosine(vec(w1) - vec(w0), vec(id) - vec(w1)));
        break;
      }
    }
  }
  if (report.rows.empty())
    throw Error(Errc::NoEligibleTuples, "no tuples for statement " + std::string(to_string(statement)));
  return report;
}

// ------------------------------------------------------------------- polytopes

namespace {

Matrix contrast_columns(const ConceptVectorSet& set, const std::vector<std::string>& member_ids) {
  if (member_ids.size() < 2) throw Error(Errc::InvalidArgument, "need at least 2 members");
  const Vector& base = set.at(member_ids.front()).vector;
  Matrix l(base.size(), static_cast<Eigen::Index>(member_ids.size() - 1));
  for (std::size_t i = 1; i < member_ids.size(); ++i)
    l.col(static_cast<Eigen::Index>(i - 1)) = set.at(member_ids[i]).vector - base;
  return l;
}

std::int64_t numeric_rank(const Vector& singular_values, double tol) {
  if (singular_values.size() == 0) return 0;
  const double top = singular_values.maxCoeff();
  if (!(top > 0.0)) return 0;
  return (singular_values.array() > tol * top).count();
}

}  // namespace

double PolytopeReport::min_centroid_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j)
      best = std::min(best, (groups[i].centroid - groups[j].centroid).norm());
  return best;
}

PolytopeReport polytope_projection(const ConceptVectorSet& set, const std::vector<std::string>& member_ids,
                                   const Matrix& g, const TokenGroups& token_groups) {
  const Matrix l = contrast_columns(set, member_ids);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(l), Eigen::ComputeThinU);

  PolytopeReport report;
  report.member_ids = member_ids;
  report.singular_values = svd.singularValues();
  report.rank = numeric_rank(report.singular_values, kRankTolerance);
  report.rank_deficient = report.rank < static_cast<std::int64_t>(member_ids.size()) - 1;
  // Orthonormal basis of C(L); projecting onto it equals L (L^T L)^+ L^T.
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(report.rank);

  for (const auto& [label, tokens] : token_groups) {
    PolytopeGroup group;
    group.label = label;
    group.count = static_cast<std::int64_t>(tokens.size());
    group.centroid = Vector::Zero(report.rank);
    if (tokens.empty()) {
      report.groups.push_back(std::move(group));
      continue;
    }
    Matrix coords(static_cast<Eigen::Index>(tokens.size()), report.rank);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      check_row(g, tokens[i]);
      coords.row(static_cast<Eigen::Index>(i)) = (basis.transpose() * g.row(tokens[i]).transpose()).transpose();
    }
    group.centroid = reductions::column_mean(coords);
    group.centroid_norm = group.centroid.norm();
    std::vector<double> dist(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i)
      dist[i] = (coords.row(static_cast<Eigen::Index>(i)).transpose() - group.centroid).norm();
    group.dispersion = reductions::mean_std(dist).first;
    report.groups.push_back(std::move(group));
  }
  return report;
}

TokenGroups polytope_groups(const ConceptHierarchy& h, const std::vector<std::string>& member_ids) {
  TokenGroups groups;
  std::set<std::int64_t> covered;
  for (const auto& id : member_ids) {
    const auto& tokens = h.node(id).token_ids;
    groups.emplace_back(id, tokens);
    covered.insert(tokens.begin(), tokens.end());
  }
  IndexSet outside;
  for (std::int64_t r = 0; r < h.vocab_size; ++r)
    if (!covered.count(r)) outside.push_back(r);
  groups.emplace_back("outside", std::move(outside));
  return groups;
}

SimplexResult simplex_check(const ConceptVectorSet& set, const std::vector<std::string>& member_ids, double tol) {
  const Matrix l = contrast_columns(set, member_ids);
  const Eigen::MatrixXd dense = l;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  SimplexResult r;
  r.achieved_rank = numeric_rank(svd.singularValues(), tol);
  r.is_simplex = r.achieved_rank == static_cast<std::int64_t>(member_ids.size()) - 1;
  return r;
}

// ---------------------------------------------------------------- interventions

InterventionRow intervention_logit_change(const Vector& contrast, std::span<const std::int64_t> y0_ids,
                                          std::span<const std::int64_t> y1_ids, const Matrix& g,
                                          std::int64_t max_pairs, std::uint64_t seed, PairRole role) {
  if (y0_ids.empty() || y1_ids.empty()) throw Error(Errc::EmptySet, "both token sets must be nonempty");
  if (contrast.size() != g.cols()) throw Error(Errc::DimensionMismatch, "contrast length != embedding dim");
  if (max_pairs < 1) throw Error(Errc::InvalidArgument, "max_pairs must be >= 1");

  auto project = [&](std::span<const std::int64_t> ids) {
    std::vector<double> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      check_row(g, ids[i]);
      out[i] = g.row(ids[i]).dot(contrast);
    }
    return out;
  };
  const auto p0 = project(y0_ids);
  const auto p1 = project(y1_ids);

  InterventionRow row;
  row.pair_role = role;
  const auto n0 = static_cast<std::int64_t>(p0.size());
  const auto n1 = static_cast<std::int64_t>(p1.size());
  if (n0 <= max_pairs / n1) {
    // Over the full product the pair differences have mean m1 - m0 and
    // population variance v1 + v0.
    const auto [m0, s0] = reductions::mean_std(p0);
    const auto [m1, s1] = reductions::mean_std(p1);
    row.mean_change = m1 - m0;
    row.std_change = std::sqrt(s0 * s0 + s1 * s1);
    row.n_pairs = n0 * n1;
  } else {
    SplitMix64 rng(seed);
    std::vector<double> changes(static_cast<std::size_t>(max_pairs));
    for (auto& c : changes) {
      const auto i = rng.below(p0.size());
      const auto j = rng.below(p1.size());
      c = p1[j] - p0[i];
    }
    const auto [m, s] = reductions::mean_std(changes);
    row.mean_change = m;
    row.std_change = s;
    row.n_pairs = max_pairs;
  }
  return row;
}

// ------------------------------------------------------------ subspace coordinates

CoordTable subspace_coords(const std::vector<Vector>& basis, const Matrix& g, const TokenGroups& token_groups) {
  if (basis.size() < 2 || basis.size() > 3) throw Error(Errc::InvalidArgument, "basis needs 2 or 3 vectors");
  std::vector<Vector> ortho;
  for (const auto& b : basis) {
    if (b.size() != g.cols()) throw Error(Errc::DimensionMismatch, "basis vector length != embedding dim");
    Vector v = b;
    for (const auto& q : ortho) v -= q.dot(v) * q;  // modified Gram-Schmidt
    const double n = v.norm();
    if (!(n > 1e-10 * b.norm())) throw Error(Errc::DependentBasis, "basis vectors are linearly dependent");
    ortho.push_back(v / n);
  }

  CoordTable table;
  std::size_t total = 0;
  for (const auto& [_, tokens] : token_groups) total += tokens.size();
  table.coords.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(ortho.size()));
  Eigen::Index row = 0;
  for (const auto& [label, tokens] : token_groups)
    for (auto t : tokens) {
      check_row(g, t);
      for (std::size_t k = 0; k < ortho.size(); ++k)
        table.coords(row, static_cast<Eigen::Index>(k)) = g.row(t).dot(ortho[k]);
      table.labels.push_back(label);
      table.token_ids.push_back(t);
      ++row;
    }
  return table;
}

}  // namespace catgeo
