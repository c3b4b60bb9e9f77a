#include "catgeo/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "catgeo/geometry.hpp"
#include "catgeo/synthetic.hpp"

namespace catgeo {

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

std::string le(double tol) {
  std::ostringstream os;
  os << "<= " << tol;
  return os.str();
}

}  // namespace

std::vector<CheckResult> run_planted_selfcheck(std::uint64_t seed, double tol) {
  const PlantedData data = generate_planted(default_planted_spec(0.0, seed));
  const Matrix& g = data.matrix.data;
  const ConceptVectorSet truth = truth_vector_set(data.truth);
  std::vector<CheckResult> out;

  double worst = 0.0;
  for (const auto& [id, node] : data.hierarchy.nodes) {
    const Vector& l = data.truth.vectors.at(id);
    const double b = data.truth.magnitudes.at(id);
    const Vector proj = g * l;
    std::vector<char> member(static_cast<std::size_t>(g.rows()), 0);
    for (auto t : node.token_ids) member[static_cast<std::size_t>(t)] = 1;
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      worst = std::max(worst, std::abs(proj(r) - (member[static_cast<std::size_t>(r)] ? b : 0.0)));
  }
  out.push_back({"projection identity max error", worst, le(tol), worst <= tol});

  for (auto s : {OrthoStatement::a, OrthoStatement::b, OrthoStatement::c, OrthoStatement::d}) {
    const OrthoReport rep = ortho_stats(truth, data.hierarchy, s, OrthoControl::none, seed);
    double m = 0.0;
    bool finite = !rep.rows.empty();
    for (const auto& r : rep.rows) {
      if (!std::isfinite(r.cosine)) finite = false;
      else m = std::max(m, std::abs(r.cosine));
    }
    out.push_back({"orthogonality (" + std::string(to_string(s)) + ") max |cos| over " +
                       std::to_string(rep.rows.size()) + " tuples",
                   m, le(tol), finite && m <= tol});
  }

  for (const auto& [parent, kids] : data.hierarchy.children()) {
    if (kids.size() < 2) continue;
    const auto k = static_cast<std::int64_t>(kids.size());
    const SimplexResult sx = simplex_check(truth, kids);
    out.push_back({"simplex rank under " + parent, static_cast<double>(sx.achieved_rank),
                   "== " + std::to_string(k - 1), sx.is_simplex && sx.achieved_rank == k - 1});

    const PolytopeReport poly =
        polytope_projection(truth, kids, g, polytope_groups(data.hierarchy, kids));
    double outside = 0.0;
    for (const auto& grp : poly.groups)
      if (grp.label == "outside") outside = grp.centroid_norm;
    out.push_back({"outside centroid norm under " + parent, outside, le(tol), outside <= tol});
  }
  return out;
}

}  // namespace catgeo
