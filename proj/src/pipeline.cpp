#include "catgeo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "catgeo/error.hpp"
#include "catgeo/hierarchy.hpp"
#include "catgeo/matrix_io.hpp"
#include "catgeo/report_io.hpp"

namespace catgeo {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, double> default_thresholds() {
  return {{"projection_test_min", 0.9},   {"projection_test_max", 1.1},
          {"projection_random_abs", 0.1}, {"shuffled_test_abs", 0.2},
          {"ortho_abs_max", 0.1},         {"random_parent_abs_min", 0.2},
          {"shuffled_split_abs_min", 0.15}};
}

json RunConfig::to_json() const {
  json iv = json::array();
  for (const auto& s : interventions) iv.push_back({{"w0", s.w0}, {"w1", s.w1}, {"z0", s.z0}, {"z1", s.z1}});
  return {{"seed", seed},
          {"matrix", matrix_path.string()},
          {"vocab", vocab_path.string()},
          {"hier", hierarchy_path.string()},
          {"mode", std::string(to_string(transform_mode))},
          {"floor_ratio", floor_ratio},
          {"method", std::string(to_string(estimator))},
          {"split_fraction", split_fraction},
          {"min_tokens", min_tokens},
          {"merge", merge},
          {"random_count", random_count},
          {"max_pairs", max_pairs},
          {"interventions", iv},
          {"unit_norm", unit_norm},
          {"thresholds", thresholds}};
}

namespace {

class Run {
 public:
  explicit Run(const RunConfig& cfg) : cfg_(cfg) {}

  void text(const std::string& name, const std::string& content) {
    report_io::write_text(cfg_.out_dir / name, content);
    result.artifacts.emplace_back(name);
  }
  void doc(const std::string& name, const json& d) {
    report_io::write_json(cfg_.out_dir / name, d);
    result.artifacts.emplace_back(name);
  }
  void vectors(const std::string& stem, const ConceptVectorSet& set) {
    report_io::save_vector_set(set, cfg_.out_dir / (stem + ".uemb"), cfg_.out_dir / (stem + ".json"));
    result.artifacts.emplace_back(stem + ".uemb");
    result.artifacts.emplace_back(stem + ".json");
  }
  double threshold(const std::string& name) const {
    auto it = cfg_.thresholds.find(name);
    if (it == cfg_.thresholds.end()) throw Error(Errc::InvalidArgument, "missing threshold " + name);
    return it->second;
  }
  void check(std::string name, double value, std::string bound, bool passed) {
    result.checks.push_back({std::move(name), value, std::move(bound), passed});
  }

  PipelineResult result;

 private:
  const RunConfig& cfg_;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Closeness and cosine share the hierarchy's id order; nodes without a vector get NaN.
Matrix cosines_in_order(const ConceptVectorSet& set, const std::vector<std::string>& ids) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix out = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!set.contains(ids[static_cast<std::size_t>(i)])) continue;
    const Vector& a = set.at(ids[static_cast<std::size_t>(i)]).vector;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!set.contains(ids[static_cast<std::size_t>(j)])) continue;
      out(i, j) = i == j && a.norm() > 0.0 ? 1.0 : cosine(a, set.at(ids[static_cast<std::size_t>(j)]).vector);
    }
  }
  return out;
}

// Short form for human-readable bound strings; artifacts keep full precision.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_manifest(const RunConfig& cfg, PipelineResult& r) {
  json artifacts = json::array();
  for (const auto& rel : r.artifacts) {
    const fs::path p = cfg.out_dir / rel;
    artifacts.push_back({{"path", rel.generic_string()},
                         {"sha256", report_io::sha256_file(p)},
                         {"bytes", fs::file_size(p)}});
  }
  json m = {{"created_utc", utc_now()},
            {"status", r.ok ? "ok" : "failed"},
            {"seed", cfg.seed},
            {"artifacts", artifacts}};
  if (!r.ok) {
    m["failed_stage"] = r.failed_stage;
    m["error"] = r.message;
  }
  report_io::write_json(cfg.out_dir / "manifest.json", m);
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg) {
  Run run(cfg);
  std::string stage = "config";
  try {
    if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0))
      throw Error(Errc::InvalidArgument, "split_fraction must be in (0, 1)");
    if (cfg.out_dir.empty()) throw Error(Errc::InvalidArgument, "out_dir is required");
    fs::create_directories(cfg.out_dir);
    for (const auto& name : default_thresholds()) run.threshold(name.first);
    run.doc("config.json", cfg.to_json());

    stage = "load";
    const UnembeddingMatrix m = load_unembeddings(cfg.matrix_path, cfg.vocab_path);

    stage = "transform";
    const TransformedUnembedding t = causal_transform(m, cfg.transform_mode, cfg.floor_ratio);
    run.doc("transform.json", report_io::transform_sidecar(t));

    stage = "hier";
    ConceptHierarchy h = load_hierarchy(cfg.hierarchy_path, m.rows());
    if (cfg.merge) h = merge_single_children(h);
    h = filter_min_tokens(h, cfg.min_tokens);
    if (h.nodes.empty()) throw Error(Errc::EmptyHierarchy, "no concepts left after filtering");
    h = split_tokens(h, cfg.split_fraction, cfg.seed);
    save_hierarchy(h, cfg.out_dir / "hierarchy.processed.json");
    run.result.artifacts.emplace_back("hierarchy.processed.json");

    stage = "shuffle";
    // Row permutation commutes with centering and whitening, so permuting the
    // transformed rows equals transforming the permuted matrix.
    const RowPermutation perm = shuffle_rows(m, cfg.seed).second;
    TransformedUnembedding ts = t;
    for (std::size_t i = 0; i < perm.perm.size(); ++i)
      ts.g.row(static_cast<Eigen::Index>(i)) = t.g.row(perm.perm[i]);
    run.doc("shuffle.json", {{"seed", perm.seed}, {"rows", perm.perm.size()}});

    stage = "estimate";
    auto estimate = [&](const TransformedUnembedding& src, TokenScope scope) {
      return estimate_all(h, src, {cfg.estimator, scope, cfg.threads});
    };
    const ConceptVectorSet orig_all = estimate(t, TokenScope::all);
    const ConceptVectorSet orig_train = estimate(t, TokenScope::train);
    const ConceptVectorSet shuf_all = estimate(ts, TokenScope::all);
    const ConceptVectorSet shuf_train = estimate(ts, TokenScope::train);
    run.vectors("vectors_orig_all", orig_all);
    run.vectors("vectors_orig_train", orig_train);
    run.vectors("vectors_shuf_all", shuf_all);
    run.vectors("vectors_shuf_train", shuf_train);

    stage = "project";
    const ProjectionReport p_orig = projection_report(orig_train, h, t.g, cfg.random_count, cfg.seed);
    const ProjectionReport p_shuf = projection_report(shuf_train, h, ts.g, cfg.random_count, cfg.seed);
    run.text("projection_orig_train.csv", report_io::projection_csv(p_orig));
    run.text("projection_shuf_train.csv", report_io::projection_csv(p_shuf));
    run.doc("projection_summary.json", {{"orig_train", report_io::projection_summary(p_orig)},
                                        {"shuf_train", report_io::projection_summary(p_shuf)}});
    {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, rnd = 0.0, shuf = 0.0;
      for (const auto& r : p_orig.group(ProjectionGroup::test)) {
        lo = std::min(lo, r.mean);
        hi = std::max(hi, r.mean);
      }
      for (const auto& r : p_orig.group(ProjectionGroup::random)) rnd = std::max(rnd, std::abs(r.mean));
      for (const auto& r : p_shuf.group(ProjectionGroup::test)) shuf = std::max(shuf, std::abs(r.mean));
      const double tmin = run.threshold("projection_test_min"), tmax = run.threshold("projection_test_max");
      const double rmax = run.threshold("projection_random_abs"), smax = run.threshold("shuffled_test_abs");
      run.check("projection test mean (min over concepts)", lo, ">= " + fmt(tmin), lo >= tmin);
      run.check("projection test mean (max over concepts)", hi, "<= " + fmt(tmax), hi <= tmax);
      run.check("projection random |mean| (max over concepts)", rnd, "<= " + fmt(rmax), rnd <= rmax);
      run.check("shuffled projection test |mean| (max over concepts)", shuf, "<= " + fmt(smax), shuf <= smax);
    }

    stage = "heatmap";
    const ClosenessMatrix closeness = graph_closeness(h);
    run.text("closeness.csv", report_io::matrix_csv(closeness.ids, closeness.values));
    run.text("cosine_orig_all.csv", report_io::matrix_csv(closeness.ids, cosines_in_order(orig_all, closeness.ids)));

    stage = "ortho";
    json ortho_doc = json::object();
    std::map<std::string, double> ortho_abs;
    for (auto statement : {OrthoStatement::a, OrthoStatement::d}) {
      for (auto scope : {TokenScope::all, TokenScope::train}) {
        const ConceptVectorSet& orig = scope == TokenScope::all ? orig_all : orig_train;
        const ConceptVectorSet& shuf = scope == TokenScope::all ? shuf_all : shuf_train;
        for (auto control : {OrthoControl::none, OrthoControl::random_parent, OrthoControl::shuffled}) {
          const ConceptVectorSet& set = control == OrthoControl::shuffled ? shuf : orig;
          OrthoReport rep;
          try {
            rep = ortho_stats(set, h, statement, control, cfg.seed);
          } catch (const Error& e) {
            if (e.code() != Errc::NoEligibleTuples) throw;
          }
          const std::string key = "ortho_" + std::string(to_string(statement)) + "_" +
                                  std::string(to_string(scope)) + "_" + std::string(to_string(control));
          run.text(key + ".csv", report_io::ortho_csv(rep));
          ortho_doc[key] = report_io::ortho_summary(rep);
          ortho_abs[key] = rep.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : rep.summary().mean_abs_cosine;
        }
      }
    }
    run.doc("ortho_summary.json", ortho_doc);
    {
      const double a = ortho_abs.at("ortho_a_all_none");
      const double rp = ortho_abs.at("ortho_a_all_random-parent");
      const double sh = ortho_abs.at("ortho_a_train_shuffled");
      const double amax = run.threshold("ortho_abs_max"), rpmin = run.threshold("random_parent_abs_min"),
                   shmin = run.threshold("shuffled_split_abs_min");
      run.check("statement (a) mean |cos|", a, "<= " + fmt(amax), a <= amax);
      run.check("statement (a) random-parent mean |cos|", rp, ">= " + fmt(rpmin), rp >= rpmin);
      run.check("statement (a) shuffled train-split mean |cos|", sh, ">= " + fmt(shmin), sh >= shmin);
    }

    stage = "intervene";
    std::vector<std::pair<std::string, InterventionRow>> rows;
    for (const auto& s : cfg.interventions) {
      for (const auto* id : {&s.w0, &s.w1, &s.z0, &s.z1})
        if (!h.contains(*id)) throw Error(Errc::UnknownId, "intervention id not in hierarchy: " + *id);
      Vector c = contrast_vector(orig_all, s.w0, s.w1);
      if (cfg.unit_norm) {
        if (!(c.norm() > 0.0)) throw Error(Errc::DegenerateDirection, "zero contrast " + s.w0 + "->" + s.w1);
        c /= c.norm();
      }
      const std::string label = s.w0 + "->" + s.w1;
      rows.emplace_back(label, intervention_logit_change(c, h.node(s.w0).token_ids, h.node(s.w1).token_ids, t.g,
                                                         cfg.max_pairs, cfg.seed, PairRole::parent));
      rows.emplace_back(label, intervention_logit_change(c, h.node(s.z0).token_ids, h.node(s.z1).token_ids, t.g,
                                                         cfg.max_pairs, cfg.seed, PairRole::child));
    }
    run.text("intervention.csv", report_io::intervention_csv(rows));

    stage = "summary";
    json checks = json::array();
    for (const auto& c : run.result.checks)
      checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"passed", c.passed}});
    run.doc("summary.json", {{"concepts", h.nodes.size()},
                             {"estimate_errors", orig_all.errors.size()},
                             {"checks", checks},
                             {"all_checks_passed", all_passed(run.result.checks)}});
    run.result.ok = true;
  } catch (const std::exception& e) {
    run.result.ok = false;
    run.result.failed_stage = stage;
    run.result.message = e.what();
  }

  try {
    if (!cfg.out_dir.empty()) {
      fs::create_directories(cfg.out_dir);
      write_manifest(cfg, run.result);
    }
  } catch (const std::exception& e) {
    if (run.result.ok) {
      run.result.ok = false;
      run.result.failed_stage = "manifest";
      run.result.message = e.what();
    }
  }
  return run.result;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
  const json m = report_io::read_json(dir / "manifest.json");
  std::vector<std::string> problems;
  try {
    for (const auto& a : m.at("artifacts")) {
      const fs::path p = dir / a.at("path").get<std::string>();
      if (!fs::exists(p)) {
        problems.push_back("missing: " + p.string());
        continue;
      }
      if (report_io::sha256_file(p) != a.at("sha256").get<std::string>())
        problems.push_back("hash mismatch: " + p.string());
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, "manifest: " + std::string(e.what()));
  }
  return problems;
}

}  // namespace catgeo
