// catgeo command line: one subcommand per library operation plus `pipeline`
// and `selfcheck`. Exit codes: 0 ok, 1 runtime error, 2 usage error,
// 3 checks failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "catgeo/causal_transform.hpp"
#include "catgeo/error.hpp"
#include "catgeo/estimation.hpp"
#include "catgeo/geometry.hpp"
#include "catgeo/hierarchy.hpp"
#include "catgeo/matrix_io.hpp"
#include "catgeo/pipeline.hpp"
#include "catgeo/report_io.hpp"
#include "catgeo/selfcheck.hpp"
#include "catgeo/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace catgeo;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitChecks = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  unsigned threads = 1;
  std::string out_dir;
};

fs::path sidecar(const fs::path& p) {
  fs::path s = p;
  return s.replace_extension(".json");
}

void require(const CLI::App* sub, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + n);
    if (opt == nullptr || opt->count() == 0)
      throw UsageError(sub->get_name() + ": --" + n + " is required (flag or config key)");
  }
}

// Flat JSON config: keys are long option names. Values fill options that were
// not given on the command line, on the root app and every parsed subcommand.
void apply_config(CLI::App& app, const fs::path& path) {
  const json cfg = report_io::read_json(path);
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  std::vector<CLI::App*> chain{&app};
  for (CLI::App* cur = &app;;) {
    auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
    chain.push_back(cur);
  }
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = nullptr;
    for (auto it = chain.rbegin(); it != chain.rend() && opt == nullptr; ++it)
      opt = (*it)->get_option_no_throw("--" + name);
    if (opt == nullptr) {
      std::cerr << "warning: config key '" << key << "' matches no option of this command\n";
      continue;
    }
    if (opt->count() > 0) continue;
    auto as_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(as_text(v));
    } else {
      opt->add_result(as_text(value));
    }
    opt->run_callback();
  }
}

std::int64_t vocab_size_from(const std::string& vocab, std::int64_t given) {
  if (!vocab.empty()) return static_cast<std::int64_t>(read_vocab(vocab).size());
  if (given > 0) return given;
  throw UsageError("give --vocab or --vocab-size");
}

// A transformed matrix on disk plus the mode recorded in its sidecar, if any.
TransformedUnembedding load_transformed(const fs::path& matrix) {
  TransformedUnembedding t;
  t.g = read_uemb(matrix);
  t.mean = Vector::Zero(t.g.cols());
  const fs::path side = sidecar(matrix);
  if (fs::exists(side)) {
    const json s = report_io::read_json(side);
    t.mode = parse_transform_mode(s.value("mode", "identity"));
    t.shrinkage_intensity = s.value("shrinkage_intensity", 0.0);
    t.floor_ratio = s.value("floor_ratio", kDefaultFloorRatio);
  }
  return t;
}

ConceptVectorSet load_vectors(const fs::path& p) { return report_io::load_vector_set(p, sidecar(p)); }

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_checks(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << std::setprecision(6) << c.value << " ("
              << c.bound << ")\n";
}

TokenGroups groups_for(const ConceptHierarchy& h, const std::vector<std::string>& ids) {
  TokenGroups g;
  for (const auto& id : ids) g.emplace_back(id, h.node(id).token_ids);
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vector geometry of hierarchical concepts in unembedding space"};
  app.require_subcommand(1);
  Globals glob;
  app.add_option("--seed", glob.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--config", glob.config, "Flat JSON file of option values; flags win");
  app.add_option("--threads", glob.threads, "Worker threads for per-concept estimation")->capture_default_str();
  app.add_option("--out-dir", glob.out_dir, "Output directory for commands writing several files");

  // transform
  auto* transform = app.add_subcommand("transform", "Center and whiten an unembedding matrix");
  std::string tr_mode = "causal", tr_in, tr_vocab, tr_out;
  double tr_floor = kDefaultFloorRatio;
  transform->add_option("--mode", tr_mode, "causal | center-only | identity")->capture_default_str();
  transform->add_option("--floor-ratio", tr_floor)->capture_default_str();
  transform->add_option("--in", tr_in, "UEMB matrix");
  transform->add_option("--vocab", tr_vocab, "Vocabulary file");
  transform->add_option("--out", tr_out, "Output UEMB; sidecar JSON is written next to it");

  // hier
  auto* hier = app.add_subcommand("hier", "Hierarchy operations");
  hier->require_subcommand(1);
  std::string h_in, h_out, h_vocab;
  std::int64_t h_vocab_size = 0, h_min_tokens = 50;
  double h_fraction = 0.7;
  hier->add_option("--in", h_in, "Hierarchy JSON");
  hier->add_option("--vocab", h_vocab, "Vocabulary file (sets the token range)");
  hier->add_option("--vocab-size", h_vocab_size, "Token range when no vocabulary is given");
  hier->add_option("--out", h_out, "Output path");
  hier->fallthrough();
  auto* h_validate = hier->add_subcommand("validate", "Parse and report warnings");
  auto* h_merge = hier->add_subcommand("merge", "Merge single-child chains");
  auto* h_filter = hier->add_subcommand("filter", "Drop concepts with too few tokens");
  h_filter->add_option("--min-tokens", h_min_tokens)->capture_default_str();
  auto* h_split = hier->add_subcommand("split", "Seeded train/test split of every token set");
  h_split->add_option("--fraction", h_fraction)->capture_default_str();
  auto* h_close = hier->add_subcommand("closeness", "Graph closeness CSV");
  for (auto* s : {h_validate, h_merge, h_filter, h_split, h_close}) s->fallthrough();

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate one vector per concept");
  std::string e_method = "lda", e_scope = "all", e_hier, e_matrix, e_out;
  estimate->add_option("--method", e_method, "lda | mean")->capture_default_str();
  estimate->add_option("--scope", e_scope, "all | train")->capture_default_str();
  estimate->add_option("--hier", e_hier, "Hierarchy JSON (split required for --scope train)");
  estimate->add_option("--matrix", e_matrix, "Transformed UEMB matrix");
  estimate->add_option("--out", e_out, "Output UEMB of stacked vectors; JSON index next to it");

  // shared analysis inputs
  std::string a_hier, a_vectors, a_matrix, a_out, a_members;
  auto analysis = [&](CLI::App* sub, bool matrix) {
    sub->add_option("--hier", a_hier, "Hierarchy JSON");
    sub->add_option("--vectors", a_vectors, "Vector set UEMB (index JSON next to it)");
    if (matrix) sub->add_option("--matrix", a_matrix, "Transformed UEMB matrix");
    sub->add_option("--out", a_out, "Output CSV; JSON summary next to it");
  };

  auto* project = app.add_subcommand("project", "Normalized projections of train/test/random tokens");
  analysis(project, true);
  std::int64_t p_random = 1000;
  project->add_option("--random-count", p_random)->capture_default_str();

  auto* heatmap = app.add_subcommand("heatmap", "Closeness and cosine matrices with shared ordering");
  std::string hm_close, hm_cos;
  heatmap->add_option("--hier", a_hier);
  heatmap->add_option("--vectors", a_vectors);
  heatmap->add_option("--closeness-out", hm_close);
  heatmap->add_option("--cosine-out", hm_cos);

  auto* ortho = app.add_subcommand("ortho", "Hierarchical orthogonality cosines");
  analysis(ortho, false);
  std::string o_statement = "a", o_control = "none";
  ortho->add_option("--statement", o_statement, "a | b | c | d")->capture_default_str();
  ortho->add_option("--control", o_control, "none | random-parent | shuffled (pass shuffled vectors)")
      ->capture_default_str();

  auto* polytope = app.add_subcommand("polytope", "Project tokens onto the span of sibling differences");
  analysis(polytope, true);
  polytope->add_option("--members", a_members, "Comma-separated concept ids");

  auto* simplex = app.add_subcommand("simplex", "Affine independence of member vectors");
  simplex->add_option("--vectors", a_vectors);
  simplex->add_option("--members", a_members, "Comma-separated concept ids");

  auto* intervene = app.add_subcommand("intervene", "Logit-difference change under a contrast");
  analysis(intervene, true);
  std::string iv_w0, iv_w1, iv_z0, iv_z1;
  bool iv_unit = false;
  std::int64_t iv_max_pairs = kDefaultMaxPairs;
  intervene->add_option("--w0", iv_w0);
  intervene->add_option("--w1", iv_w1);
  intervene->add_option("--z0", iv_z0);
  intervene->add_option("--z1", iv_z1);
  intervene->add_flag("--unit-norm", iv_unit, "Normalize the contrast to unit length");
  intervene->add_option("--max-pairs", iv_max_pairs)->capture_default_str();

  auto* coords = app.add_subcommand("coords", "Token coordinates in a concept subspace");
  analysis(coords, true);
  std::vector<std::string> c_basis;
  coords->add_option("--basis", c_basis, "Concept id or id-id difference, in order");

  // synth
  auto* synth = app.add_subcommand("synth", "Planted-geometry matrix with known truth");
  int s_depth = 3, s_branching = 3;
  double s_alpha = 1.0, s_sigma = 0.01;
  std::int64_t s_tokens = 80, s_random = 500, s_dim = 256;
  synth->add_option("--depth", s_depth)->capture_default_str();
  synth->add_option("--branching", s_branching)->capture_default_str();
  synth->add_option("--alpha", s_alpha)->capture_default_str();
  synth->add_option("--tokens-per-leaf", s_tokens)->capture_default_str();
  synth->add_option("--random-tokens", s_random)->capture_default_str();
  synth->add_option("--dim", s_dim)->capture_default_str();
  synth->add_option("--sigma", s_sigma)->capture_default_str();

  // shuffle
  auto* shuffle = app.add_subcommand("shuffle", "Seeded row permutation of a matrix");
  std::string sh_in, sh_out;
  shuffle->add_option("--in", sh_in);
  shuffle->add_option("--out", sh_out, "Output UEMB; permutation JSON next to it");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Full experiment sequence with a hashed manifest");
  RunConfig rc;
  std::string pl_matrix, pl_vocab, pl_hier, pl_mode = "causal", pl_method = "lda", pl_verify;
  std::vector<std::string> pl_intervene, pl_thresholds;
  bool pl_no_merge = false, pl_strict = false;
  pipeline->add_option("--matrix", pl_matrix, "Raw UEMB matrix");
  pipeline->add_option("--vocab", pl_vocab);
  pipeline->add_option("--hier", pl_hier);
  pipeline->add_option("--mode", pl_mode)->capture_default_str();
  pipeline->add_option("--floor-ratio", rc.floor_ratio)->capture_default_str();
  pipeline->add_option("--method", pl_method)->capture_default_str();
  pipeline->add_option("--split-fraction", rc.split_fraction)->capture_default_str();
  pipeline->add_option("--min-tokens", rc.min_tokens)->capture_default_str();
  pipeline->add_flag("--no-merge", pl_no_merge, "Skip merging single-child chains");
  pipeline->add_option("--random-count", rc.random_count)->capture_default_str();
  pipeline->add_option("--max-pairs", rc.max_pairs)->capture_default_str();
  pipeline->add_option("--intervene", pl_intervene, "w0,w1,z0,z1 (repeatable)");
  pipeline->add_flag("--unit-norm", rc.unit_norm);
  pipeline->add_option("--threshold", pl_thresholds, "name=value (repeatable)");
  pipeline->add_flag("--strict", pl_strict, "Exit 3 when any check fails");
  pipeline->add_option("--verify", pl_verify, "Only re-hash the artifacts of an existing run directory");

  auto* selfcheck = app.add_subcommand("selfcheck", "Noise-free planted invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (!glob.config.empty()) apply_config(app, glob.config);
    const fs::path out_dir = glob.out_dir;

    if (transform->parsed()) {
      require(transform, {"in", "vocab", "out"});
      const UnembeddingMatrix m = load_unembeddings(tr_in, tr_vocab);
      const TransformedUnembedding t = causal_transform(m, parse_transform_mode(tr_mode), tr_floor);
      write_uemb(t.g, tr_out);
      report_io::write_json(sidecar(tr_out), report_io::transform_sidecar(t));
      std::cout << "wrote " << tr_out << " (" << t.rows() << " x " << t.dim() << ", mode " << to_string(t.mode)
                << ")\n";
      return 0;
    }

    if (hier->parsed()) {
      require(hier, {"in"});
      const std::int64_t vs = vocab_size_from(h_vocab, h_vocab_size);
      ConceptHierarchy h = load_hierarchy(h_in, vs);
      for (const auto& [child, parent] : h.inclusion_violations)
        std::cerr << "warning: tokens of " << child << " are not a subset of " << parent << "\n";
      if (h_validate->parsed()) {
        std::cout << h.nodes.size() << " concepts, " << h.roots().size() << " roots, "
                  << h.inclusion_violations.size() << " inclusion warnings\n";
        return 0;
      }
      require(hier, {"out"});
      if (h_close->parsed()) {
        const ClosenessMatrix c = graph_closeness(h);
        report_io::write_text(h_out, report_io::matrix_csv(c.ids, c.values));
        return 0;
      }
      if (h_merge->parsed()) h = merge_single_children(h);
      if (h_filter->parsed()) h = filter_min_tokens(h, h_min_tokens);
      if (h_split->parsed()) h = split_tokens(h, h_fraction, glob.seed);
      save_hierarchy(h, h_out);
      std::cout << "wrote " << h_out << " (" << h.nodes.size() << " concepts)\n";
      return 0;
    }

    if (estimate->parsed()) {
      require(estimate, {"hier", "matrix", "out"});
      const TransformedUnembedding t = load_transformed(e_matrix);
      const ConceptHierarchy h = load_hierarchy(e_hier, t.rows());
      const ConceptVectorSet set =
          estimate_all(h, t, {parse_estimator(e_method), parse_scope(e_scope), glob.threads});
      for (const auto& [id, msg] : set.errors) std::cerr << "warning: " << id << ": " << msg << "\n";
      report_io::save_vector_set(set, e_out, sidecar(e_out));
      std::cout << "wrote " << set.vectors.size() << " vectors to " << e_out << "\n";
      return 0;
    }

    if (project->parsed()) {
      require(project, {"hier", "vectors", "matrix", "out"});
      const Matrix g = read_uemb(a_matrix);
      const ConceptHierarchy h = load_hierarchy(a_hier, g.rows());
      const ProjectionReport rep = projection_report(load_vectors(a_vectors), h, g, p_random, glob.seed);
      report_io::write_text(a_out, report_io::projection_csv(rep));
      report_io::write_json(sidecar(a_out), report_io::projection_summary(rep));
      return 0;
    }

    if (heatmap->parsed()) {
      require(heatmap, {"hier", "vectors", "closeness-out", "cosine-out"});
      const ConceptVectorSet set = load_vectors(a_vectors);
      // Token ranges are not needed here; accept any index.
      const ConceptHierarchy h = load_hierarchy(a_hier, std::numeric_limits<std::int64_t>::max());
      const ClosenessMatrix c = graph_closeness(h);
      const CosineMatrix cos = cosine_matrix(set);
      Matrix ordered = Matrix::Constant(static_cast<Eigen::Index>(c.ids.size()),
                                        static_cast<Eigen::Index>(c.ids.size()),
                                        std::numeric_limits<double>::quiet_NaN());
      std::map<std::string, Eigen::Index> pos;
      for (std::size_t i = 0; i < cos.ids.size(); ++i) pos[cos.ids[i]] = static_cast<Eigen::Index>(i);
      for (std::size_t i = 0; i < c.ids.size(); ++i)
        for (std::size_t j = 0; j < c.ids.size(); ++j) {
          auto a = pos.find(c.ids[i]), b = pos.find(c.ids[j]);
          if (a != pos.end() && b != pos.end())
            ordered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cos.values(a->second, b->second);
        }
      report_io::write_text(hm_close, report_io::matrix_csv(c.ids, c.values));
      report_io::write_text(hm_cos, report_io::matrix_csv(c.ids, ordered));
      return 0;
    }

    if (ortho->parsed()) {
      require(ortho, {"hier", "vectors", "out"});
      const ConceptHierarchy h = load_hierarchy(a_hier, std::numeric_limits<std::int64_t>::max());
      const OrthoReport rep = ortho_stats(load_vectors(a_vectors), h, parse_statement(o_statement),
                                          parse_control(o_control), glob.seed);
      report_io::write_text(a_out, report_io::ortho_csv(rep));
      report_io::write_json(sidecar(a_out), report_io::ortho_summary(rep));
      const auto s = rep.summary();
      std::cout << "mean |cos| " << report_io::format_number(s.mean_abs_cosine) << " over " << s.count
                << " tuples\n";
      return 0;
    }

    if (polytope->parsed()) {
      require(polytope, {"hier", "vectors", "matrix", "members", "out"});
      const Matrix g = read_uemb(a_matrix);
      const ConceptHierarchy h = load_hierarchy(a_hier, g.rows());
      const auto members = split_list(a_members, ',');
      const PolytopeReport rep =
          polytope_projection(load_vectors(a_vectors), members, g, polytope_groups(h, members));
      report_io::write_text(a_out, report_io::polytope_csv(rep));
      report_io::write_json(sidecar(a_out), {{"rank", rep.rank},
                                             {"rank_deficient", rep.rank_deficient},
                                             {"min_centroid_distance", rep.min_centroid_distance()}});
      return 0;
    }

    if (simplex->parsed()) {
      require(simplex, {"vectors", "members"});
      const auto members = split_list(a_members, ',');
      const SimplexResult r = simplex_check(load_vectors(a_vectors), members);
      std::cout << "simplex " << (r.is_simplex ? "yes" : "no") << ", rank " << r.achieved_rank << " of "
                << members.size() - 1 << "\n";
      return 0;
    }

    if (intervene->parsed()) {
      require(intervene, {"hier", "vectors", "matrix", "out", "w0", "w1", "z0", "z1"});
      const Matrix g = read_uemb(a_matrix);
      const ConceptHierarchy h = load_hierarchy(a_hier, g.rows());
      Vector c = contrast_vector(load_vectors(a_vectors), iv_w0, iv_w1);
      if (iv_unit) {
        if (!(c.norm() > 0.0)) throw Error(Errc::DegenerateDirection, "zero contrast");
        c /= c.norm();
      }
      const std::string label = iv_w0 + "->" + iv_w1;
      std::vector<std::pair<std::string, InterventionRow>> rows;
      rows.emplace_back(label, intervention_logit_change(c, h.node(iv_w0).token_ids, h.node(iv_w1).token_ids, g,
                                                         iv_max_pairs, glob.seed, PairRole::parent));
      rows.emplace_back(label, intervention_logit_change(c, h.node(iv_z0).token_ids, h.node(iv_z1).token_ids, g,
                                                         iv_max_pairs, glob.seed, PairRole::child));
      report_io::write_text(a_out, report_io::intervention_csv(rows));
      json summary = json::array();
      for (const auto& [l, r] : rows)
        summary.push_back({{"contrast", l},
                           {"pair_role", std::string(to_string(r.pair_role))},
                           {"mean_change", r.mean_change},
                           {"std_change", r.std_change},
                           {"n_pairs", r.n_pairs}});
      report_io::write_json(sidecar(a_out), summary);
      for (const auto& [l, r] : rows)
        std::cout << l << " " << to_string(r.pair_role) << ": " << r.mean_change << " +- " << r.std_change << "\n";
      return 0;
    }

    if (coords->parsed()) {
      require(coords, {"hier", "vectors", "matrix", "out", "basis"});
      const Matrix g = read_uemb(a_matrix);
      const ConceptHierarchy h = load_hierarchy(a_hier, g.rows());
      const ConceptVectorSet set = load_vectors(a_vectors);
      std::vector<Vector> basis;
      std::vector<std::string> mentioned;
      for (const auto& spec : c_basis) {
        if (set.contains(spec)) {
          basis.push_back(set.at(spec).vector);
          mentioned.push_back(spec);
          continue;
        }
        const auto parts = split_list(spec, '-');
        if (parts.size() != 2 || !set.contains(parts[0]) || !set.contains(parts[1]))
          throw UsageError("basis entry must be an id or id-id: " + spec);
        basis.push_back(set.at(parts[0]).vector - set.at(parts[1]).vector);
        mentioned.push_back(parts[0]);
        mentioned.push_back(parts[1]);
      }
      std::sort(mentioned.begin(), mentioned.end());
      mentioned.erase(std::unique(mentioned.begin(), mentioned.end()), mentioned.end());
      const CoordTable table = subspace_coords(basis, g, groups_for(h, mentioned));
      report_io::write_text(a_out, report_io::coords_csv(table));
      report_io::write_json(sidecar(a_out), {{"basis", c_basis}, {"tokens", table.token_ids.size()}});
      return 0;
    }

    if (synth->parsed()) {
      if (out_dir.empty()) throw UsageError("synth: --out-dir is required");
      PlantedSpec spec;
      spec.tree = balanced_tree(s_depth, s_branching);
      for (const auto& id : spec.tree.ids()) spec.alphas[id] = s_alpha;
      spec.tokens_per_leaf = s_tokens;
      spec.random_tokens = s_random;
      spec.ambient_dim = s_dim;
      spec.noise_sigma = s_sigma;
      spec.seed = glob.seed;
      const PlantedData data = generate_planted(spec);
      fs::create_directories(out_dir);
      save_unembeddings(data.matrix, out_dir / "matrix.uemb", out_dir / "vocab.txt");
      save_hierarchy(data.hierarchy, out_dir / "hierarchy.json");
      json truth = json::object();
      for (const auto& [id, v] : data.truth.vectors)
        truth[id] = {{"vector", std::vector<double>(v.data(), v.data() + v.size())},
                     {"magnitude", data.truth.magnitudes.at(id)}};
      report_io::write_json(out_dir / "truth.json", truth);
      std::cout << "wrote planted data (" << data.matrix.rows() << " x " << data.matrix.cols() << ", "
                << data.hierarchy.nodes.size() << " concepts) to " << out_dir << "\n";
      return 0;
    }

    if (shuffle->parsed()) {
      require(shuffle, {"in", "out"});
      UnembeddingMatrix m;
      m.data = read_uemb(sh_in);
      m.vocab.resize(static_cast<std::size_t>(m.rows()));
      auto [shuffled, perm] = shuffle_rows(m, glob.seed);
      write_uemb(shuffled.data, sh_out);
      report_io::write_json(sidecar(sh_out), {{"seed", perm.seed}, {"perm", perm.perm}});
      return 0;
    }

    if (pipeline->parsed()) {
      if (!pl_verify.empty()) {
        const auto problems = verify_manifest(pl_verify);
        for (const auto& p : problems) std::cout << p << "\n";
        std::cout << (problems.empty() ? "manifest verified\n" : "manifest mismatch\n");
        return problems.empty() ? 0 : kExitChecks;
      }
      require(pipeline, {"matrix", "vocab", "hier"});
      if (out_dir.empty()) throw UsageError("pipeline: --out-dir is required");
      rc.seed = glob.seed;
      rc.threads = glob.threads;
      rc.matrix_path = pl_matrix;
      rc.vocab_path = pl_vocab;
      rc.hierarchy_path = pl_hier;
      rc.out_dir = out_dir;
      rc.transform_mode = parse_transform_mode(pl_mode);
      rc.estimator = parse_estimator(pl_method);
      rc.merge = !pl_no_merge;
      for (const auto& spec : pl_intervene) {
        const auto parts = split_list(spec, ',');
        if (parts.size() != 4) throw UsageError("--intervene expects w0,w1,z0,z1: " + spec);
        rc.interventions.push_back({parts[0], parts[1], parts[2], parts[3]});
      }
      for (const auto& kv : pl_thresholds) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--threshold expects name=value: " + kv);
        const std::string name = kv.substr(0, eq);
        if (!rc.thresholds.count(name)) throw UsageError("unknown threshold " + name);
        rc.thresholds[name] = std::stod(kv.substr(eq + 1));
      }
      const PipelineResult r = run_pipeline(rc);
      print_checks(r.checks);
      if (!r.ok) {
        std::cerr << "pipeline failed at stage '" << r.failed_stage << "': " << r.message << "\n";
        return kExitError;
      }
      std::cout << "pipeline ok: " << r.artifacts.size() << " artifacts in " << out_dir << "\n";
      return pl_strict && !all_passed(r.checks) ? kExitChecks : 0;
    }

    if (selfcheck->parsed()) {
      const auto checks = run_planted_selfcheck(glob.seed);
      print_checks(checks);
      return all_passed(checks) ? 0 : kExitChecks;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
