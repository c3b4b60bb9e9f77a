#include "catgeo/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "catgeo/error.hpp"
#include "catgeo/random.hpp"

namespace catgeo {

using nlohmann::json;

const ConceptNode& ConceptHierarchy::node(std::string_view id) const {
  auto it = nodes.find(std::string(id));
  if (it == nodes.end()) throw Error(Errc::UnknownId, "no concept '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> ConceptHierarchy::ids() const {
  std::vector<std::string> out;
  out.reserve(nodes.size());
  for (const auto& [id, _] : nodes) out.push_back(id);
  return out;
}

std::vector<std::string> ConceptHierarchy::roots() const {
  std::vector<std::string> out;
  for (const auto& [id, n] : nodes)
    if (n.parent_ids.empty()) out.push_back(id);
  return out;
}

std::map<std::string, std::vector<std::string>> ConceptHierarchy::children() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [id, _] : nodes) out[id];
  for (const auto& [id, n] : nodes)
    for (const auto& p : n.parent_ids) out[p].push_back(id);
  return out;
}

std::optional<std::string> ConceptHierarchy::primary_parent(std::string_view id) const {
  const auto& n = node(id);
  if (n.parent_ids.empty()) return std::nullopt;
  return *n.parent_ids.begin();
}

bool ConceptHierarchy::has_split() const {
  if (nodes.empty()) return false;
  return std::all_of(nodes.begin(), nodes.end(),
                     [](const auto& kv) { return kv.second.train_ids && kv.second.test_ids; });
}

namespace {

IndexSet sorted_unique(IndexSet v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

IndexSet read_ids(const json& arr, const std::string& where, std::int64_t vocab_size) {
  if (!arr.is_array()) throw Error(Errc::SchemaError, where + " must be an array");
  IndexSet out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw Error(Errc::SchemaError, where + " must contain integers");
    const auto t = v.get<std::int64_t>();
    if (t < 0 || t >= vocab_size)
      throw Error(Errc::TokenOutOfRange, where + ": token " + std::to_string(t) +
                                             " outside [0, " + std::to_string(vocab_size) + ")");
    out.push_back(t);
  }
  return sorted_unique(std::move(out));
}

void check_acyclic(const ConceptHierarchy& h) {
  // Kahn's algorithm over parent -> child edges.
  std::map<std::string, std::size_t> indegree;
  for (const auto& [id, n] : h.nodes) indegree[id] = n.parent_ids.size();
  const auto kids = h.children();
  std::deque<std::string> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.push_back(id);
  std::size_t seen = 0;
  while (!ready.empty()) {
    const std::string id = ready.front();
    ready.pop_front();
    ++seen;
    for (const auto& c : kids.at(id))
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (seen != h.nodes.size()) {
    std::string members;
    for (const auto& [id, deg] : indegree)
      if (deg > 0) members += (members.empty() ? "" : ", ") + id;
    throw Error(Errc::CycleDetected, "cycle through: " + members);
  }
}

void check_split(const ConceptNode& n) {
  if (n.train_ids.has_value() != n.test_ids.has_value())
    throw Error(Errc::SchemaError, n.id + ": train_ids and test_ids must appear together");
  if (!n.train_ids) return;
  IndexSet both;
  std::set_union(n.train_ids->begin(), n.train_ids->end(), n.test_ids->begin(), n.test_ids->end(),
                 std::back_inserter(both));
  IndexSet overlap;
  std::set_intersection(n.train_ids->begin(), n.train_ids->end(), n.test_ids->begin(),
                        n.test_ids->end(), std::back_inserter(overlap));
  if (both != n.token_ids || !overlap.empty())
    throw Error(Errc::SchemaError, n.id + ": train/test must partition token_ids");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> find_inclusion_violations(const ConceptHierarchy& h) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [id, n] : h.nodes)
    for (const auto& p : n.parent_ids) {
      const auto& parent = h.node(p);
      if (!std::includes(parent.token_ids.begin(), parent.token_ids.end(), n.token_ids.begin(),
                         n.token_ids.end()))
        out.emplace_back(id, p);
    }
  return out;
}

ConceptHierarchy parse_hierarchy(std::string_view json_text, std::int64_t vocab_size) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::SchemaError, "top level must be an object");
  if (!doc.contains("concepts") || !doc["concepts"].is_array())
    throw Error(Errc::SchemaError, "missing 'concepts' array");

  ConceptHierarchy h;
  h.vocab_size = vocab_size;
  if (doc.contains("pos")) {
    if (!doc["pos"].is_string()) throw Error(Errc::SchemaError, "'pos' must be a string");
    h.pos_tag = doc["pos"].get<std::string>();
  }

  for (const auto& c : doc["concepts"]) {
    if (!c.is_object() || !c.contains("id") || !c["id"].is_string())
      throw Error(Errc::SchemaError, "every concept needs a string 'id'");
    ConceptNode n;
    n.id = c["id"].get<std::string>();
    if (c.contains("parents")) {
      if (!c["parents"].is_array()) throw Error(Errc::SchemaError, n.id + ": 'parents' must be an array");
      for (const auto& p : c["parents"]) {
        if (!p.is_string()) throw Error(Errc::SchemaError, n.id + ": parent ids must be strings");
        n.parent_ids.insert(p.get<std::string>());
      }
    }
    if (!c.contains("token_ids")) throw Error(Errc::SchemaError, n.id + ": missing 'token_ids'");
    n.token_ids = read_ids(c["token_ids"], n.id + ".token_ids", vocab_size);
    if (c.contains("train_ids")) n.train_ids = read_ids(c["train_ids"], n.id + ".train_ids", vocab_size);
    if (c.contains("test_ids")) n.test_ids = read_ids(c["test_ids"], n.id + ".test_ids", vocab_size);
    if (c.contains("merged")) n.merged_ids = c["merged"].get<std::vector<std::string>>();
    if (c.contains("reparented")) n.reparented = c["reparented"].get<bool>();
    check_split(n);
    if (!h.nodes.emplace(n.id, n).second) throw Error(Errc::SchemaError, "duplicate id '" + n.id + "'");
  }

  for (const auto& [id, n] : h.nodes) {
    if (n.parent_ids.count(id)) throw Error(Errc::CycleDetected, id + " is its own parent");
    for (const auto& p : n.parent_ids)
      if (!h.contains(p)) throw Error(Errc::SchemaError, id + ": unknown parent '" + p + "'");
  }
  check_acyclic(h);
  h.inclusion_violations = find_inclusion_violations(h);
  return h;
}

ConceptHierarchy load_hierarchy(const std::filesystem::path& path, std::int64_t vocab_size) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open hierarchy " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_hierarchy(buf.str(), vocab_size);
}

std::string hierarchy_to_json(const ConceptHierarchy& h) {
  json doc;
  doc["pos"] = h.pos_tag;
  json concepts = json::array();
  for (const auto& [id, n] : h.nodes) {
    json c;
    c["id"] = id;
    c["parents"] = std::vector<std::string>(n.parent_ids.begin(), n.parent_ids.end());
    c["token_ids"] = n.token_ids;
    if (n.train_ids) c["train_ids"] = *n.train_ids;
    if (n.test_ids) c["test_ids"] = *n.test_ids;
    if (!n.merged_ids.empty()) c["merged"] = n.merged_ids;
    if (n.reparented) c["reparented"] = true;
    concepts.push_back(std::move(c));
  }
  doc["concepts"] = std::move(concepts);
  return doc.dump(1);
}

void save_hierarchy(const ConceptHierarchy& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << hierarchy_to_json(h) << '\n';
}

ConceptHierarchy merge_single_children(const ConceptHierarchy& h) {
  ConceptHierarchy out = h;
  bool merged_any = false;
  for (;;) {
    const auto kids = out.children();
    auto it = std::find_if(kids.begin(), kids.end(), [](const auto& kv) { return kv.second.size() == 1; });
    if (it == kids.end()) break;

    const std::string parent_id = it->first;
    const std::string child_id = it->second.front();
    ConceptNode child = out.nodes.at(child_id);
    ConceptNode& parent = out.nodes.at(parent_id);

    IndexSet tokens;
    std::set_union(parent.token_ids.begin(), parent.token_ids.end(), child.token_ids.begin(),
                   child.token_ids.end(), std::back_inserter(tokens));
    parent.token_ids = std::move(tokens);
    parent.merged_ids.push_back(child_id);
    parent.merged_ids.insert(parent.merged_ids.end(), child.merged_ids.begin(), child.merged_ids.end());
    // Other parents of the absorbed child now point at the merged node.
    for (const auto& q : child.parent_ids)
      if (q != parent_id) parent.parent_ids.insert(q);

    for (auto& [id, n] : out.nodes) {
      if (n.parent_ids.erase(child_id) > 0 && id != parent_id) n.parent_ids.insert(parent_id);
    }
    out.nodes.erase(child_id);
    merged_any = true;
  }
  if (merged_any)
    for (auto& [_, n] : out.nodes) {
      n.train_ids.reset();
      n.test_ids.reset();
    }
  out.inclusion_violations = find_inclusion_violations(out);
  return out;
}

ConceptHierarchy filter_min_tokens(const ConceptHierarchy& h, std::int64_t k) {
  if (k < 1) throw Error(Errc::InvalidArgument, "min token count must be >= 1");
  auto survives = [&](const std::string& id) {
    return static_cast<std::int64_t>(h.node(id).token_ids.size()) >= k;
  };

  std::map<std::string, std::set<std::string>> memo;
  std::function<const std::set<std::string>&(const std::string&)> nearest =
      [&](const std::string& id) -> const std::set<std::string>& {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    std::set<std::string> found;
    if (survives(id)) {
      found.insert(id);
    } else {
      for (const auto& p : h.node(id).parent_ids) {
        const auto& up = nearest(p);
        found.insert(up.begin(), up.end());
      }
    }
    return memo.emplace(id, std::move(found)).first->second;
  };

  ConceptHierarchy out;
  out.pos_tag = h.pos_tag;
  out.vocab_size = h.vocab_size;
  for (const auto& [id, n] : h.nodes) {
    if (!survives(id)) continue;
    ConceptNode copy = n;
    copy.parent_ids.clear();
    for (const auto& p : n.parent_ids) {
      const auto& up = nearest(p);
      copy.parent_ids.insert(up.begin(), up.end());
    }
    if (copy.parent_ids != n.parent_ids) copy.reparented = true;
    out.nodes.emplace(id, std::move(copy));
  }
  if (out.nodes.empty())
    throw Error(Errc::EmptyHierarchy, "no concept has at least " + std::to_string(k) + " tokens");
  out.inclusion_violations = find_inclusion_violations(out);
  return out;
}

std::int64_t train_count(std::int64_t n, double fraction) {
  const double raw = fraction * static_cast<double>(n);
  auto count = static_cast<std::int64_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::int64_t>(count, 0, n);
}

ConceptHierarchy split_tokens(const ConceptHierarchy& h, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(Errc::InvalidArgument, "train fraction must lie in (0, 1)");
  ConceptHierarchy out = h;
  for (auto& [id, n] : out.nodes) {
    IndexSet shuffled = n.token_ids;
    SplitMix64 rng(fnv1a64(id) ^ seed);
    fisher_yates(std::span(shuffled), rng);
    const auto n_train = train_count(static_cast<std::int64_t>(shuffled.size()), train_fraction);
    IndexSet train(shuffled.begin(), shuffled.begin() + n_train);
    IndexSet test(shuffled.begin() + n_train, shuffled.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    n.train_ids = std::move(train);
    n.test_ids = std::move(test);
  }
  return out;
}

ClosenessMatrix graph_closeness(const ConceptHierarchy& h) {
  ClosenessMatrix out;
  out.ids = h.ids();
  const auto n = static_cast<Eigen::Index>(out.ids.size());
  std::map<std::string, Eigen::Index> index;
  for (Eigen::Index i = 0; i < n; ++i) index[out.ids[static_cast<std::size_t>(i)]] = i;

  std::vector<std::vector<Eigen::Index>> adj(static_cast<std::size_t>(n));
  for (const auto& [id, node] : h.nodes)
    for (const auto& p : node.parent_ids) {
      adj[static_cast<std::size_t>(index[id])].push_back(index[p]);
      adj[static_cast<std::size_t>(index[p])].push_back(index[id]);
    }

  out.values = Matrix::Zero(n, n);
  std::vector<std::int64_t> dist(static_cast<std::size_t>(n));
  for (Eigen::Index s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<Eigen::Index> queue{s};
    dist[static_cast<std::size_t>(s)] = 0;
    while (!queue.empty()) {
      const Eigen::Index u = queue.front();
      queue.pop_front();
      for (Eigen::Index v : adj[static_cast<std::size_t>(u)])
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
    }
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto d = dist[static_cast<std::size_t>(t)];
      out.values(s, t) = d < 0 ? 0.0 : 1.0 / (1.0 + static_cast<double>(d));
    }
  }
  return out;
}

bool is_subordinate(const ConceptHierarchy& h, std::string_view z_id, std::string_view w_id) {
  const auto& z = h.node(z_id);
  const auto& w = h.node(w_id);
  return std::includes(w.token_ids.begin(), w.token_ids.end(), z.token_ids.begin(), z.token_ids.end());
}

}  // namespace catgeo
