#include "catgeo/report_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "catgeo/error.hpp"
#include "catgeo/matrix_io.hpp"

namespace catgeo::report_io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, path.string() + ": " + e.what());
  }
}

namespace {

// NaN is not representable in JSON; emit null instead.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string projection_csv(const ProjectionReport& report) {
  std::ostringstream os;
  os << "concept_id,group,mean,std,count\n";
  for (const auto& r : report.rows)
    os << r.concept_id << ',' << to_string(r.group) << ',' << format_number(r.mean) << ','
       << format_number(r.std) << ',' << r.count << '\n';
  return os.str();
}

json projection_summary(const ProjectionReport& report) {
  json out;
  for (auto group : {ProjectionGroup::train, ProjectionGroup::test, ProjectionGroup::random}) {
    const auto rows = report.group(group);
    if (rows.empty()) continue;
    double lo = rows.front().mean, hi = rows.front().mean, sum = 0.0;
    for (const auto& r : rows) {
      lo = std::min(lo, r.mean);
      hi = std::max(hi, r.mean);
      sum += r.mean;
    }
    out[std::string(to_string(group))] = {{"concepts", rows.size()},
                                          {"min_mean", lo},
                                          {"max_mean", hi},
                                          {"avg_mean", sum / static_cast<double>(rows.size())}};
  }
  out["skipped"] = report.skipped;
  return out;
}

std::string matrix_csv(const std::vector<std::string>& ids, const Matrix& values) {
  std::ostringstream os;
  os << "id";
  for (const auto& id : ids) os << ',' << id;
  os << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    os << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) os << ',' << format_number(values(i, j));
    os << '\n';
  }
  return os.str();
}

std::string ortho_csv(const OrthoReport& report) {
  std::ostringstream os;
  os << "concept_id,tuple,statement,cosine,control\n";
  for (const auto& r : report.rows)
    os << r.concept_id << ',' << r.tuple << ',' << to_string(r.statement) << ',' << format_number(r.cosine)
       << ',' << to_string(r.control) << '\n';
  return os.str();
}

json ortho_summary(const OrthoReport& report) {
  const auto s = report.summary();
  return {{"mean_cosine", number_or_null(s.mean_cosine)},
          {"mean_abs_cosine", number_or_null(s.mean_abs_cosine)},
          {"count", s.count},
          {"nan_count", s.nan_count}};
}

std::string polytope_csv(const PolytopeReport& report) {
  std::ostringstream os;
  os << "label,count,centroid_norm,dispersion";
  for (std::int64_t k = 0; k < report.rank; ++k) os << ",tau" << k;
  os << '\n';
  for (const auto& g : report.groups) {
    os << g.label << ',' << g.count << ',' << format_number(g.centroid_norm) << ',' << format_number(g.dispersion);
    for (Eigen::Index k = 0; k < g.centroid.size(); ++k) os << ',' << format_number(g.centroid(k));
    os << '\n';
  }
  return os.str();
}

std::string intervention_csv(const std::vector<std::pair<std::string, InterventionRow>>& rows) {
  std::ostringstream os;
  os << "contrast,pair_role,mean_change,std_change,n_pairs\n";
  for (const auto& [label, r] : rows)
    os << label << ',' << to_string(r.pair_role) << ',' << format_number(r.mean_change) << ','
       << format_number(r.std_change) << ',' << r.n_pairs << '\n';
  return os.str();
}

std::string coords_csv(const CoordTable& table) {
  std::ostringstream os;
  os << "label,token_id";
  for (Eigen::Index k = 0; k < table.coords.cols(); ++k) os << ",c" << k;
  os << '\n';
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    os << table.labels[i] << ',' << table.token_ids[i];
    for (Eigen::Index k = 0; k < table.coords.cols(); ++k)
      os << ',' << format_number(table.coords(static_cast<Eigen::Index>(i), k));
    os << '\n';
  }
  return os.str();
}

json transform_sidecar(const TransformedUnembedding& t) {
  return {{"mode", std::string(to_string(t.mode))},
          {"shrinkage_intensity", t.shrinkage_intensity},
          {"floor_ratio", t.floor_ratio},
          {"mean_norm", t.mean.norm()}};
}

void save_vector_set(const ConceptVectorSet& set, const std::filesystem::path& matrix_path,
                     const std::filesystem::path& index_path) {
  if (set.vectors.empty()) throw Error(Errc::EmptySet, "no vectors to save");
  Matrix stacked(static_cast<Eigen::Index>(set.vectors.size()), set.dim);
  json concepts = json::object();
  Eigen::Index row = 0;
  for (const auto& [id, cv] : set.vectors) {
    stacked.row(row) = cv.vector.transpose();
    concepts[id] = {{"row", row},
                    {"magnitude", cv.magnitude},
                    {"estimator", std::string(to_string(cv.estimator))},
                    {"scope", std::string(to_string(cv.token_scope))},
                    {"negative_magnitude", cv.negative_magnitude},
                    {"zero_vector", cv.zero_vector}};
    ++row;
  }
  write_uemb(stacked, matrix_path);
  json doc = {{"transform_mode", std::string(to_string(set.transform_mode))},
              {"dim", set.dim},
              {"concepts", std::move(concepts)},
              {"errors", set.errors}};
  write_json(index_path, doc);
}

ConceptVectorSet load_vector_set(const std::filesystem::path& matrix_path,
                                 const std::filesystem::path& index_path) {
  const Matrix stacked = read_uemb(matrix_path);
  const json doc = read_json(index_path);
  ConceptVectorSet set;
  try {
    set.transform_mode = parse_transform_mode(doc.at("transform_mode").get<std::string>());
    set.dim = doc.at("dim").get<std::int64_t>();
    if (set.dim != stacked.cols()) throw Error(Errc::DimensionMismatch, "index dim != matrix columns");
    for (const auto& [id, entry] : doc.at("concepts").items()) {
      const auto row = entry.at("row").get<Eigen::Index>();
      if (row < 0 || row >= stacked.rows()) throw Error(Errc::SchemaError, id + ": row out of range");
      ConceptVector cv;
      cv.concept_id = id;
      cv.vector = stacked.row(row).transpose();
      cv.magnitude = entry.at("magnitude").get<double>();
      cv.estimator = parse_estimator(entry.at("estimator").get<std::string>());
      cv.token_scope = parse_scope(entry.at("scope").get<std::string>());
      cv.negative_magnitude = entry.value("negative_magnitude", false);
      cv.zero_vector = entry.value("zero_vector", false);
      set.vectors.emplace(id, std::move(cv));
    }
    if (doc.contains("errors")) set.errors = doc.at("errors").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, index_path.string() + ": " + e.what());
  }
  return set;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

}  // namespace catgeo::report_io
