#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "catgeo/causal_transform.hpp"
#include "catgeo/estimation.hpp"
#include "catgeo/geometry.hpp"
#include "catgeo/hierarchy.hpp"

// CSV and JSON emission for reports, plus the on-disk form of vector sets.
// Numbers are printed with %.17g so identical runs give identical bytes.
namespace catgeo::report_io {

using nlohmann::json;

std::string format_number(double v);

void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

std::string projection_csv(const ProjectionReport& report);
json projection_summary(const ProjectionReport& report);

std::string matrix_csv(const std::vector<std::string>& ids, const Matrix& values);
std::string ortho_csv(const OrthoReport& report);
json ortho_summary(const OrthoReport& report);
std::string polytope_csv(const PolytopeReport& report);
std::string intervention_csv(const std::vector<std::pair<std::string, InterventionRow>>& rows);
std::string coords_csv(const CoordTable& table);

json transform_sidecar(const TransformedUnembedding& t);

/// Stacked vectors as UEMB rows (sorted id order) plus a JSON index
/// {id -> row, magnitude, estimator}. Requires dim >= 2.
void save_vector_set(const ConceptVectorSet& set, const std::filesystem::path& matrix_path,
                     const std::filesystem::path& index_path);
ConceptVectorSet load_vector_set(const std::filesystem::path& matrix_path,
                                 const std::filesystem::path& index_path);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace catgeo::report_io
