#pragma once

#include "bmfmc/common.hpp"
#include "bmfmc/density.hpp"
#include "bmfmc/dimreduce.hpp"
#include "bmfmc/gp.hpp"
#include "bmfmc/inputs.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace bmfmc {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

/// CSV with a header row; cells are written with "%.17g" so values round-trip.
void write_csv(const std::filesystem::path& path, const Matrix& data,
               const std::vector<std::string>& headers);
Matrix read_csv(const std::filesystem::path& path, std::vector<std::string>* headers = nullptr);

// ---------------------------------------------------------------------------
// JSON conversions

json vec_to_json(const Vector& v);
Vector vec_from_json(const json& j);
json mat_to_json(const Matrix& m);
Matrix mat_from_json(const json& j);

json scalar_dist_to_json(const ScalarDistribution& d);
ScalarDistribution scalar_dist_from_json(const json& j);

json field_spec_to_json(const RandomFieldSpec& s);
RandomFieldSpec field_spec_from_json(const json& j);

json block_to_json(const BlockSpec& b);
BlockSpec block_from_json(const json& j);

json gp_to_json(const GaussianProcessModel& m);
GaussianProcessModel gp_from_json(const json& j);

json density_to_json(const DensityPrediction& d);
DensityPrediction density_from_json(const json& j);

json kle_to_json(const KLEBasis& b);

/// Content hash of a JSON document (canonical dump with sorted keys).
std::string json_hash(const json& j);

/// CSV column headers for a sample matrix: "<kind>:<name>:<index>".
std::vector<std::string> sample_headers(const SampleMatrix& sm);

void write_sample_matrix(const std::filesystem::path& csv_path, const SampleMatrix& sm);

}  // namespace bmfmc
