#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sogym/environment.hpp"
#include "sogym/eval.hpp"
#include "sogym/optimizer.hpp"

namespace sogym {

using nlohmann::json;

/// Flat problem object: b_s, l_s, p_s, b_l, p_l, theta_l, v_star, h, w, seed.
json problem_to_json(const BoundaryProblem& p);
/// Throws std::invalid_argument naming the offending field.
BoundaryProblem problem_from_json(const json& j);

/// Six finite numbers; throws std::invalid_argument otherwise.
NormalizedAction action_from_json(const json& j);
json action_to_json(const NormalizedAction& a);

json record_to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const json& j);

json optrun_to_json(const OptRun& run);
json metrics_to_json(const MetricsReport& m);
json density_to_json(const DensityField& f);

/// Raw 3 x 64 x 64 nested integer array.
json raster_to_json(const Raster& r);
std::string base64_encode(std::string_view bytes);

/// Observation fields keyed like the library struct. Images carry both the
/// raw array and a base64 PNG.
json observation_to_json(const Observation& o);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

/// One JSON value per non-empty line.
std::vector<json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<json>& values);

std::vector<EpisodeRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records);

/// Problems from a .json file (one object or an array) or a .jsonl file.
std::vector<ProblemEntry> read_problems(const std::filesystem::path& path);

}  // namespace sogym
