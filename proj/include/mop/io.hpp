#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "mop/ccv_mc.hpp"
#include "mop/design.hpp"
#include "mop/scheduler.hpp"

namespace mop::io {

using json = nlohmann::json;

// {"kind": "fixed|multiplexed|idealised", "alphas": [...]}
json to_json(const Design& d);
Design design_from_json(const json& j);

// {estimate, sigma, n_total, n_feasible, volume, seed}
json to_json(const CcvEstimate& e);
CcvEstimate estimate_from_json(const json& j);

// Undefined metrics are written as null.
json to_json(const RelativeMetrics& m);
RelativeMetrics metrics_from_json(const json& j);

json to_json(const CapacitySearchResult& r);

// Stable two-space indented text with a trailing newline.
std::string dump(const json& j);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string tool_version();

struct RunManifest {
  std::string command;
  json parameters = json::object();
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> input_digests;   // path, sha256
  std::vector<std::pair<std::string, std::string>> output_digests;  // path, sha256
  double wall_clock_seconds = 0.0;
};

json to_json(const RunManifest& m);

}  // namespace mop::io
