#include "mop/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "mop/errors.hpp"

#ifndef MOP_VERSION
#define MOP_VERSION "0.0.0"
#endif

namespace mop::io {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing JSON field '") + key + "'");
  return j.at(key);
}

}  // namespace

json to_json(const Design& d) {
  json j;
  j["kind"] = to_string(d.kind());
  j["alphas"] = std::vector<double>(d.alphas().begin(), d.alphas().end());
  return j;
}

Design design_from_json(const json& j) {
  const auto kind = design_kind_from_string(field(j, "kind").get<std::string>());
  if (kind == DesignKind::idealised) return Design::idealised();
  auto alphas = field(j, "alphas").get<std::vector<double>>();
  return kind == DesignKind::fixed ? Design::fixed(std::move(alphas)) : Design::multiplexed(std::move(alphas));
}

json to_json(const CcvEstimate& e) {
  return {{"estimate", e.estimate}, {"sigma", e.sigma},   {"n_total", e.n_total},
          {"n_feasible", e.n_feasible}, {"volume", e.sample_volume}, {"seed", e.seed}};
}

CcvEstimate estimate_from_json(const json& j) {
  CcvEstimate e;
  e.estimate = field(j, "estimate").get<double>();
  e.sigma = field(j, "sigma").get<double>();
  e.n_total = field(j, "n_total").get<std::int64_t>();
  e.n_feasible = field(j, "n_feasible").get<std::int64_t>();
  e.sample_volume = field(j, "volume").get<double>();
  e.seed = field(j, "seed").get<std::uint64_t>();
  return e;
}

json to_json(const RelativeMetrics& m) {
  json j;
  j["mu"] = m.mu ? json(*m.mu) : json(nullptr);
  j["eta"] = m.eta ? json(*m.eta) : json(nullptr);
  return j;
}

RelativeMetrics metrics_from_json(const json& j) {
  RelativeMetrics m;
  if (!field(j, "mu").is_null()) m.mu = j.at("mu").get<double>();
  if (!field(j, "eta").is_null()) m.eta = j.at("eta").get<double>();
  return m;
}

json to_json(const CapacitySearchResult& r) {
  json trace = json::array();
  for (const auto& [c, g] : r.trace) trace.push_back({{"capacity_kva", c}, {"g_star_kwh", g}});
  return {{"capacity_kva", r.capacity_kva}, {"g_star_kwh", r.g_star}, {"iterations", r.iterations}, {"trace", trace}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string tool_version() { return MOP_VERSION; }

json to_json(const RunManifest& m) {
  json inputs = json::array();
  for (const auto& [p, d] : m.input_digests) inputs.push_back({{"path", p}, {"sha256", d}});
  json outputs = json::array();
  for (const auto& [p, d] : m.output_digests) outputs.push_back({{"path", p}, {"sha256", d}});
  return {{"command", m.command},       {"parameters", m.parameters}, {"seed", m.seed},
          {"tool_version", tool_version()}, {"inputs", inputs},       {"outputs", outputs},
          {"wall_clock_seconds", m.wall_clock_seconds}};
}

}  // namespace mop::io
