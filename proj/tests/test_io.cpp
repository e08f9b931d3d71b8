#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mop/errors.hpp"
#include "mop/io.hpp"

using mop::io::json;

TEST_CASE("designs round-trip through JSON", "[io]") {
  for (const auto& d : {mop::golden_sizing(5), mop::fixed_sop(3), mop::idealised_design(),
                        mop::Design::multiplexed({0.6, 0.25, 0.15})}) {
    const json j = json::parse(mop::io::dump(mop::io::to_json(d)));
    CHECK(mop::io::design_from_json(j) == d);
  }
  CHECK(mop::io::to_json(mop::fixed_sop(2))["kind"] == "fixed");
  CHECK_THROWS_AS(mop::io::design_from_json(json{{"alphas", {0.5, 0.5}}}), mop::ParseError);
  CHECK_THROWS_AS(mop::io::design_from_json(json{{"kind", "multiplexed"}, {"alphas", {0.5, 0.4}}}),
                  mop::InvalidDesign);
}

TEST_CASE("estimates round-trip through JSON", "[io]") {
  const auto e = mop::make_estimate(1234, 100000, 11.3137084989847594, 0xfedcba9876543210ull);
  const json j = json::parse(mop::io::dump(mop::io::to_json(e)));
  for (const char* key : {"estimate", "sigma", "n_total", "n_feasible", "volume", "seed"}) CHECK(j.contains(key));
  const auto back = mop::io::estimate_from_json(j);
  CHECK(back.estimate == e.estimate);
  CHECK(back.sigma == e.sigma);
  CHECK(back.n_total == e.n_total);
  CHECK(back.n_feasible == e.n_feasible);
  CHECK(back.sample_volume == e.sample_volume);
  CHECK(back.seed == e.seed);
}

TEST_CASE("metrics round-trip with undefined entries", "[io]") {
  mop::RelativeMetrics m;
  m.mu = 0.17;
  const json j = json::parse(mop::io::dump(mop::io::to_json(m)));
  CHECK(j["eta"].is_null());
  const auto back = mop::io::metrics_from_json(j);
  CHECK(back.mu == m.mu);
  CHECK_FALSE(back.eta);
}

TEST_CASE("capacity search JSON", "[io]") {
  mop::CapacitySearchResult r;
  r.capacity_kva = 368.0;
  r.g_star = 350.6;
  r.iterations = 5;
  r.trace = {{500.0, 430.4}, {125.0, 200.1}};
  const json j = mop::io::to_json(r);
  CHECK(j["iterations"] == 5);
  CHECK(j["trace"].size() == 2);
  CHECK(j["trace"][1]["capacity_kva"] == 125.0);
}

TEST_CASE("dump is stable two-space text", "[io]") {
  const json j = {{"b", 1}, {"a", {1.5, 2}}};
  CHECK(mop::io::dump(j) == "{\n  \"a\": [\n    1.5,\n    2\n  ],\n  \"b\": 1\n}\n");
}

TEST_CASE("sha256 digests", "[io]") {
  CHECK(mop::io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(mop::io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto path = std::filesystem::temp_directory_path() / "mop_io_digest.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "abc";
  }
  CHECK(mop::io::sha256_file(path) == mop::io::sha256_hex("abc"));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(mop::io::sha256_file("/nonexistent/file"), mop::ArgumentError);
}

TEST_CASE("run manifest layout", "[io]") {
  mop::io::RunManifest m;
  m.command = "ccv";
  m.seed = 7;
  m.parameters = {{"samples", 1000}};
  m.input_digests = {{"in.json", "00"}};
  m.output_digests = {{"ccv.json", "11"}};
  const json j = mop::io::to_json(m);
  CHECK(j["command"] == "ccv");
  CHECK(j["seed"] == 7);
  CHECK(j["tool_version"] == mop::io::tool_version());
  CHECK(j["inputs"][0]["path"] == "in.json");
  CHECK(j["outputs"][0]["sha256"] == "11");
  CHECK(j.contains("wall_clock_seconds"));
  CHECK_FALSE(mop::io::tool_version().empty());
}
