#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("mop_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

int run(const std::string& args, const fs::path& out_dir) {
  const std::string cmd = std::string(MOP_CLI_PATH) + " --out-dir " + out_dir.string() + " " + args + " >" +
                          (out_dir / "stdout.txt").string() + " 2>" + (out_dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("table1 against the bundled golden file", "[cli]") {
  Scratch s;
  CHECK(run("table1", s.dir) == 0);
  CHECK(fs::exists(s.dir / "table1.csv"));
  const auto j = nlohmann::json::parse(slurp(s.dir / "table1.json"));
  REQUIRE(j.size() == 5);
  CHECK(std::abs(j[3]["pq"].get<double>() - 1.357) < 5e-4);
  CHECK(j[0]["statcom"].get<double>() == 1.0);
  CHECK(j[4]["mpt"].get<double>() == 0.5);
  const auto manifest = nlohmann::json::parse(slurp(s.dir / "manifest.json"));
  CHECK(manifest["command"] == "table1");
  CHECK(manifest["outputs"].size() == 2);
}

TEST_CASE("table1 exits 4 on a golden mismatch", "[cli]") {
  Scratch s;
  const auto golden = s.dir / "golden.csv";
  std::ofstream(golden) << "design,mode,value,tolerance\nG(3),pq,1.300,5e-4\n";
  CHECK(run("table1 --golden " + golden.string(), s.dir) == 4);
  CHECK(slurp(s.dir / "stderr.txt").find("G(3)/pq") != std::string::npos);
}

TEST_CASE("ccv command", "[cli]") {
  Scratch s;
  CHECK(run("ccv --design fixed --m 2 --mode upf --samples 100000 --seed 3 --sweep 1000,10000 --boundary", s.dir) ==
        0);
  const auto j = nlohmann::json::parse(slurp(s.dir / "ccv.json"));
  CHECK(std::abs(j["estimate"].get<double>() - std::sqrt(2.0)) <= 3.0 * j["sigma"].get<double>());
  CHECK(j["seed"] == 3);
  CHECK(fs::exists(s.dir / "ccv_sweep.csv"));
  CHECK(slurp(s.dir / "boundary.csv").rfind("p1,p2\n", 0) == 0);
}

TEST_CASE("argument errors exit 2", "[cli]") {
  Scratch s;
  CHECK(run("ccv --samples 0", s.dir) == 2);
  CHECK(run("ccv --mode mpt", s.dir) == 2);
  CHECK(run("ccv --design spiral", s.dir) == 2);
  CHECK(run("ccv --design golden --n 1", s.dir) == 2);
  CHECK(run("ccv --alphas 0.5,0.4", s.dir) == 2);
  CHECK(run("frobnicate", s.dir) == 2);
  CHECK(run("", s.dir) == 2);
  CHECK(run("schedule --network /nonexistent.json", s.dir) == 2);
  CHECK(run("schedule --kappa 0.5", s.dir) == 2);
  CHECK(run("--workers 0 table1", s.dir) == 2);
}

TEST_CASE("schedule and size on the star fixture", "[cli]") {
  Scratch s;
  const std::string net = (fs::path(MOP_TEST_DATA_DIR) / "star.json").string();
  CHECK(run("schedule --network " + net + " --design golden --n 3 --capacity-kva 300", s.dir) == 0);
  const auto m = nlohmann::json::parse(slurp(s.dir / "metrics.json"));
  CHECK(m["g_star_idealised_kwh"].get<double>() >= m["g_star_kwh"].get<double>() - 1e-7 * 300 * 24);
  CHECK(m["max_soc_residual"].get<double>() <= 1e-4);
  CHECK(fs::exists(s.dir / "schedule.csv"));

  CHECK(run("schedule --network " + net + " --design idealised --capacity-kva 300", s.dir) == 0);
  CHECK(nlohmann::json::parse(slurp(s.dir / "metrics.json"))["metrics"]["eta"] == 1.0);
  CHECK(run("schedule --network " + net + " --design fixed --capacity-kva 300", s.dir) == 0);
  CHECK(nlohmann::json::parse(slurp(s.dir / "metrics.json"))["metrics"]["mu"] == 0.0);

  CHECK(run("size --network " + net + " --design golden --n 4 --capacity-kva 300", s.dir) == 0);
  const auto c = nlohmann::json::parse(slurp(s.dir / "capacity.json"));
  CHECK(c["capacity_ratio"].get<double>() <= 1.0);
  CHECK(c["iterations"].get<int>() <= 50);

  CHECK(run("size --network " + net + " --design golden --n 4 --capacity-kva 300 --target-g 1e6", s.dir) == 3);
}
