#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "mop/ccv_analytic.hpp"
#include "mop/ccv_mc.hpp"
#include "mop/errors.hpp"
#include "mop/io.hpp"
#include "mop/network.hpp"
#include "mop/scheduler.hpp"

namespace fs = std::filesystem;
using mop::io::json;

namespace {

enum ExitCode { ok = 0, argument_error = 2, numerical_failure = 3, golden_mismatch = 4 };

struct Output {
  fs::path dir;
  mop::io::RunManifest manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mop::ArgumentError("cannot write " + path.string());
    out << content;
    manifest.output_digests.emplace_back(name, mop::io::sha256_hex(content));
  }

  void add_input(const fs::path& path) { manifest.input_digests.emplace_back(path.string(), mop::io::sha256_file(path)); }

  void finish() {
    manifest.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << mop::io::dump(mop::io::to_json(manifest));
  }
};

mop::Design make_design(const std::string& strategy, int n, const std::vector<double>& alphas, int m) {
  if (!alphas.empty()) {
    return strategy == "fixed" ? mop::Design::fixed(alphas) : mop::Design::multiplexed(alphas);
  }
  if (strategy == "fixed") return mop::fixed_sop(m);
  return mop::design_from_strategy(strategy, n);
}

mop::CapabilityMode parse_mode(const std::string& s) {
  const auto mode = mop::capability_mode_from_string(s);
  if (mode == mop::CapabilityMode::mpt) throw mop::ArgumentError("mode must be upf, statcom or pq");
  return mode;
}

std::string csv_of(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

int run_table1(const fs::path& golden_path, Output& out) {
  out.manifest.command = "table1";
  out.manifest.parameters = {{"golden", golden_path.string()}};
  const auto rows = mop::table1();
  out.write("table1.csv", csv_of([&](std::ostream& os) { mop::write_table1_csv(os, rows); }));
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"design", r.label}, {"n", r.converters}, {"mpt", r.mpt}, {"upf", r.upf}, {"statcom", r.statcom},
                 {"pq", r.pq}});
  }
  out.write("table1.json", mop::io::dump(j));

  std::ifstream in(golden_path);
  if (!in) throw mop::ArgumentError("cannot open golden file " + golden_path.string());
  out.add_input(golden_path);
  const auto mismatches = mop::compare_with_golden(rows, mop::read_golden_csv(in));
  out.finish();
  std::cout << csv_of([&](std::ostream& os) { mop::write_table1_csv(os, rows); });
  for (const auto& mm : mismatches) {
    std::cerr << "golden mismatch: " << mm.cell.label << "/" << mop::to_string(mm.cell.mode) << " computed "
              << mm.computed << ", expected " << mm.cell.value << " +/- " << mm.cell.tolerance << "\n";
  }
  return mismatches.empty() ? ok : golden_mismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplexed soft open point toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for outputs and manifest.json");
  int workers = 1;
  app.add_option("--workers", workers, "Worker threads (results do not depend on it)")->check(CLI::Range(1, 256));

  auto* table1 = app.add_subcommand("table1", "Two-feeder capability chart volumes and golden check");
  std::string golden = (mop::data_dir() / "table1_golden.csv").string();
  table1->add_option("--golden", golden, "Golden CSV (design,mode,value,tolerance)");

  auto* ccv = app.add_subcommand("ccv", "Monte Carlo capability chart volume");
  std::string strategy = "golden";
  int n = 3, m = 2;
  std::vector<double> alphas;
  std::string mode_name = "pq";
  std::int64_t samples = 100000;
  std::uint64_t seed = 1;
  std::vector<std::int64_t> sweep;
  bool boundary = false;
  ccv->add_option("--design", strategy, "uniform|bisection|golden|fixed|idealised");
  ccv->add_option("--n", n, "Converter count");
  ccv->add_option("--alphas", alphas, "Explicit converter sizes (override --n)")->delimiter(',');
  ccv->add_option("--m", m, "Feeder count");
  ccv->add_option("--mode", mode_name, "upf|statcom|pq");
  ccv->add_option("--samples", samples, "Sample count");
  ccv->add_option("--seed", seed, "Random seed");
  ccv->add_option("--sweep", sweep, "Sample counts for a convergence sweep")->delimiter(',');
  ccv->add_flag("--boundary", boundary, "Also write the two-feeder chart boundary CSV");

  auto* schedule = app.add_subcommand("schedule", "24-hour loss-minimising schedule and relative metrics");
  std::string network = (mop::data_dir() / "ieee33.json").string();
  double kappa = 0.01;
  double capacity = 500.0;
  bool no_shortcut = false;
  schedule->add_option("--network", network, "Network case JSON");
  schedule->add_option("--design", strategy, "uniform|bisection|golden|fixed|idealised");
  schedule->add_option("--n", n, "Converter count");
  schedule->add_option("--alphas", alphas, "Explicit converter sizes (override --n)")->delimiter(',');
  schedule->add_option("--kappa", kappa, "Converter loss coefficient");
  schedule->add_option("--capacity-kva", capacity, "Device capacity");
  schedule->add_flag("--no-shortcut", no_shortcut, "Always enumerate every capacity vector");

  auto* size = app.add_subcommand("size", "Capacity at which a design matches a target benefit");
  double target_g = 0.0;
  size->add_option("--network", network, "Network case JSON");
  size->add_option("--design", strategy, "uniform|bisection|golden|fixed|idealised");
  size->add_option("--n", n, "Converter count");
  size->add_option("--alphas", alphas, "Explicit converter sizes (override --n)")->delimiter(',');
  size->add_option("--kappa", kappa, "Converter loss coefficient");
  size->add_option("--capacity-kva", capacity, "Reference capacity c0");
  size->add_option("--target-g", target_g, "Target benefit in kWh per day (default: fixed SOP at c0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : argument_error;
  }

  Output out;
  out.dir = out_dir;
  try {
    if (table1->parsed()) return run_table1(golden, out);

    if (ccv->parsed()) {
      const auto mode = parse_mode(mode_name);
      const auto d = make_design(strategy, n, alphas, m);
      out.manifest.command = "ccv";
      out.manifest.seed = seed;
      out.manifest.parameters = {{"design", mop::io::to_json(d)}, {"m", m},           {"mode", mode_name},
                                 {"samples", samples},            {"sweep", sweep},   {"workers", workers}};
      mop::McOptions options;
      options.workers = workers;
      const auto e = mop::estimate_ccv(d, m, mode, samples, seed, options);
      out.write("ccv.json", mop::io::dump(mop::io::to_json(e)));
      if (!sweep.empty()) {
        const auto s = mop::convergence_sweep(d, m, mode, sweep, seed, workers);
        out.write("ccv_sweep.csv", csv_of([&](std::ostream& os) { mop::write_sweep_csv(os, s); }));
      }
      if (boundary) {
        const auto pts = mop::capability_boundary(d, mode);
        const char* x = mode == mop::CapabilityMode::statcom ? "q1" : "p1";
        const char* y = mode == mop::CapabilityMode::upf ? "p2" : (mode == mop::CapabilityMode::statcom ? "q2" : "q1");
        out.write("boundary.csv", csv_of([&](std::ostream& os) { mop::write_boundary_csv(os, pts, x, y); }));
      }
      out.finish();
      std::cout << mop::io::dump(mop::io::to_json(e));
      return ok;
    }

    const auto c = mop::load_network(network);
    out.add_input(network);
    mop::SchedulerConfig cfg;
    cfg.kappa = kappa;
    cfg.device_capacity_kva = capacity;
    cfg.workers = workers;
    cfg.use_relaxation_shortcut = !no_shortcut;
    cfg.validate();
    const int feeders = c.feeders();
    const auto d = make_design(strategy, n, alphas, feeders);
    const auto models = capacity > 0.0 ? mop::build_horizon_models(c, cfg) : std::vector<mop::QuadraticLossModel>{};

    if (schedule->parsed()) {
      out.manifest.command = "schedule";
      out.manifest.parameters = {{"design", mop::io::to_json(d)}, {"kappa", kappa},        {"capacity_kva", capacity},
                                 {"shortcut", !no_shortcut},      {"workers", workers}};
      const auto run = [&](const mop::Design& dd) {
        return capacity > 0.0 ? mop::schedule_horizon(models, dd, cfg, &c) : mop::schedule_horizon(c, dd, cfg);
      };
      const auto r = run(d);
      const auto fixed = run(mop::fixed_sop(feeders));
      const auto ideal = run(mop::idealised_design());
      const auto metrics = mop::relative_metrics(r.g_star, fixed.g_star, ideal.g_star);
      double soc = 0.0, gap = 0.0, dc = 0.0;
      for (const auto& s : r.steps) {
        soc = std::max(soc, s.result.best.soc_residual);
        gap = std::max(gap, std::abs(s.result.best.relaxation_gap));
        dc = std::max(dc, s.result.best.dc_residual);
      }
      json j = {{"design", mop::io::to_json(d)},
                {"label", mop::describe(d)},
                {"g_star_kwh", r.g_star},
                {"g_star_exact_kwh", r.g_star_exact},
                {"nominal_loss_kwh", r.nominal_energy_kwh},
                {"g_star_fixed_kwh", fixed.g_star},
                {"g_star_idealised_kwh", ideal.g_star},
                {"metrics", mop::io::to_json(metrics)},
                {"max_surrogate_error", r.max_surrogate_error()},
                {"max_soc_residual", soc},
                {"max_relaxation_gap", gap},
                {"max_dc_residual", dc}};
      out.write("schedule.csv", csv_of([&](std::ostream& os) { mop::write_schedule_csv(os, r, capacity); }));
      out.write("metrics.json", mop::io::dump(j));
      out.finish();
      std::cout << mop::io::dump(j);
      return ok;
    }

    if (size->parsed()) {
      if (!(capacity > 0.0)) throw mop::ArgumentError("reference capacity must be positive");
      double target = target_g;
      if (target <= 0.0) target = mop::schedule_horizon(models, mop::fixed_sop(feeders), cfg).g_star;
      out.manifest.command = "size";
      out.manifest.parameters = {{"design", mop::io::to_json(d)}, {"kappa", kappa},          {"capacity_kva", capacity},
                                 {"target_g_kwh", target},        {"workers", workers}};
      const auto r = mop::equivalent_capacity_search(models, d, target, cfg);
      json j = mop::io::to_json(r);
      j["target_g_kwh"] = target;
      j["reference_capacity_kva"] = capacity;
      j["capacity_ratio"] = r.capacity_kva / capacity;
      out.write("capacity.json", mop::io::dump(j));
      out.finish();
      std::cout << mop::io::dump(j);
      return ok;
    }
  } catch (const mop::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return argument_error;
  } catch (const mop::InvalidDesign& e) {
    std::cerr << "invalid design: " << e.what() << "\n";
    return argument_error;
  } catch (const mop::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return argument_error;
  } catch (const mop::UnsupportedOperation& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return argument_error;
  } catch (const mop::SizeLimitExceeded& e) {
    std::cerr << "size limit: " << e.what() << "\n";
    return argument_error;
  } catch (const mop::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  }
  return ok;
}
