#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "mop/ccv_mc.hpp"
#include "mop/errors.hpp"
#include "mop/philox.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using mop::CapabilityMode;

TEST_CASE("sample volumes", "[ccv_mc]") {
  CHECK_THAT(mop::sample_volume(CapabilityMode::upf, 2), WithinRel(2.0 * std::sqrt(2.0), 1e-15));
  CHECK_THAT(mop::sample_volume(CapabilityMode::statcom, 3), WithinRel(8.0, 1e-15));
  CHECK_THAT(mop::sample_volume(CapabilityMode::pq, 2), WithinRel(8.0 * std::sqrt(2.0), 1e-15));
  CHECK_THAT(mop::sample_volume(CapabilityMode::pq, 3), WithinRel(32.0 * std::sqrt(3.0), 1e-15));
  CHECK_THROWS_AS(mop::sample_volume(CapabilityMode::mpt, 2), mop::UnsupportedOperation);
}

TEST_CASE("estimator fields follow the hit-ratio formulas", "[ccv_mc]") {
  const auto e = mop::make_estimate(250, 1000, 4.0, 9);
  CHECK(e.estimate == 1.0);
  CHECK_THAT(e.sigma, WithinRel(4.0 * std::sqrt(0.25 * 0.75 / 1000.0), 1e-15));
  const auto none = mop::make_estimate(0, 1000, 4.0, 9);
  CHECK(none.estimate == 0.0);
  CHECK(none.sigma == 0.0);
  const auto all = mop::make_estimate(1000, 1000, 4.0, 9);
  CHECK(all.estimate == 4.0);
  CHECK(all.sigma == 0.0);
}

TEST_CASE("fixed SOP UPF volume", "[ccv_mc]") {
  const auto e = mop::estimate_ccv(mop::fixed_sop(2), 2, CapabilityMode::upf, 100000, 1);
  CHECK(std::abs(e.estimate - std::sqrt(2.0)) <= 3.0 * e.sigma);
  const double f = static_cast<double>(e.n_feasible) / e.n_total;
  CHECK(e.sigma == e.sample_volume * std::sqrt(f * (1.0 - f) / e.n_total));
  CHECK(e.seed == 1);
}

TEST_CASE("golden STATCOM volume", "[ccv_mc]") {
  const auto e = mop::estimate_ccv(mop::golden_sizing(3), 2, CapabilityMode::statcom, 100000, 2);
  CHECK(std::abs(e.estimate - 1.652) <= 3.0 * e.sigma);
}

TEST_CASE("hit count matches a direct replay of the sample streams", "[ccv_mc]") {
  const auto d = mop::golden_sizing(3);
  const int m = 3;
  const mop::CapabilityChart chart(d, m);
  const auto caps = chart.capacity_vectors();
  const std::int64_t n = 20000;
  std::int64_t hits = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    mop::rng::SampleStream rs(77, static_cast<std::uint64_t>(k));
    double p[3], q[3];
    p[0] = rs.uniform(-1.0, 1.0);
    p[1] = rs.uniform(-1.0, 1.0);
    p[2] = -(p[0] + p[1]);
    for (double& x : q) x = rs.uniform(-1.0, 1.0);
    bool feasible = false;
    for (const auto& c : caps) {
      bool ok = true;
      for (int i = 0; i < m; ++i) ok = ok && std::hypot(p[i], q[i]) <= c[i] + 1e-12;
      feasible = feasible || ok;
    }
    hits += feasible;
  }
  const auto e = mop::estimate_ccv(chart, CapabilityMode::pq, n, 77);
  CHECK(e.n_feasible == hits);
}

TEST_CASE("estimates do not depend on the worker count", "[ccv_mc]") {
  const auto d = mop::bisection_sizing(4);
  for (auto mode : {CapabilityMode::pq, CapabilityMode::upf, CapabilityMode::statcom}) {
    const auto one = mop::estimate_ccv(d, 3, mode, 50000, 123);
    mop::McOptions opts;
    opts.workers = 4;
    const auto four = mop::estimate_ccv(d, 3, mode, 50000, 123, opts);
    CHECK(one.n_feasible == four.n_feasible);
    CHECK(one.estimate == four.estimate);
    CHECK(one.sigma == four.sigma);
  }
}

TEST_CASE("argument validation", "[ccv_mc]") {
  CHECK_THROWS_AS(mop::estimate_ccv(mop::fixed_sop(2), 2, CapabilityMode::upf, 0, 1), mop::ArgumentError);
  CHECK_THROWS_AS(mop::estimate_ccv(mop::fixed_sop(2), 2, CapabilityMode::mpt, 10, 1), mop::UnsupportedOperation);
  CHECK_THROWS_AS(mop::convergence_sweep(mop::fixed_sop(2), 2, CapabilityMode::upf, {}, 1), mop::ArgumentError);
  CHECK_THROWS_AS(mop::convergence_sweep(mop::fixed_sop(2), 2, CapabilityMode::upf, {100, 10}, 1),
                  mop::ArgumentError);
}

TEST_CASE("convergence sweep shrinks sigma by about sqrt(10) per decade", "[ccv_mc]") {
  const auto sweep = mop::convergence_sweep(mop::fixed_sop(2), 2, CapabilityMode::upf, {1000, 10000, 100000}, 4);
  REQUIRE(sweep.size() == 3);
  for (std::size_t k = 1; k < sweep.size(); ++k) {
    const double ratio = sweep[k - 1].sigma / sweep[k].sigma;
    CHECK(ratio > 2.6);
    CHECK(ratio < 3.8);
  }
  // Independent streams: the first 1000 samples of the larger runs differ from the smallest run.
  const auto solo = mop::estimate_ccv(mop::fixed_sop(2), 2, CapabilityMode::upf, 1000, 4);
  CHECK(solo.n_feasible != sweep[0].n_feasible);

  std::ostringstream os;
  mop::write_sweep_csv(os, sweep);
  const std::string text = os.str();
  CHECK(text.rfind("n_total,n_feasible,estimate,sigma,lower95,upper95\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("feasible samples respect the total-capacity bound", "[ccv_mc]") {
  // The idealised chart is the bound itself; every design estimate stays below it.
  const std::int64_t n = 100000;
  for (int m = 2; m <= 3; ++m) {
    const auto omega = mop::estimate_ccv(mop::idealised_design(), m, CapabilityMode::pq, n, 3);
    const auto g = mop::estimate_ccv(mop::golden_sizing(4), m, CapabilityMode::pq, n, 3);
    CHECK(g.n_feasible <= omega.n_feasible);
  }
}
