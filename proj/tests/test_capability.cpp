#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "mop/capability.hpp"
#include "mop/design.hpp"
#include "mop/errors.hpp"

using Catch::Matchers::WithinAbs;
using mop::CapabilityMode;
using mop::InjectionPoint;

namespace {

InjectionPoint point(std::vector<double> p, std::vector<double> q) {
  InjectionPoint s;
  s.p = Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  s.q = Eigen::Map<Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  return s;
}

void require_vectors(const std::vector<mop::CapacityVector>& got, const std::vector<std::vector<double>>& want,
                     double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    for (std::size_t i = 0; i < want[k].size(); ++i) CHECK_THAT(got[k][i], WithinAbs(want[k][i], tol));
  }
}

// Brute force over all m^n switch states, no deduplication.
bool brute_force_feasible(const mop::Design& d, int m, const InjectionPoint& s) {
  const int n = d.converter_count();
  std::vector<int> b(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<double> caps(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < n; ++j) caps[b[j]] += d.alphas()[j];
    bool ok = true;
    for (int i = 0; i < m; ++i) ok = ok && std::hypot(s.p[i], s.q[i]) <= caps[i] + 1e-12;
    if (ok) return true;
    int j = 0;
    while (j < n && ++b[j] == m) b[j++] = 0;
    if (j == n) return false;
  }
}

InjectionPoint random_pq_point(std::mt19937_64& gen, int m, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  InjectionPoint s{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  double sum = 0.0;
  for (int i = 0; i + 1 < m; ++i) sum += (s.p[i] = u(gen));
  s.p[m - 1] = -sum;
  for (int i = 0; i < m; ++i) s.q[i] = u(gen);
  return s;
}

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("capacity vectors of small designs", "[capability]") {
  require_vectors(mop::enumerate_capacity_vectors(mop::uniform_sizing(3), 2),
                  {{1, 0}, {2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}, {0, 1}}, 1e-12);
  require_vectors(mop::enumerate_capacity_vectors(mop::golden_sizing(3), 2),
                  {{1, 0},
                   {0.809017, 0.190983},
                   {0.690983, 0.309017},
                   {0.5, 0.5},
                   {0.309017, 0.690983},
                   {0.190983, 0.809017},
                   {0, 1}},
                  1e-6);
  require_vectors(mop::enumerate_capacity_vectors(mop::fixed_sop(4), 4), {{0.25, 0.25, 0.25, 0.25}}, 0.0);
}

TEST_CASE("capacity vectors sum to one and are distinct", "[capability]") {
  for (int m = 2; m <= 4; ++m) {
    for (const auto& d : {mop::golden_sizing(4), mop::bisection_sizing(5), mop::uniform_sizing(4)}) {
      const auto caps = mop::enumerate_capacity_vectors(d, m);
      for (std::size_t a = 0; a < caps.size(); ++a) {
        CHECK_THAT(caps[a].sum(), WithinAbs(1.0, 1e-12));
        CHECK(caps[a].minCoeff() >= 0.0);
        for (std::size_t b = a + 1; b < caps.size(); ++b) CHECK((caps[a] - caps[b]).cwiseAbs().maxCoeff() > 1e-12);
      }
    }
  }
}

TEST_CASE("uniform designs meet the multiset bound", "[capability]") {
  for (int m = 2; m <= 4; ++m) {
    for (int n = 2; n <= 6; ++n) {
      const auto caps = mop::enumerate_capacity_vectors(mop::uniform_sizing(n), m);
      CHECK(static_cast<long>(caps.size()) == binomial(n + m - 1, m - 1));
    }
  }
}

TEST_CASE("enumeration errors", "[capability]") {
  CHECK_THROWS_AS(mop::enumerate_capacity_vectors(mop::idealised_design(), 2), mop::UnsupportedOperation);
  mop::EnumerationLimits tight;
  tight.max_assignments = 100;
  CHECK_THROWS_AS(mop::enumerate_capacity_vectors(mop::uniform_sizing(7), 2, tight), mop::SizeLimitExceeded);
  CHECK_NOTHROW(mop::enumerate_capacity_vectors(mop::uniform_sizing(6), 2, tight));
  CHECK_THROWS_AS(mop::enumerate_capacity_vectors(mop::golden_sizing(3), 1), mop::ArgumentError);
  CHECK_THROWS_AS(mop::enumerate_capacity_vectors(mop::fixed_sop(3), 2), mop::InvalidDesign);
}

TEST_CASE("feasibility examples", "[capability]") {
  CHECK(mop::is_feasible(mop::fixed_sop(2), 2, point({0.4, -0.4}, {0, 0}), CapabilityMode::upf));
  CHECK_FALSE(mop::is_feasible(mop::uniform_sizing(3), 2, point({0.4, -0.4}, {0, 0}), CapabilityMode::upf));
  CHECK(mop::is_feasible(mop::idealised_design(), 3, point({0.5, -0.5, 0}, {0, 0, 0}), CapabilityMode::upf));
  CHECK_FALSE(mop::is_feasible(mop::idealised_design(), 3, point({0.6, -0.6, 0}, {0, 0, 0}), CapabilityMode::upf));
  CHECK(mop::is_feasible(mop::uniform_sizing(3), 2, point({1.0 / 3, -1.0 / 3}, {0, 0}), CapabilityMode::upf));
}

TEST_CASE("feasibility rejects malformed points", "[capability]") {
  CHECK_THROWS_AS(mop::is_feasible(mop::fixed_sop(2), 3, point({0.1, -0.1}, {0, 0}), CapabilityMode::pq),
                  mop::Error);
  CHECK_THROWS_AS(mop::is_feasible(mop::fixed_sop(2), 2, point({0.1, -0.1}, {0.1, 0}), CapabilityMode::upf),
                  mop::DomainError);
  CHECK_THROWS_AS(mop::is_feasible(mop::fixed_sop(2), 2, point({0.1, -0.1}, {0, 0}), CapabilityMode::statcom),
                  mop::DomainError);
}

TEST_CASE("chart membership agrees with brute force over switch states", "[capability]") {
  std::mt19937_64 gen(7);
  for (int m = 2; m <= 3; ++m) {
    for (const auto& d : {mop::golden_sizing(3), mop::bisection_sizing(4), mop::uniform_sizing(3)}) {
      const mop::CapabilityChart chart(d, m);
      for (int k = 0; k < 2000; ++k) {
        const auto s = random_pq_point(gen, m, 0.6);
        CHECK(chart.contains(s) == brute_force_feasible(d, m, s));
      }
    }
  }
}

TEST_CASE("fixed SOP reduces to its single split", "[capability]") {
  std::mt19937_64 gen(11);
  const mop::CapabilityChart chart(mop::fixed_sop(3), 3);
  for (int k = 0; k < 5000; ++k) {
    const auto s = random_pq_point(gen, 3, 0.5);
    const bool direct = (s.apparent().array() <= 1.0 / 3 + 1e-12).all();
    CHECK(chart.contains(s) == direct);
  }
}

TEST_CASE("every design chart lies inside the idealised chart", "[capability]") {
  std::mt19937_64 gen(13);
  for (int m = 2; m <= 4; ++m) {
    const mop::CapabilityChart omega(mop::idealised_design(), m);
    for (const auto& d : {mop::golden_sizing(4), mop::uniform_sizing(3), mop::bisection_sizing(3)}) {
      const mop::CapabilityChart chart(d, m);
      int hits = 0;
      for (int k = 0; k < 4000; ++k) {
        const auto s = random_pq_point(gen, m, 0.7);
        if (!chart.contains(s)) continue;
        ++hits;
        CHECK(s.apparent().sum() <= 1.0 + 1e-9);
        CHECK(omega.contains(s));
      }
      if (d.converter_count() >= m) CHECK(hits > 0);
    }
  }
}

TEST_CASE("split refinement never shrinks the chart", "[capability]") {
  std::mt19937_64 gen(17);
  struct Case {
    mop::Design coarse;
    int index;
    double fraction;
    int m;
  };
  const std::vector<Case> cases{{mop::golden_sizing(3), 0, 0.3, 2},
                                {mop::bisection_sizing(3), 2, 0.5, 3},
                                {mop::uniform_sizing(3), 1, 0.7, 2}};
  for (const auto& c : cases) {
    const mop::CapabilityChart coarse(c.coarse, c.m);
    const mop::CapabilityChart fine(mop::split_refinement(c.coarse, c.index, c.fraction), c.m);
    int tested = 0;
    while (tested < 10000) {
      const auto s = random_pq_point(gen, c.m, 0.6);
      if (!coarse.contains(s)) continue;
      ++tested;
      if (!fine.contains(s)) FAIL("refined chart lost a feasible point");
    }
    CHECK(tested == 10000);
  }
}

TEST_CASE("max power transfer", "[capability]") {
  CHECK_THAT(mop::max_power_transfer(mop::golden_sizing(3), 2).maximum, WithinAbs(0.5, 1e-12));
  CHECK_THAT(mop::max_power_transfer(mop::uniform_sizing(3), 2).maximum, WithinAbs(1.0 / 3, 1e-12));
  CHECK_THAT(mop::max_power_transfer(mop::fixed_sop(2), 2).maximum, WithinAbs(0.5, 1e-12));
  const auto omega = mop::max_power_transfer(mop::idealised_design(), 4);
  CHECK(omega.maximum == 0.5);
  CHECK(omega.pair(1, 1) == 0.0);
  CHECK(omega.pair(0, 3) == 0.5);
  const auto fixed = mop::max_power_transfer(mop::fixed_sop(3), 3);
  CHECK_THAT(fixed.pair(0, 2), WithinAbs(1.0 / 3, 1e-12));
}

TEST_CASE("disaggregation splits feeder power by rating", "[capability]") {
  const auto d = mop::Design::multiplexed({0.55, 0.30, 0.15});
  // Converters 0.30 and 0.15 share feeder 1.
  mop::MultiplexerAssignment b{{0, 1, 1}};
  const auto out = mop::disaggregate(point({-0.3, 0.3}, {0.0, 0.0}), b, d);
  REQUIRE(out.size() == 3);
  CHECK_THAT(out[0].real(), WithinAbs(-0.3, 1e-15));
  CHECK_THAT(out[1].real(), WithinAbs(0.2, 1e-15));
  CHECK_THAT(out[2].real(), WithinAbs(0.1, 1e-15));

  const auto zero = mop::disaggregate(point({0.0, 0.0}, {0.0, 0.0}), b, d);
  for (const auto& z : zero) CHECK(std::abs(z) == 0.0);

  mop::MultiplexerAssignment empty_feeder{{0, 0, 0}};
  CHECK_THROWS_AS(mop::disaggregate(point({0.1, -0.1}, {0, 0}), empty_feeder, d), mop::InfeasibleAssignment);
  CHECK_NOTHROW(mop::disaggregate(point({0.1, 0.0}, {0, 0}), empty_feeder, d));
}

TEST_CASE("disaggregation respects converter ratings on feasible points", "[capability]") {
  std::mt19937_64 gen(19);
  const auto d = mop::golden_sizing(4);
  const int m = 3;
  for (int k = 0; k < 2000; ++k) {
    mop::MultiplexerAssignment b;
    for (int j = 0; j < d.converter_count(); ++j) b.feeder.push_back(static_cast<int>(gen() % m));
    const auto caps = mop::connected_capacity(d, b, m);
    auto s = random_pq_point(gen, m, 0.6);
    bool ok = true;
    for (int i = 0; i < m; ++i) ok = ok && std::hypot(s.p[i], s.q[i]) <= caps[i];
    if (!ok) continue;
    const auto out = mop::disaggregate(s, b, d);
    Eigen::VectorXcd total = Eigen::VectorXcd::Zero(m);
    for (int j = 0; j < d.converter_count(); ++j) {
      CHECK(std::abs(out[j]) <= d.alphas()[j] + 1e-12);
      total[b.feeder[j]] += out[j];
    }
    for (int i = 0; i < m; ++i) CHECK(std::abs(total[i] - std::complex<double>(s.p[i], s.q[i])) < 1e-12);
  }
}

TEST_CASE("capacity vectors export to CSV", "[capability]") {
  std::ostringstream os;
  mop::write_capacity_csv(os, mop::enumerate_capacity_vectors(mop::uniform_sizing(2), 2));
  const std::string text = os.str();
  CHECK(text.rfind("s_plus_1,s_plus_2\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("mode names round-trip", "[capability]") {
  for (auto mode : {CapabilityMode::pq, CapabilityMode::upf, CapabilityMode::statcom, CapabilityMode::mpt}) {
    CHECK(mop::capability_mode_from_string(mop::to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(mop::capability_mode_from_string("qp"), mop::ArgumentError);
}
