#pragma once

#include <Eigen/Core>
#include <complex>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mop {

enum class ProfileKind { demand, wind, solar, none };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& s);

// Hourly multipliers in [0, 1]. An empty set means flat (every multiplier is 1).
struct ProfileSet {
  std::vector<double> demand;
  std::vector<double> wind;
  std::vector<double> solar;

  bool empty() const noexcept { return demand.empty(); }
  int hours() const noexcept { return static_cast<int>(demand.size()); }
  double multiplier(ProfileKind kind, int t) const;
};

struct Bus {
  int id = 0;
  double p_kw = 0.0;     // peak load, scaled by the demand profile
  double q_kvar = 0.0;
  ProfileKind profile = ProfileKind::none;  // multiplier applied to gen_kw
  double gen_kw = 0.0;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
};

// Balanced single-phase-equivalent radial network.
struct NetworkCase {
  std::string name;
  double base_kva = 1000.0;
  double base_kv = 12.66;  // line-to-line
  int slack = 0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<int> terminals;  // one bus per device feeder
  ProfileSet profiles;

  int feeders() const noexcept { return static_cast<int>(terminals.size()); }
  // 24 for the bundled profiles; a case without profiles has one flat hour.
  int timesteps() const noexcept { return profiles.empty() ? 1 : profiles.hours(); }
  double z_base() const noexcept { return base_kv * base_kv * 1000.0 / base_kva; }
  int bus_index(int id) const;

  // Net complex demand at bus index k and hour t in kVA (load minus generation).
  std::complex<double> net_demand_kva(int k, int t) const;
};

// Throws ParseError when the graph is not a tree rooted at the slack bus or a
// terminal is missing or repeated.
void validate(const NetworkCase& c);

ProfileSet read_profiles_csv(std::istream& is);
ProfileSet load_profiles(const std::filesystem::path& path);
void write_profiles_csv(std::ostream& os, const ProfileSet& p);

// Case JSON; an optional "profiles_csv" entry is resolved relative to the file.
NetworkCase parse_network(const std::string& text, const std::filesystem::path& base_dir = {});
NetworkCase load_network(const std::filesystem::path& path);

// $MOP_DATA_DIR if set, else the directory configured at build time.
std::filesystem::path data_dir();

struct BundledCases {
  NetworkCase ieee33_style;
  NetworkCase two_bus_fixture;
  NetworkCase star_fixture;
};

BundledCases bundled_cases();

struct PowerFlowOptions {
  double tolerance = 1e-9;
  int max_sweeps = 200;
};

struct PowerFlowResult {
  Eigen::VectorXcd voltages;     // pu, in case.buses order
  Eigen::VectorXcd branch_currents;  // pu, in case.branches order
  double loss_kw = 0.0;
  double loss_kvar = 0.0;
  std::complex<double> slack_kva;  // supplied by the slack bus
  int iterations = 0;
};

// Backward/forward sweep. extra_injections[i] is the complex power (kVA)
// delivered into the network at terminals[i].
PowerFlowResult solve_power_flow(const NetworkCase& c, int t, const Eigen::VectorXcd& extra_injections,
                                 const PowerFlowOptions& options = {});
PowerFlowResult solve_power_flow(const NetworkCase& c, int t, const PowerFlowOptions& options = {});

// Quadratic network loss in device-base injections x = [Re S_inj; Im S_inj]
// (delivery convention):  loss(x) = x'Qx + q'x + c, all in pu of base_kva.
struct QuadraticLossModel {
  Eigen::MatrixXd q_matrix;
  Eigen::VectorXd q_vec;
  double c_scalar = 0.0;
  double base_kva = 1.0;
  double raw_min_eigenvalue = 0.0;  // before PSD projection

  int feeders() const noexcept { return static_cast<int>(q_vec.size() / 2); }
  double evaluate(const Eigen::VectorXd& x) const { return x.dot(q_matrix * x) + q_vec.dot(x) + c_scalar; }
  Eigen::MatrixXd hessian() const { return 2.0 * q_matrix; }

  // Same model on another device base.
  QuadraticLossModel rescaled(double new_base_kva) const;
};

// Zero model with c = nominal; mainly for trivial cases.
QuadraticLossModel zero_loss_model(int m, double base_kva, double nominal = 0.0);

// Central finite differences of the exact loss around the nominal flow
// (1 + 8m + 4m(2m-1) power flows). step is in device pu.
QuadraticLossModel build_quadratic_loss_model(const NetworkCase& c, int t, double device_kva, double step = 0.01,
                                              const PowerFlowOptions& options = {});

}  // namespace mop
