#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mop/capability.hpp"
#include "mop/design.hpp"
#include "mop/network.hpp"

namespace mop {

struct SchedulerConfig {
  double kappa = 0.01;
  double device_capacity_kva = 500.0;
  double objective_tolerance = 1e-8;
  double constraint_tolerance = 1e-9;
  double model_step = 0.01;  // finite-difference step of the loss model, device pu
  // Skip enumeration when the budget-constrained optimum already fits one of
  // the capacity vectors (the budget problem is a relaxation of every vector).
  bool use_relaxation_shortcut = true;
  // Abandon a capacity vector once its duality bound exceeds the best
  // objective found so far.
  bool prune_with_bounds = true;
  int workers = 1;

  void validate() const;
};

// Per-feeder device operating point in device pu, inflow convention.
struct SubproblemState {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  Eigen::VectorXd s;
  CapacityVector caps;  // empty for the total-budget case
  bool budget = false;
  double objective = 0.0;
  double network_loss = 0.0;    // model prediction
  double converter_loss = 0.0;  // kappa * sum(s)
  double soc_residual = 0.0;           // max_i (s - |S|) / max(s, 1e-9) on the returned state
  double interior_soc_residual = 0.0;  // same, before the cone is tightened
  double relaxation_gap = 0.0;         // objective change from tightening
  double dc_residual = 0.0;            // |sum p - kappa sum s|
  int newton_steps = 0;

  // Network-delivery injections [-p; -q].
  Eigen::VectorXd injection() const;
};

// Convex subproblem for one capacity vector.
SubproblemState solve_subproblem(const QuadraticLossModel& model, const CapacityVector& caps,
                                 const SchedulerConfig& cfg);

// Same problem under the single constraint sum(s) <= 1.
SubproblemState solve_budget_subproblem(const QuadraticLossModel& model, const SchedulerConfig& cfg);

struct TimestepResult {
  SubproblemState best;
  CapacityVector caps;    // chosen vector; empty for the idealised device
  int subproblems = 0;    // convex solves started, counting the budget relaxation and pruned vectors
  bool shortcut = false;  // the budget optimum fitted a capacity vector
};

TimestepResult solve_timestep(const QuadraticLossModel& model, const Design& d, int m, const SchedulerConfig& cfg);

struct HorizonStep {
  int t = 0;
  TimestepResult result;
  double nominal_loss_kw = 0.0;
  double network_loss_kw = 0.0;  // model
  double converter_loss_kw = 0.0;
  double exact_network_loss_kw = 0.0;  // power flow at the scheduled injections

  double total_loss_kw() const { return network_loss_kw + converter_loss_kw; }
  double exact_total_loss_kw() const { return exact_network_loss_kw + converter_loss_kw; }
};

struct HorizonResult {
  std::vector<HorizonStep> steps;
  double g_star = 0.0;        // kWh over the horizon, one-hour periods
  double g_star_exact = 0.0;  // same, with power-flow network losses
  double nominal_energy_kwh = 0.0;

  // max_t |model total - exact total| / exact total
  double max_surrogate_error() const;
};

// One loss model per timestep, built at the given device capacity.
std::vector<QuadraticLossModel> build_horizon_models(const NetworkCase& c, const SchedulerConfig& cfg);

HorizonResult schedule_horizon(const NetworkCase& c, const Design& d, const SchedulerConfig& cfg);

// Reuses prebuilt models (rescaled to cfg.device_capacity_kva when needed).
// Exact power-flow losses are evaluated only when `exact_case` is given.
HorizonResult schedule_horizon(const std::vector<QuadraticLossModel>& models, const Design& d,
                               const SchedulerConfig& cfg, const NetworkCase* exact_case = nullptr);

struct RelativeMetrics {
  std::optional<double> mu;
  std::optional<double> eta;
};

// Fractions, not percentages. Zero denominators leave the metric empty.
RelativeMetrics relative_metrics(double g_design, double g_fixed, double g_idealised);

struct CapacitySearchResult {
  double capacity_kva = 0.0;
  double g_star = 0.0;
  int iterations = 0;
  std::vector<std::pair<double, double>> trace;  // (capacity, g*) at every evaluation
};

// Secant search for the capacity at which design d delivers target_g kWh.
// The reference capacity c0 is cfg.device_capacity_kva.
CapacitySearchResult equivalent_capacity_search(const NetworkCase& c, const Design& d, double target_g,
                                                const SchedulerConfig& cfg);

// Same, on models already built for cfg.device_capacity_kva.
CapacitySearchResult equivalent_capacity_search(const std::vector<QuadraticLossModel>& models, const Design& d,
                                                double target_g, const SchedulerConfig& cfg);

// t, P_i, Q_i (kW/kVAr, delivered into the network), S+_i,
// network/converter/total loss (kW), exact network loss (kW).
void write_schedule_csv(std::ostream& os, const HorizonResult& r, double device_kva);

}  // namespace mop
