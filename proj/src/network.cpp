#include "mop/network.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "mop/errors.hpp"

namespace mop {

namespace {

using cplx = std::complex<double>;

// Sweep order for a validated radial case.
struct Tree {
  std::vector<int> order;          // bus indices, parents before children
  std::vector<int> parent;         // bus index, -1 at the slack
  std::vector<int> parent_branch;  // branch index, -1 at the slack
};

Tree build_tree(const NetworkCase& c) {
  const int n = static_cast<int>(c.buses.size());
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (int b = 0; b < static_cast<int>(c.branches.size()); ++b) {
    const int f = c.bus_index(c.branches[b].from);
    const int t = c.bus_index(c.branches[b].to);
    adj[f].push_back({t, b});
    adj[t].push_back({f, b});
  }
  Tree tree;
  tree.parent.assign(static_cast<std::size_t>(n), -2);
  tree.parent_branch.assign(static_cast<std::size_t>(n), -1);
  const int root = c.bus_index(c.slack);
  std::queue<int> frontier;
  frontier.push(root);
  tree.parent[root] = -1;
  while (!frontier.empty()) {
    const int k = frontier.front();
    frontier.pop();
    tree.order.push_back(k);
    for (auto [next, b] : adj[k]) {
      if (next == tree.parent[k] && b == tree.parent_branch[k]) continue;
      if (tree.parent[next] != -2) throw ParseError("network is not radial: branch graph has a cycle");
      tree.parent[next] = k;
      tree.parent_branch[next] = b;
      frontier.push(next);
    }
  }
  if (static_cast<int>(tree.order.size()) != n) {
    throw ParseError("network is not radial: some buses are not connected to the slack");
  }
  return tree;
}

}  // namespace

double ProfileSet::multiplier(ProfileKind kind, int t) const {
  if (kind == ProfileKind::none) return 1.0;
  if (empty()) return 1.0;
  if (t < 0 || t >= hours()) throw ArgumentError("timestep " + std::to_string(t) + " outside the profile horizon");
  switch (kind) {
    case ProfileKind::demand: return demand[t];
    case ProfileKind::wind: return wind[t];
    case ProfileKind::solar: return solar[t];
    case ProfileKind::none: break;
  }
  return 1.0;
}

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::demand: return "demand";
    case ProfileKind::wind: return "wind";
    case ProfileKind::solar: return "solar";
    case ProfileKind::none: return "none";
  }
  return "none";
}

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "demand") return ProfileKind::demand;
  if (s == "wind") return ProfileKind::wind;
  if (s == "solar") return ProfileKind::solar;
  if (s == "none") return ProfileKind::none;
  throw ArgumentError("unknown profile '" + s + "'");
}

int NetworkCase::bus_index(int id) const {
  for (int k = 0; k < static_cast<int>(buses.size()); ++k) {
    if (buses[k].id == id) return k;
  }
  throw ArgumentError("unknown bus id " + std::to_string(id));
}

std::complex<double> NetworkCase::net_demand_kva(int k, int t) const {
  const Bus& b = buses[k];
  const double load = profiles.multiplier(ProfileKind::demand, t);
  const double gen = b.gen_kw == 0.0 ? 0.0 : b.gen_kw * profiles.multiplier(b.profile, t);
  return {b.p_kw * load - gen, b.q_kvar * load};
}

void validate(const NetworkCase& c) {
  if (!(c.base_kva > 0.0) || !(c.base_kv > 0.0)) throw ParseError("base kva and kv must be positive");
  if (c.buses.empty()) throw ParseError("network has no buses");
  std::unordered_map<int, int> seen;
  for (const auto& b : c.buses) {
    if (!seen.emplace(b.id, 0).second) throw ParseError("duplicate bus id " + std::to_string(b.id));
  }
  if (!seen.count(c.slack)) throw ParseError("slack bus " + std::to_string(c.slack) + " does not exist");
  for (const auto& br : c.branches) {
    if (!seen.count(br.from) || !seen.count(br.to)) {
      throw ParseError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) + " references an unknown bus");
    }
    if (br.from == br.to) throw ParseError("branch at bus " + std::to_string(br.from) + " is a self-loop");
    if (br.r_ohm < 0.0) throw ParseError("branch resistance must be non-negative");
  }
  if (c.branches.size() + 1 != c.buses.size()) {
    throw ParseError("network is not radial: expected " + std::to_string(c.buses.size() - 1) + " branches, found " +
                     std::to_string(c.branches.size()));
  }
  build_tree(c);
  if (c.terminals.empty()) throw ParseError("network has no device terminals");
  for (std::size_t i = 0; i < c.terminals.size(); ++i) {
    if (!seen.count(c.terminals[i])) throw ParseError("terminal bus " + std::to_string(c.terminals[i]) + " does not exist");
    if (++seen[c.terminals[i]] > 1) throw ParseError("terminal bus " + std::to_string(c.terminals[i]) + " is repeated");
  }
  if (!c.profiles.empty()) {
    const auto h = c.profiles.demand.size();
    if (c.profiles.wind.size() != h || c.profiles.solar.size() != h) throw ParseError("profile columns differ in length");
  }
}

PowerFlowResult solve_power_flow(const NetworkCase& c, int t, const Eigen::VectorXcd& extra_injections,
                                 const PowerFlowOptions& options) {
  if (extra_injections.size() != c.feeders()) throw ArgumentError("one injection per terminal is required");
  const Tree tree = build_tree(c);
  const int n = static_cast<int>(c.buses.size());
  const double zb = c.z_base();

  Eigen::VectorXcd demand(n);
  for (int k = 0; k < n; ++k) demand[k] = c.net_demand_kva(k, t) / c.base_kva;
  for (int i = 0; i < c.feeders(); ++i) demand[c.bus_index(c.terminals[i])] -= extra_injections[i] / c.base_kva;

  std::vector<cplx> z(c.branches.size());
  for (std::size_t b = 0; b < c.branches.size(); ++b) z[b] = cplx(c.branches[b].r_ohm, c.branches[b].x_ohm) / zb;

  PowerFlowResult r;
  r.voltages = Eigen::VectorXcd::Ones(n);
  r.branch_currents = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(c.branches.size()));
  Eigen::VectorXcd node_current(n);
  bool converged = false;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (int k = 0; k < n; ++k) node_current[k] = std::conj(demand[k] / r.voltages[k]);
    for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
      const int k = *it;
      if (tree.parent[k] < 0) continue;
      r.branch_currents[tree.parent_branch[k]] = node_current[k];
      node_current[tree.parent[k]] += node_current[k];
    }
    double delta = 0.0;
    for (int k : tree.order) {
      if (tree.parent[k] < 0) continue;
      const int b = tree.parent_branch[k];
      const cplx v = r.voltages[tree.parent[k]] - z[b] * r.branch_currents[b];
      delta = std::max(delta, std::abs(v - r.voltages[k]));
      r.voltages[k] = v;
    }
    r.iterations = sweep;
    if (delta < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("power flow did not converge in " + std::to_string(options.max_sweeps) + " sweeps");

  cplx loss = 0.0;
  cplx slack_current = 0.0;
  const int root = tree.order.front();
  for (std::size_t b = 0; b < c.branches.size(); ++b) loss += z[b] * std::norm(r.branch_currents[b]);
  for (int k = 0; k < n; ++k) {
    if (tree.parent[k] == root) slack_current += r.branch_currents[tree.parent_branch[k]];
  }
  r.loss_kw = loss.real() * c.base_kva;
  r.loss_kvar = loss.imag() * c.base_kva;
  r.slack_kva = (r.voltages[root] * std::conj(slack_current) + demand[root]) * c.base_kva;
  return r;
}

PowerFlowResult solve_power_flow(const NetworkCase& c, int t, const PowerFlowOptions& options) {
  return solve_power_flow(c, t, Eigen::VectorXcd::Zero(c.feeders()), options);
}

QuadraticLossModel QuadraticLossModel::rescaled(double new_base_kva) const {
  if (!(new_base_kva > 0.0)) throw ArgumentError("device base must be positive");
  QuadraticLossModel m = *this;
  const double ratio = new_base_kva / base_kva;
  m.q_matrix *= ratio;
  m.c_scalar /= ratio;
  m.base_kva = new_base_kva;
  return m;
}

QuadraticLossModel zero_loss_model(int m, double base_kva, double nominal) {
  QuadraticLossModel model;
  model.q_matrix = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  model.q_vec = Eigen::VectorXd::Zero(2 * m);
  model.c_scalar = nominal;
  model.base_kva = base_kva;
  return model;
}

QuadraticLossModel build_quadratic_loss_model(const NetworkCase& c, int t, double device_kva, double step,
                                              const PowerFlowOptions& options) {
  if (!(device_kva > 0.0)) throw ArgumentError("device capacity must be positive");
  if (!(step > 0.0)) throw ArgumentError("finite-difference step must be positive");
  const int m = c.feeders();
  const int dim = 2 * m;

  auto loss = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXcd s(m);
    for (int i = 0; i < m; ++i) s[i] = cplx(x[i], x[m + i]) * device_kva;
    return solve_power_flow(c, t, s, options).loss_kw / device_kva;
  };

  const double f0 = loss(Eigen::VectorXd::Zero(dim));
  Eigen::VectorXd grad(dim);
  Eigen::MatrixXd hess(dim, dim);
  Eigen::VectorXd f_plus(dim), f_minus(dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    x[i] = step;
    f_plus[i] = loss(x);
    x[i] = -step;
    f_minus[i] = loss(x);
    hess(i, i) = (f_plus[i] - 2.0 * f0 + f_minus[i]) / (step * step);
    // Richardson combination with the half step cancels the step^2 error term.
    x[i] = 0.5 * step;
    const double half_plus = loss(x);
    x[i] = -0.5 * step;
    const double half = (half_plus - loss(x)) / step;
    grad[i] = (4.0 * half - (f_plus[i] - f_minus[i]) / (2.0 * step)) / 3.0;
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      double corner[4];
      int k = 0;
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
          x[i] = si * step;
          x[j] = sj * step;
          corner[k++] = loss(x);
        }
      }
      hess(i, j) = hess(j, i) = (corner[0] - corner[1] - corner[2] + corner[3]) / (4.0 * step * step);
    }
  }

  Eigen::MatrixXd q = 0.25 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  QuadraticLossModel model;
  model.raw_min_eigenvalue = eig.eigenvalues().minCoeff();
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  model.q_matrix = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  model.q_matrix = 0.5 * (model.q_matrix + model.q_matrix.transpose());
  model.q_vec = grad;
  model.c_scalar = f0;
  model.base_kva = device_kva;
  return model;
}

}  // namespace mop
