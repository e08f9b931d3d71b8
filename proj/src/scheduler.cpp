#include "mop/scheduler.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <thread>

#include "mop/errors.hpp"

namespace mop {

namespace {

constexpr int kMaxFeeders = 8;
constexpr int kMaxDim = 3 * kMaxFeeders + 1;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Subproblem reduced to the active feeders. Variables z = [p; q; s].
struct Problem {
  int k = 0;
  std::vector<int> active;
  Mat q2;     // 2 Q restricted to [p; q] of the active feeders
  Vec lin;    // gradient of the loss at zero, in (p, q): -q_vec
  Mat quad;   // Q restricted, for objective evaluation
  double c = 0.0;
  double kappa = 0.0;
  bool budget = false;
  Vec caps;

  double objective(const Vec& z) const {
    const auto y = z.head(2 * k);
    return y.dot(quad * y) + lin.dot(y) + c + kappa * z.tail(k).sum();
  }

  // True when z lies strictly inside every cone and bound.
  bool interior(const Vec& z) const {
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      const double p = z[i], q = z[k + i], s = z[2 * k + i];
      if (!(s > 0.0) || !(s * s - p * p - q * q > 0.0)) return false;
      if (!budget && !(caps[i] - s > 0.0)) return false;
      total += s;
    }
    return !budget || 1.0 - total > 0.0;
  }

  double barrier_degree() const { return 2.0 * k + (budget ? 1.0 : k); }

  // f_t(z) = t * objective + barrier, with gradient and Hessian.
  double centering(const Vec& z, double t, Vec& g, Mat& h) const {
    const int n = 3 * k;
    const auto y = z.head(2 * k);
    g.setZero(n);
    h.setZero(n, n);
    g.head(2 * k) = t * (q2 * y + lin);
    g.tail(k).setConstant(t * kappa);
    h.topLeftCorner(2 * k, 2 * k) = t * q2;
    double value = t * objective(z);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      const int ip = i, iq = k + i, is = 2 * k + i;
      const double p = z[ip], q = z[iq], s = z[is];
      const double u = s * s - p * p - q * q;
      value -= std::log(u);
      const double gu[3] = {-2.0 * p, -2.0 * q, 2.0 * s};
      const int idx[3] = {ip, iq, is};
      const double hu[3] = {-2.0, -2.0, 2.0};
      for (int a = 0; a < 3; ++a) {
        g[idx[a]] -= gu[a] / u;
        h(idx[a], idx[a]) -= hu[a] / u;
        for (int b = 0; b < 3; ++b) h(idx[a], idx[b]) += gu[a] * gu[b] / (u * u);
      }
      if (!budget) {
        const double v = caps[i] - s;
        value -= std::log(v);
        g[is] += 1.0 / v;
        h(is, is) += 1.0 / (v * v);
      }
      total += s;
    }
    if (budget) {
      const double v = 1.0 - total;
      value -= std::log(v);
      for (int i = 0; i < k; ++i) {
        g[2 * k + i] += 1.0 / v;
        for (int j = 0; j < k; ++j) h(2 * k + i, 2 * k + j) += 1.0 / (v * v);
      }
    }
    return value;
  }
};

Problem make_problem(const QuadraticLossModel& model, const CapacityVector* caps, const SchedulerConfig& cfg) {
  const int m = model.feeders();
  if (m > kMaxFeeders) throw ArgumentError("scheduler supports at most " + std::to_string(kMaxFeeders) + " feeders");
  Problem pr;
  pr.kappa = cfg.kappa;
  pr.c = model.c_scalar;
  pr.budget = caps == nullptr;
  for (int i = 0; i < m; ++i) {
    if (pr.budget || (*caps)[i] > kCapacityTolerance) pr.active.push_back(i);
  }
  pr.k = static_cast<int>(pr.active.size());
  const int k = pr.k;
  std::vector<int> rows;  // [p; q] of active feeders inside the 2m model layout
  for (int i : pr.active) rows.push_back(i);
  for (int i : pr.active) rows.push_back(m + i);
  pr.quad.resize(2 * k, 2 * k);
  pr.lin.resize(2 * k);
  for (int a = 0; a < 2 * k; ++a) {
    pr.lin[a] = -model.q_vec[rows[a]];
    for (int b = 0; b < 2 * k; ++b) pr.quad(a, b) = model.q_matrix(rows[a], rows[b]);
  }
  pr.q2 = 2.0 * pr.quad;
  if (!pr.budget) {
    pr.caps.resize(k);
    for (int i = 0; i < k; ++i) pr.caps[i] = (*caps)[pr.active[i]];
  }
  return pr;
}

// Equality-constrained barrier method; the single constraint is dc balance.
// Gives up (empty result) once the duality bound proves the optimum lies
// above `cutoff`.
std::optional<Vec> barrier_solve(const Problem& pr, const SchedulerConfig& cfg, int& newton_steps, double cutoff) {
  const int k = pr.k;
  const int n = 3 * k;
  Vec z(n);
  for (int i = 0; i < k; ++i) {
    const double s = pr.budget ? 0.5 / k : 0.5 * pr.caps[i];
    z[i] = pr.kappa * s;
    z[k + i] = 0.0;
    z[2 * k + i] = s;
  }
  Vec a = Vec::Zero(n);
  a.head(k).setOnes();
  a.tail(k).setConstant(-pr.kappa);

  const double nu = pr.barrier_degree();
  const double gap_target = 0.1 * cfg.objective_tolerance;
  double t = 100.0;
  Vec g(n), dz(n), rhs(n + 1), sol(n + 1);
  Mat h(n, n), kkt(n + 1, n + 1);
  newton_steps = 0;
  for (int outer = 0; outer < 60; ++outer) {
    const bool last = nu / t <= gap_target;
    const double centred = last ? 1e-12 : 1e-7;
    for (int inner = 0; inner < 200; ++inner) {
      const double f = pr.centering(z, t, g, h);
      kkt.setZero(n + 1, n + 1);
      kkt.topLeftCorner(n, n) = h;
      kkt.col(n).head(n) = a;
      kkt.row(n).head(n) = a.transpose();
      rhs.head(n) = -g;
      rhs[n] = -a.dot(z);
      sol = kkt.partialPivLu().solve(rhs);
      dz = sol.head(n);
      ++newton_steps;
      const double decrement = -g.dot(dz);
      if (!std::isfinite(decrement)) throw ConvergenceError("barrier Newton step is not finite");
      if (decrement / 2.0 <= centred) break;
      double step = 1.0;
      Vec trial(n), gt(n);
      Mat ht(n, n);
      for (;;) {
        trial = z + step * dz;
        if (pr.interior(trial) && pr.centering(trial, t, gt, ht) <= f - 0.25 * step * decrement) break;
        step *= 0.5;
        if (step < 1e-20) break;
      }
      if (step < 1e-20) break;
      z = trial;
    }
    if (last) return z;
    if (pr.objective(z) - 2.0 * nu / t > cutoff) return std::nullopt;
    t = std::min(t * 50.0, nu / gap_target);
  }
  throw ConvergenceError("barrier method did not reach the objective tolerance");
}

double soc_residual(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& s) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double mag = std::sqrt(p[i] * p[i] + q[i] * q[i]);
    r = std::max(r, (s[i] - mag) / std::max(s[i], 1e-9));
  }
  return r;
}

void evaluate_state(SubproblemState& st, const QuadraticLossModel& model, double kappa) {
  st.network_loss = model.evaluate(st.injection());
  st.converter_loss = kappa * st.s.sum();
  st.objective = st.network_loss + st.converter_loss;
  st.dc_residual = std::abs(st.p.sum() - kappa * st.s.sum());
}

// Puts s on the cone and restores dc balance by a common shift of p, weighted
// by each feeder's remaining headroom.
void tighten(SubproblemState& st, const std::vector<int>& active, const Eigen::VectorXd& headroom, double kappa) {
  auto mag = [&](int i, double p) { return std::sqrt(p * p + st.q[i] * st.q[i]); };
  double wsum = 0.0;
  for (int i : active) wsum += headroom[i];
  std::vector<double> w;
  for (int i : active) w.push_back(wsum > 0.0 ? headroom[i] / wsum : 1.0 / static_cast<double>(active.size()));
  double delta = 0.0;
  for (int it = 0; it < 50; ++it) {
    double f = 0.0, df = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const int i = active[a];
      const double p = st.p[i] + delta * w[a];
      const double s = mag(i, p);
      f += p - kappa * s;
      df += w[a] * (1.0 - (s > 0.0 ? kappa * p / s : 0.0));
    }
    if (std::abs(f) <= 1e-15 || df == 0.0) break;
    delta -= f / df;
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    const int i = active[a];
    st.p[i] += delta * w[a];
    st.s[i] = mag(i, st.p[i]);
  }
}

std::optional<SubproblemState> solve_any(const QuadraticLossModel& model, const CapacityVector* caps,
                                         const SchedulerConfig& cfg,
                                         double cutoff = std::numeric_limits<double>::infinity()) {
  cfg.validate();
  const int m = model.feeders();
  if (caps != nullptr) {
    if (caps->size() != m) throw ArgumentError("capacity vector length differs from the model's feeder count");
    if ((caps->array() < 0.0).any()) throw ArgumentError("capacities must be non-negative");
  }
  const Problem pr = make_problem(model, caps, cfg);
  SubproblemState st;
  st.p = Eigen::VectorXd::Zero(m);
  st.q = Eigen::VectorXd::Zero(m);
  st.s = Eigen::VectorXd::Zero(m);
  st.budget = caps == nullptr;
  if (caps != nullptr) st.caps = *caps;
  if (pr.k == 0) {
    evaluate_state(st, model, cfg.kappa);
    return st;
  }

  const auto solved = barrier_solve(pr, cfg, st.newton_steps, cutoff);
  if (!solved) return std::nullopt;
  const Vec& z = *solved;
  for (int a = 0; a < pr.k; ++a) {
    const int i = pr.active[a];
    st.p[i] = z[a];
    st.q[i] = z[pr.k + a];
    st.s[i] = z[2 * pr.k + a];
  }
  evaluate_state(st, model, cfg.kappa);
  st.interior_soc_residual = soc_residual(st.p, st.q, st.s);
  const double interior_objective = st.objective;

  Eigen::VectorXd headroom = Eigen::VectorXd::Zero(m);
  const double budget_left = 1.0 - st.s.sum();
  for (int i : pr.active) headroom[i] = caps != nullptr ? (*caps)[i] - st.s[i] : budget_left;
  tighten(st, pr.active, headroom, cfg.kappa);
  evaluate_state(st, model, cfg.kappa);
  st.soc_residual = soc_residual(st.p, st.q, st.s);
  st.relaxation_gap = st.objective - interior_objective;
  if (st.dc_residual > cfg.constraint_tolerance) {
    throw ConvergenceError("dc balance residual " + std::to_string(st.dc_residual) + " exceeds tolerance");
  }
  return st;
}

}  // namespace

void SchedulerConfig::validate() const {
  if (!(kappa >= 0.0 && kappa <= 0.1)) throw ArgumentError("kappa must lie in [0, 0.1]");
  if (!(device_capacity_kva >= 0.0)) throw ArgumentError("device capacity must be non-negative");
  if (!(objective_tolerance > 0.0) || !(constraint_tolerance > 0.0)) throw ArgumentError("tolerances must be positive");
  if (!(model_step > 0.0)) throw ArgumentError("model step must be positive");
}

Eigen::VectorXd SubproblemState::injection() const {
  Eigen::VectorXd x(2 * p.size());
  x << -p, -q;
  return x;
}

SubproblemState solve_subproblem(const QuadraticLossModel& model, const CapacityVector& caps,
                                 const SchedulerConfig& cfg) {
  return *solve_any(model, &caps, cfg);
}

SubproblemState solve_budget_subproblem(const QuadraticLossModel& model, const SchedulerConfig& cfg) {
  return *solve_any(model, nullptr, cfg);
}

TimestepResult solve_timestep(const QuadraticLossModel& model, const Design& d, int m, const SchedulerConfig& cfg) {
  if (model.feeders() != m) {
    throw ArgumentError("loss model has " + std::to_string(model.feeders()) + " feeders, expected " + std::to_string(m));
  }
  TimestepResult out;
  if (d.is_idealised()) {
    out.best = solve_budget_subproblem(model, cfg);
    out.subproblems = 1;
    return out;
  }
  const auto vectors = enumerate_capacity_vectors(d, m);
  const std::size_t count = vectors.size();
  std::vector<std::optional<SubproblemState>> states(count);
  double incumbent = std::numeric_limits<double>::infinity();

  if (count > 1 && (cfg.use_relaxation_shortcut || cfg.prune_with_bounds)) {
    SubproblemState relaxed = solve_budget_subproblem(model, cfg);
    out.subproblems = 1;
    std::size_t nearest = 0;
    double nearest_excess = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
      const double excess = (relaxed.s - vectors[k]).maxCoeff();
      if (cfg.use_relaxation_shortcut && excess <= 0.0) {
        relaxed.caps = vectors[k];
        relaxed.budget = false;
        out.best = std::move(relaxed);
        out.caps = vectors[k];
        out.shortcut = true;
        return out;
      }
      if (excess < nearest_excess) {
        nearest_excess = excess;
        nearest = k;
      }
    }
    if (cfg.prune_with_bounds) {
      states[nearest] = solve_subproblem(model, vectors[nearest], cfg);
      ++out.subproblems;
      incumbent = states[nearest]->objective;
    }
  }

  // Pruned vectors provably score above the incumbent, so the selection below
  // does not depend on how the work is split.
  std::atomic<int> solves{0};
  auto run = [&](std::size_t begin, std::size_t end) {
    double cutoff = cfg.prune_with_bounds ? incumbent : std::numeric_limits<double>::infinity();
    for (std::size_t k = begin; k < end; ++k) {
      if (states[k]) continue;
      ++solves;
      states[k] = solve_any(model, &vectors[k], cfg, cutoff);
      if (states[k] && cfg.prune_with_bounds) cutoff = std::min(cutoff, states[k]->objective);
    }
  };
  const int workers = std::clamp(cfg.workers, 1, 256);
  if (workers == 1 || count < 8) {
    run(0, count);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::size_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(count, w * chunk);
      const std::size_t end = std::min(count, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        try {
          run(begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  out.subproblems += solves.load();

  // Vectors arrive lexicographically descending; the first of equal objectives wins.
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < count; ++k) {
    if (!states[k]) continue;
    if (!best || states[k]->objective < states[*best]->objective - 1e-12) best = k;
  }
  out.best = std::move(*states[*best]);
  out.caps = vectors[*best];
  return out;
}

double HorizonResult::max_surrogate_error() const {
  double e = 0.0;
  for (const auto& s : steps) {
    const double exact = s.exact_total_loss_kw();
    if (exact > 0.0) e = std::max(e, std::abs(s.total_loss_kw() - exact) / exact);
  }
  return e;
}

std::vector<QuadraticLossModel> build_horizon_models(const NetworkCase& c, const SchedulerConfig& cfg) {
  cfg.validate();
  if (!(cfg.device_capacity_kva > 0.0)) throw ArgumentError("loss models need a positive device capacity");
  std::vector<QuadraticLossModel> models;
  for (int t = 0; t < c.timesteps(); ++t) {
    models.push_back(build_quadratic_loss_model(c, t, cfg.device_capacity_kva, cfg.model_step));
  }
  return models;
}

HorizonResult schedule_horizon(const std::vector<QuadraticLossModel>& models, const Design& d,
                               const SchedulerConfig& cfg, const NetworkCase* exact_case) {
  cfg.validate();
  HorizonResult r;
  const double kva = cfg.device_capacity_kva;
  for (int t = 0; t < static_cast<int>(models.size()); ++t) {
    HorizonStep step;
    step.t = t;
    const int m = models[t].feeders();
    step.nominal_loss_kw = models[t].c_scalar * models[t].base_kva;
    if (kva > 0.0) {
      const QuadraticLossModel model =
          std::abs(models[t].base_kva - kva) <= 1e-12 * kva ? models[t] : models[t].rescaled(kva);
      step.result = solve_timestep(model, d, m, cfg);
      step.network_loss_kw = step.result.best.network_loss * kva;
      step.converter_loss_kw = step.result.best.converter_loss * kva;
    } else {
      step.result.best.p = step.result.best.q = step.result.best.s = Eigen::VectorXd::Zero(m);
      step.network_loss_kw = step.nominal_loss_kw;
    }
    if (exact_case != nullptr) {
      Eigen::VectorXcd inj(m);
      const auto& b = step.result.best;
      for (int i = 0; i < m; ++i) inj[i] = std::complex<double>(-b.p[i], -b.q[i]) * kva;
      step.exact_network_loss_kw = solve_power_flow(*exact_case, t, inj).loss_kw;
    }
    r.nominal_energy_kwh += step.nominal_loss_kw;
    r.g_star += step.nominal_loss_kw - step.total_loss_kw();
    r.g_star_exact += step.nominal_loss_kw - step.exact_total_loss_kw();
    r.steps.push_back(std::move(step));
  }
  if (exact_case == nullptr) r.g_star_exact = std::numeric_limits<double>::quiet_NaN();
  return r;
}

HorizonResult schedule_horizon(const NetworkCase& c, const Design& d, const SchedulerConfig& cfg) {
  cfg.validate();
  if (cfg.device_capacity_kva == 0.0) {
    SchedulerConfig unit = cfg;
    unit.device_capacity_kva = 1.0;
    return schedule_horizon(build_horizon_models(c, unit), d, cfg, &c);
  }
  return schedule_horizon(build_horizon_models(c, cfg), d, cfg, &c);
}

RelativeMetrics relative_metrics(double g_design, double g_fixed, double g_idealised) {
  RelativeMetrics r;
  if (g_fixed != 0.0) r.mu = (g_design - g_fixed) / g_fixed;
  if (g_idealised != g_fixed) r.eta = (g_design - g_fixed) / (g_idealised - g_fixed);
  return r;
}

CapacitySearchResult equivalent_capacity_search(const std::vector<QuadraticLossModel>& models, const Design& d,
                                                double target_g, const SchedulerConfig& cfg) {
  cfg.validate();
  if (!(target_g > 0.0)) throw ArgumentError("target benefit must be positive");
  const double c0 = cfg.device_capacity_kva;
  if (!(c0 > 0.0)) throw ArgumentError("reference capacity must be positive");
  CapacitySearchResult out;
  const double tol = 1e-3 * target_g;
  auto residual = [&](double cap) {
    SchedulerConfig at = cfg;
    at.device_capacity_kva = cap;
    const double g = schedule_horizon(models, d, at).g_star;
    out.trace.emplace_back(cap, g);
    return g - target_g;
  };
  auto done = [&](double cap, double f) {
    out.capacity_kva = cap;
    out.g_star = f + target_g;
    return std::abs(f) <= tol;
  };

  double x_hi = c0;
  double f_hi = residual(x_hi);
  out.iterations = 1;
  if (f_hi < -tol) {
    throw UnreachableTarget("target " + std::to_string(target_g) + " kWh exceeds g* = " +
                            std::to_string(f_hi + target_g) + " kWh at the reference capacity");
  }
  if (done(x_hi, f_hi)) return out;
  double x_prev = 0.25 * c0;
  double f_prev = residual(x_prev);
  out.iterations = 2;
  if (done(x_prev, f_prev)) return out;

  // Bracket [lo, hi] with f(lo) < 0 <= f(hi); g*(0) = 0 anchors the bottom.
  double lo = 0.0, hi = x_hi;
  if (f_prev < 0.0) {
    lo = x_prev;
  } else {
    hi = x_prev;
  }
  double x_cur = x_hi, f_cur = f_hi;
  while (out.iterations < 50) {
    double x_next = f_cur != f_prev ? x_cur - f_cur * (x_cur - x_prev) / (f_cur - f_prev) : 0.5 * (lo + hi);
    if (!(x_next > lo && x_next < hi)) x_next = 0.5 * (lo + hi);
    const double f_next = residual(x_next);
    ++out.iterations;
    if (done(x_next, f_next)) return out;
    if (f_next < 0.0) {
      lo = x_next;
    } else {
      hi = x_next;
    }
    x_prev = x_cur;
    f_prev = f_cur;
    x_cur = x_next;
    f_cur = f_next;
  }
  throw ConvergenceError("capacity search did not converge in 50 iterations");
}

CapacitySearchResult equivalent_capacity_search(const NetworkCase& c, const Design& d, double target_g,
                                                const SchedulerConfig& cfg) {
  return equivalent_capacity_search(build_horizon_models(c, cfg), d, target_g, cfg);
}

void write_schedule_csv(std::ostream& os, const HorizonResult& r, double device_kva) {
  if (r.steps.empty()) return;
  const int m = static_cast<int>(r.steps.front().result.best.p.size());
  os << "t";
  for (int i = 1; i <= m; ++i) os << ",p" << i << "_kw";
  for (int i = 1; i <= m; ++i) os << ",q" << i << "_kvar";
  for (int i = 1; i <= m; ++i) os << ",s_plus_" << i;
  os << ",network_loss_kw,converter_loss_kw,total_loss_kw,exact_network_loss_kw\n";
  const auto old = os.precision(10);
  for (const auto& s : r.steps) {
    const auto& b = s.result.best;
    os << s.t;
    for (int i = 0; i < m; ++i) os << ',' << -b.p[i] * device_kva + 0.0;
    for (int i = 0; i < m; ++i) os << ',' << -b.q[i] * device_kva + 0.0;
    for (int i = 0; i < m; ++i) {
      os << ',';
      if (s.result.caps.size() == m) {
        os << s.result.caps[i];
      } else {
        os << "budget";
      }
    }
    os << ',' << s.network_loss_kw << ',' << s.converter_loss_kw << ',' << s.total_loss_kw() << ','
       << s.exact_network_loss_kw << '\n';
  }
  os.precision(old);
}

}  // namespace mop
