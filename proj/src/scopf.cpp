#include "cascopf/scopf.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

namespace cascopf {

const char* to_string(ConstraintFamily f) {
  switch (f) {
    case ConstraintFamily::Balance: return "balance";
    case ConstraintFamily::ReferenceAngle: return "reference_angle";
    case ConstraintFamily::Thermal: return "thermal";
    case ConstraintFamily::Capacity: return "capacity";
    case ConstraintFamily::ReserveBound: return "reserve_bound";
    case ConstraintFamily::RampLink: return "ramp_link";
    case ConstraintFamily::ContingencyLink: return "contingency_link";
    case ConstraintFamily::Transition: return "transition";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// VariableLayout

VariableLayout::VariableLayout(int periods, std::vector<std::vector<std::vector<Id>>> gens_tc,
                               std::vector<std::vector<std::vector<Id>>> buses_tc,
                               std::vector<std::vector<Id>> gens_t)
    : periods_(periods),
      gens_tc_(std::move(gens_tc)),
      buses_tc_(std::move(buses_tc)),
      gens_t_(std::move(gens_t)) {
  int at = 0;
  block_offset_.resize(static_cast<size_t>(periods_));
  for (int t = 0; t < periods_; ++t) {
    const auto& cases = gens_tc_[static_cast<size_t>(t)];
    for (size_t c = 0; c < cases.size(); ++c) {
      block_offset_[static_cast<size_t>(t)].push_back(at);
      at += static_cast<int>(cases[c].size());
      at += static_cast<int>(buses_tc_[static_cast<size_t>(t)][c].size());
    }
  }
  reserve_offset_.resize(static_cast<size_t>(periods_));
  for (int t = 0; t < periods_; ++t) {
    reserve_offset_[static_cast<size_t>(t)] = at;
    at += 4 * static_cast<int>(gens_t_[static_cast<size_t>(t)].size());
  }
  total_ = at;
}

int VariableLayout::rank_of(const std::vector<Id>& ids, Id id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) return -1;
  return static_cast<int>(it - ids.begin());
}

int VariableLayout::p(int t, Id gen, int c) const {
  const int r = rank_of(gens(t, c), gen);
  if (r < 0) throw std::out_of_range("no dispatch variable for generator " + std::to_string(gen));
  return block_offset_[static_cast<size_t>(t)][static_cast<size_t>(c)] + r;
}

int VariableLayout::theta(int t, Id bus, int c) const {
  const int r = rank_of(buses(t, c), bus);
  if (r < 0) throw std::out_of_range("no angle variable for bus " + std::to_string(bus));
  return block_offset_[static_cast<size_t>(t)][static_cast<size_t>(c)] +
         static_cast<int>(gens(t, c).size()) + r;
}

bool VariableLayout::has_p(int t, Id gen, int c) const { return rank_of(gens(t, c), gen) >= 0; }
bool VariableLayout::has_theta(int t, Id bus, int c) const {
  return rank_of(buses(t, c), bus) >= 0;
}

int VariableLayout::r_up(int t, Id gen) const {
  const int r = rank_of(gens_t_[static_cast<size_t>(t)], gen);
  if (r < 0) throw std::out_of_range("no reserve variable for generator " + std::to_string(gen));
  return reserve_offset_[static_cast<size_t>(t)] + r;
}
int VariableLayout::r_down(int t, Id gen) const {
  return r_up(t, gen) + static_cast<int>(gens_t_[static_cast<size_t>(t)].size());
}
int VariableLayout::w_up(int t, Id gen) const {
  return r_up(t, gen) + 2 * static_cast<int>(gens_t_[static_cast<size_t>(t)].size());
}
int VariableLayout::w_down(int t, Id gen) const {
  return r_up(t, gen) + 3 * static_cast<int>(gens_t_[static_cast<size_t>(t)].size());
}

// ---------------------------------------------------------------------------
// Builder

ScopfProblem build_scopf(const GridCase& grid, const StepResolution& step,
                         const BuildConfig& config) {
  ScopfProblem prob;
  prob.periods = config.periods > 0 ? config.periods : grid.period_count;
  if (prob.periods < 1) throw std::invalid_argument("period count must be >= 1");
  prob.base_mva = grid.base_mva;
  prob.step_index = config.step_index != 0 ? config.step_index : step.step;
  prob.check_tol_mw = config.check_tol_mw;
  prob.derates_applied = step.derate_targets;
  prob.contingencies = step.contingencies;
  const double base = grid.base_mva;
  const int T = prob.periods;
  const int ncases = 1 + static_cast<int>(step.contingencies.size());

  prob.snapshots.resize(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < ncases; ++c) {
      OutageSet outages = step.applied_outages;
      if (c > 0)
        outages = OutageSet::unite(outages, step.contingencies[static_cast<size_t>(c - 1)].elements);
      NetworkSnapshot snap = build_snapshot(grid, outages, step.derate_targets, t);
      if (snap.buses.empty()) throw std::runtime_error("empty network after outages");
      prob.snapshots[static_cast<size_t>(t)].push_back(std::move(snap));
    }
  }

  std::vector<std::vector<std::vector<Id>>> gens_tc(static_cast<size_t>(T));
  std::vector<std::vector<std::vector<Id>>> buses_tc(static_cast<size_t>(T));
  std::vector<std::vector<Id>> gens_t(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < ncases; ++c) {
      const auto& snap = prob.snapshots[static_cast<size_t>(t)][static_cast<size_t>(c)];
      gens_tc[static_cast<size_t>(t)].push_back(snap.generators);
      buses_tc[static_cast<size_t>(t)].push_back(snap.buses);
    }
    gens_t[static_cast<size_t>(t)] = prob.snapshots[static_cast<size_t>(t)][0].generators;
  }
  prob.layout = VariableLayout(T, std::move(gens_tc), std::move(buses_tc), std::move(gens_t));

  for (int t = 0; t < T; ++t) {
    for (Id gid : prob.layout.gens(t)) {
      if (prob.generator_pmin_pu.count(gid)) continue;
      const Generator& g = *grid.generator(gid);
      auto ov = config.initial_dispatch_mw.find(gid);
      prob.initial_dispatch_pu[gid] =
          (ov != config.initial_dispatch_mw.end() ? ov->second : g.p0) / base;
      prob.generator_pmin_pu[gid] = g.p_min / base;
      prob.generator_pmax_pu[gid] = g.p_max / base;
    }
  }

  const int n = prob.layout.total();
  prob.quad_diag = Eigen::VectorXd::Zero(n);
  prob.linear = Eigen::VectorXd::Zero(n);
  prob.constant = 0.0;

  // objective: per-case dispatch cost, wear on base-case ramps, reserve prices
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < prob.layout.cases(t); ++c) {
      for (Id gid : prob.layout.gens(t, c)) {
        const CostModel& cost = grid.generator(gid)->cost;
        const int col = prob.layout.p(t, gid, c);
        prob.quad_diag[col] += cost.alpha_sqr * base * base;
        prob.linear[col] += cost.alpha_lin * base;
        prob.constant += cost.zeta;
      }
    }
    for (Id gid : prob.layout.gens(t)) {
      const CostModel& cost = grid.generator(gid)->cost;
      if (cost.kappa > 0) {
        WearTerm wt;
        wt.kappa = cost.kappa * base * base;
        wt.col_now = prob.layout.p(t, gid, 0);
        if (t == 0) {
          wt.col_prev = -1;
          wt.prev_const = prob.initial_dispatch_pu.at(gid);
        } else if (prob.layout.has_p(t - 1, gid, 0)) {
          wt.col_prev = prob.layout.p(t - 1, gid, 0);
        } else {
          continue;
        }
        prob.wear.push_back(wt);
      }
      if (config.include_reserve_pricing) {
        prob.linear[prob.layout.r_up(t, gid)] += cost.eta_up * base;
        prob.linear[prob.layout.r_down(t, gid)] += cost.eta_down * base;
        prob.linear[prob.layout.w_up(t, gid)] += cost.mu_up * base;
        prob.linear[prob.layout.w_down(t, gid)] += cost.mu_down * base;
      }
    }
  }

  auto add_row = [&](LinearRow row) { prob.rows.push_back(std::move(row)); };

  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < prob.layout.cases(t); ++c) {
      const auto& snap = prob.snapshots[static_cast<size_t>(t)][static_cast<size_t>(c)];

      // nodal balance: sum_g p - B theta = d, per active bus
      for (size_t bi = 0; bi < snap.buses.size(); ++bi) {
        LinearRow row;
        row.family = ConstraintFamily::Balance;
        row.t = t;
        row.c = c;
        row.element = snap.buses[bi];
        row.lo = row.hi = snap.demand[static_cast<Eigen::Index>(bi)];
        for (Id gid : snap.generators) {
          if (grid.generator(gid)->bus == snap.buses[bi])
            row.terms.emplace_back(prob.layout.p(t, gid, c), 1.0);
        }
        for (Eigen::SparseMatrix<double>::InnerIterator it(
                 snap.bus_susceptance, static_cast<int>(bi));
             it; ++it) {
          // column-major iteration over a symmetric matrix gives row bi
          row.terms.emplace_back(prob.layout.theta(t, snap.buses[static_cast<size_t>(it.row())], c),
                                 -it.value());
        }
        add_row(std::move(row));
      }

      // one reference angle per island
      for (Id ref : snap.reference_buses) {
        LinearRow row;
        row.family = ConstraintFamily::ReferenceAngle;
        row.t = t;
        row.c = c;
        row.element = ref;
        row.lo = row.hi = 0.0;
        row.terms.emplace_back(prob.layout.theta(t, ref, c), 1.0);
        add_row(std::move(row));
      }

      // thermal limits: -F <= b(theta_i - theta_j) + shift <= F
      for (size_t e = 0; e < snap.branches.size(); ++e) {
        const double limit = snap.effective_limit[static_cast<Eigen::Index>(e)];
        if (!std::isfinite(limit)) continue;
        const Branch& br = *grid.branch(snap.branches[e]);
        LinearRow row;
        row.family = ConstraintFamily::Thermal;
        row.t = t;
        row.c = c;
        row.element = br.id;
        const double shift = snap.shift_offset[static_cast<Eigen::Index>(e)];
        row.lo = -limit - shift;
        row.hi = limit - shift;
        row.terms.emplace_back(prob.layout.theta(t, br.from_bus, c), br.susceptance);
        row.terms.emplace_back(prob.layout.theta(t, br.to_bus, c), -br.susceptance);
        add_row(std::move(row));
      }

      // dispatch capacity
      for (Id gid : prob.layout.gens(t, c)) {
        const Generator& g = *grid.generator(gid);
        LinearRow row;
        row.family = ConstraintFamily::Capacity;
        row.t = t;
        row.c = c;
        row.element = gid;
        row.lo = g.p_min / base;
        row.hi = g.p_max / base;
        row.terms.emplace_back(prob.layout.p(t, gid, c), 1.0);
        add_row(std::move(row));
      }
    }

    // reserve variable bounds
    for (Id gid : prob.layout.gens(t)) {
      const Generator& g = *grid.generator(gid);
      auto bound_row = [&](int col, double cap) {
        LinearRow row;
        row.family = ConstraintFamily::ReserveBound;
        row.t = t;
        row.element = gid;
        row.lo = 0.0;
        row.hi = std::isfinite(cap) ? cap / base : kInf;
        row.terms.emplace_back(col, 1.0);
        add_row(std::move(row));
      };
      bound_row(prob.layout.r_up(t, gid), g.r_max);
      bound_row(prob.layout.r_down(t, gid), g.r_min);
      bound_row(prob.layout.w_up(t, gid), g.w_max);
      bound_row(prob.layout.w_down(t, gid), g.w_min);
    }

    // base-case ramp linking; the horizon start ramps from the constant
    // initial dispatch under the physical per-period limits
    for (Id gid : prob.layout.gens(t)) {
      const Generator& g = *grid.generator(gid);
      if (t == 0) {
        if (!std::isfinite(g.w_max) && !std::isfinite(g.w_min)) continue;
        const double p0 = prob.initial_dispatch_pu.at(gid);
        LinearRow row;
        row.family = ConstraintFamily::RampLink;
        row.t = t;
        row.element = gid;
        row.lo = std::isfinite(g.w_min) ? p0 - g.w_min / base : -kInf;
        row.hi = std::isfinite(g.w_max) ? p0 + g.w_max / base : kInf;
        row.terms.emplace_back(prob.layout.p(0, gid, 0), 1.0);
        add_row(std::move(row));
      } else if (prob.layout.has_p(t - 1, gid, 0)) {
        LinearRow up;
        up.family = ConstraintFamily::RampLink;
        up.t = t;
        up.element = gid;
        up.hi = 0.0;
        up.terms.emplace_back(prob.layout.p(t, gid, 0), 1.0);
        up.terms.emplace_back(prob.layout.p(t - 1, gid, 0), -1.0);
        up.terms.emplace_back(prob.layout.w_up(t - 1, gid), -1.0);
        add_row(std::move(up));

        LinearRow down;
        down.family = ConstraintFamily::RampLink;
        down.t = t;
        down.element = gid;
        down.hi = 0.0;
        down.terms.emplace_back(prob.layout.p(t - 1, gid, 0), 1.0);
        down.terms.emplace_back(prob.layout.p(t, gid, 0), -1.0);
        down.terms.emplace_back(prob.layout.w_down(t - 1, gid), -1.0);
        add_row(std::move(down));
      }
    }

    // contingency reserve linking and transition bounds
    for (int c = 1; c < prob.layout.cases(t); ++c) {
      for (Id gid : prob.layout.gens(t, c)) {
        if (!prob.layout.has_p(t, gid, 0)) continue;
        const Generator& g = *grid.generator(gid);
        const int pc = prob.layout.p(t, gid, c);
        const int p0col = prob.layout.p(t, gid, 0);

        LinearRow up;
        up.family = ConstraintFamily::ContingencyLink;
        up.t = t;
        up.c = c;
        up.element = gid;
        up.hi = 0.0;
        up.terms.emplace_back(pc, 1.0);
        up.terms.emplace_back(p0col, -1.0);
        up.terms.emplace_back(prob.layout.r_up(t, gid), -1.0);
        add_row(std::move(up));

        LinearRow down;
        down.family = ConstraintFamily::ContingencyLink;
        down.t = t;
        down.c = c;
        down.element = gid;
        down.hi = 0.0;
        down.terms.emplace_back(p0col, 1.0);
        down.terms.emplace_back(pc, -1.0);
        down.terms.emplace_back(prob.layout.r_down(t, gid), -1.0);
        add_row(std::move(down));

        if (std::isfinite(g.delta_min) || std::isfinite(g.delta_max)) {
          LinearRow tr;
          tr.family = ConstraintFamily::Transition;
          tr.t = t;
          tr.c = c;
          tr.element = gid;
          tr.lo = std::isfinite(g.delta_min) ? -g.delta_min / base : -kInf;
          tr.hi = std::isfinite(g.delta_max) ? g.delta_max / base : kInf;
          tr.terms.emplace_back(pc, 1.0);
          tr.terms.emplace_back(p0col, -1.0);
          add_row(std::move(tr));
        }
      }
    }
  }

  return prob;
}

// ---------------------------------------------------------------------------
// Objective and feasibility checking

double objective_value(const ScopfProblem& problem, const Eigen::VectorXd& point) {
  double obj = problem.constant + problem.linear.dot(point);
  obj += point.cwiseProduct(problem.quad_diag).dot(point);
  for (const auto& wt : problem.wear) {
    const double prev = wt.col_prev >= 0 ? point[wt.col_prev] : wt.prev_const;
    const double diff = point[wt.col_now] - prev;
    obj += wt.kappa * diff * diff;
  }
  return obj;
}

double SolutionCheckReport::max_violation() const {
  double worst = 0.0;
  for (const auto& [f, v] : worst_violation) worst = std::max(worst, v);
  return worst;
}

SolutionCheckReport check_solution(const ScopfProblem& problem, const Eigen::VectorXd& point,
                                   double tol_mw) {
  if (point.size() != problem.layout.total())
    throw std::invalid_argument("point dimension does not match the variable layout");
  SolutionCheckReport report;
  for (const auto& row : problem.rows) {
    double ax = 0.0;
    for (const auto& [col, coef] : row.terms) ax += coef * point[col];
    double viol = 0.0;
    if (std::isfinite(row.lo)) viol = std::max(viol, row.lo - ax);
    if (std::isfinite(row.hi)) viol = std::max(viol, ax - row.hi);
    // angle rows are reported in radians, power rows in MW
    if (row.family != ConstraintFamily::ReferenceAngle) viol *= problem.base_mva;
    auto& worst = report.worst_violation[row.family];
    worst = std::max(worst, viol);
  }
  report.objective = objective_value(problem, point);
  report.feasible = report.max_violation() <= tol_mw;
  return report;
}

std::optional<Eigen::VectorXd> polish_solution(const ScopfProblem& problem,
                                               const Eigen::VectorXd& point,
                                               double active_tol_pu) {
  const int n = problem.layout.total();
  if (point.size() != n) return std::nullopt;

  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd grad0 = problem.linear;
  for (int j = 0; j < n; ++j) hess(j, j) += 2.0 * problem.quad_diag[j];
  for (const auto& wt : problem.wear) {
    hess(wt.col_now, wt.col_now) += 2.0 * wt.kappa;
    if (wt.col_prev >= 0) {
      hess(wt.col_prev, wt.col_prev) += 2.0 * wt.kappa;
      hess(wt.col_now, wt.col_prev) -= 2.0 * wt.kappa;
      hess(wt.col_prev, wt.col_now) -= 2.0 * wt.kappa;
    } else {
      grad0[wt.col_now] -= 2.0 * wt.kappa * wt.prev_const;
    }
  }

  // active rows: equalities plus inequalities at (or beyond) their bound;
  // sign > 0 marks an upper bound, sign < 0 a lower bound, 0 an equality
  struct ActiveRow {
    const LinearRow* row;
    double rhs;
    int sign;
  };
  std::vector<ActiveRow> active;
  for (const auto& row : problem.rows) {
    double ax = 0.0;
    for (const auto& [col, coef] : row.terms) ax += coef * point[col];
    if (row.lo == row.hi) {
      active.push_back({&row, row.lo, 0});
    } else if (std::isfinite(row.hi) && ax >= row.hi - active_tol_pu * (1.0 + std::abs(row.hi))) {
      active.push_back({&row, row.hi, +1});
    } else if (std::isfinite(row.lo) && ax <= row.lo + active_tol_pu * (1.0 + std::abs(row.lo))) {
      active.push_back({&row, row.lo, -1});
    }
  }

  // warm-started single-exchange active-set refinement: per round, solve
  // the equality-constrained KKT system, then either drop the worst
  // wrong-signed multiplier or add the most violated row; a feasible point
  // with correctly signed multipliers is optimal for the convex QP
  for (int round = 0; round < 200; ++round) {
    const int ma = static_cast<int>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + ma, n + ma);
    Eigen::VectorXd rhs(n + ma);
    kkt.topLeftCorner(n, n) = hess;
    rhs.head(n) = -grad0;
    for (int i = 0; i < ma; ++i) {
      for (const auto& [col, coef] : active[static_cast<size_t>(i)].row->terms) {
        kkt(col, n + i) = coef;
        kkt(n + i, col) = coef;
      }
      rhs[n + i] = active[static_cast<size_t>(i)].rhs;
    }

    // fast path first; fall back to the rank-revealing solve when the
    // working set leaves the system singular
    Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
    double solve_res = (kkt * sol - rhs).norm();
    if (!(solve_res <= 1e-9 * (1.0 + rhs.norm()))) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      lu.setThreshold(1e-10);
      sol = lu.solve(rhs);
      solve_res = (kkt * sol - rhs).norm();
      if (!(solve_res <= 1e-8 * (1.0 + rhs.norm()))) return std::nullopt;
    }
    const Eigen::VectorXd refined = sol.head(n);

    int worst_drop = -1;
    double worst_sign = 1e-9;
    for (int i = 0; i < ma; ++i) {
      const double nu = sol[n + i];
      const int sign = active[static_cast<size_t>(i)].sign;
      const double wrong = sign > 0 ? -nu : (sign < 0 ? nu : 0.0);
      if (wrong > worst_sign) {
        worst_sign = wrong;
        worst_drop = i;
      }
    }
    if (worst_drop >= 0) {
      active.erase(active.begin() + worst_drop);
      continue;
    }

    std::set<const LinearRow*> in_set;
    for (const auto& ar : active) in_set.insert(ar.row);
    const LinearRow* worst_row = nullptr;
    double worst_viol = 1e-9;
    int worst_side = 0;
    for (const auto& row : problem.rows) {
      if (row.lo == row.hi || in_set.count(&row)) continue;
      double ax = 0.0;
      for (const auto& [col, coef] : row.terms) ax += coef * refined[col];
      if (std::isfinite(row.hi)) {
        const double v = (ax - row.hi) / (1.0 + std::abs(row.hi));
        if (v > worst_viol) {
          worst_viol = v;
          worst_row = &row;
          worst_side = +1;
        }
      }
      if (std::isfinite(row.lo)) {
        const double v = (row.lo - ax) / (1.0 + std::abs(row.lo));
        if (v > worst_viol) {
          worst_viol = v;
          worst_row = &row;
          worst_side = -1;
        }
      }
    }
    if (worst_row != nullptr) {
      active.push_back({worst_row, worst_side > 0 ? worst_row->hi : worst_row->lo, worst_side});
      continue;
    }

    const SolutionCheckReport check = check_solution(problem, refined, 1e-6 * problem.base_mva);
    if (!check.feasible) return std::nullopt;
    return refined;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Conic encoding of the quadratic program

namespace {

// s >= q^2 for affine q encoded as the dim-3 second-order cone
//   ((s+1)/2, (s-1)/2, q).
void append_epigraph_cone(std::vector<Eigen::Triplet<double>>& trip, std::vector<double>& b,
                          int row0, int s_col,
                          const std::vector<std::pair<int, double>>& q_terms, double q_const) {
  trip.emplace_back(row0, s_col, -0.5);
  b.push_back(0.5);
  trip.emplace_back(row0 + 1, s_col, -0.5);
  b.push_back(-0.5);
  for (const auto& [col, coef] : q_terms) trip.emplace_back(row0 + 2, col, -coef);
  b.push_back(q_const);
}

}  // namespace

QpEncoding to_qp(const ScopfProblem& problem) {
  const int n_base = problem.layout.total();
  int n = n_base;
  std::vector<int> quad_epi(static_cast<size_t>(n_base), -1);
  for (int j = 0; j < n_base; ++j) {
    if (problem.quad_diag[j] > 0) quad_epi[static_cast<size_t>(j)] = n++;
  }
  std::vector<int> wear_epi;
  for (size_t k = 0; k < problem.wear.size(); ++k) wear_epi.push_back(n++);

  QpEncoding enc;
  enc.n_base = n_base;
  ConicProgram& prog = enc.program;
  prog.n = n;
  prog.c = Eigen::VectorXd::Zero(n);
  prog.c.head(n_base) = problem.linear;
  prog.objective_constant = problem.constant;
  for (int j = 0; j < n_base; ++j) {
    if (quad_epi[static_cast<size_t>(j)] >= 0)
      prog.c[quad_epi[static_cast<size_t>(j)]] = problem.quad_diag[j];
  }
  for (size_t k = 0; k < problem.wear.size(); ++k)
    prog.c[wear_epi[k]] = problem.wear[k].kappa;

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> b;
  int row = 0;
  int zero_rows = 0;

  // equality rows first (zero cone)
  for (const auto& lr : problem.rows) {
    if (lr.lo == lr.hi) {
      for (const auto& [col, coef] : lr.terms) trip.emplace_back(row, col, coef);
      b.push_back(lr.lo);
      ++row;
      ++zero_rows;
    }
  }
  // inequality rows (nonneg cone): a'x <= hi and -a'x <= -lo
  int nonneg_rows = 0;
  for (const auto& lr : problem.rows) {
    if (lr.lo == lr.hi) continue;
    if (std::isfinite(lr.hi)) {
      for (const auto& [col, coef] : lr.terms) trip.emplace_back(row, col, coef);
      b.push_back(lr.hi);
      ++row;
      ++nonneg_rows;
    }
    if (std::isfinite(lr.lo)) {
      for (const auto& [col, coef] : lr.terms) trip.emplace_back(row, col, -coef);
      b.push_back(-lr.lo);
      ++row;
      ++nonneg_rows;
    }
  }
  if (zero_rows > 0) prog.cones.push_back({ConeKind::Zero, zero_rows});
  if (nonneg_rows > 0) prog.cones.push_back({ConeKind::Nonneg, nonneg_rows});

  for (int j = 0; j < n_base; ++j) {
    const int s_col = quad_epi[static_cast<size_t>(j)];
    if (s_col < 0) continue;
    append_epigraph_cone(trip, b, row, s_col, {{j, 1.0}}, 0.0);
    prog.cones.push_back({ConeKind::Soc, 3});
    row += 3;
  }
  for (size_t k = 0; k < problem.wear.size(); ++k) {
    const WearTerm& wt = problem.wear[k];
    std::vector<std::pair<int, double>> q{{wt.col_now, 1.0}};
    double q_const = 0.0;
    if (wt.col_prev >= 0)
      q.emplace_back(wt.col_prev, -1.0);
    else
      q_const = -wt.prev_const;
    append_epigraph_cone(trip, b, row, wear_epi[k], q, q_const);
    prog.cones.push_back({ConeKind::Soc, 3});
    row += 3;
  }

  prog.m = row;
  prog.A.resize(prog.m, prog.n);
  prog.A.setFromTriplets(trip.begin(), trip.end());
  prog.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  prog.validate();
  return enc;
}

}  // namespace cascopf
