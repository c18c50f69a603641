#include "cascopf/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cascopf/log.hpp"

namespace cascopf {

const char* to_string(RelaxMode m) {
  switch (m) {
    case RelaxMode::SdpRelaxation: return "sdp";
    case RelaxMode::DirectQp: return "qp";
    case RelaxMode::Both: return "both";
  }
  return "unknown";
}

const char* to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Feasible: return "feasible";
    case StepStatus::Infeasible: return "infeasible";
    case StepStatus::Error: return "error";
  }
  return "unknown";
}

namespace {

struct StepSolve {
  StepStatus status = StepStatus::Error;
  std::optional<double> cost;
  Eigen::VectorXd point;  // base-layout variables when feasible
  std::optional<double> rank1;
  std::optional<double> gap;
  double seconds = 0.0;
  std::string diagnostics;
};

StepStatus status_from(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return StepStatus::Feasible;
    case SolveStatus::PrimalInfeasible: return StepStatus::Infeasible;
    default: return StepStatus::Error;
  }
}

// Solve one built problem under the configured relaxation mode.
StepSolve solve_problem(const ScopfProblem& prob, const CascadeConfig& config) {
  StepSolve out;
  std::optional<double> f_opt;
  Eigen::VectorXd qp_point;

  if (config.relax_mode == RelaxMode::DirectQp || config.relax_mode == RelaxMode::Both) {
    const QpEncoding enc = to_qp(prob);
    const SolverResult res = solve(enc.program, config.solver);
    out.seconds += res.wall_seconds;
    out.status = status_from(res.status);
    if (res.status == SolveStatus::Optimal) {
      qp_point = res.x.head(enc.n_base);
      if (const auto polished = polish_solution(prob, qp_point)) qp_point = *polished;
      f_opt = objective_value(prob, qp_point);
      out.cost = f_opt;
      out.point = qp_point;
    } else {
      out.diagnostics = std::string("qp solve: ") + to_string(res.status);
      return out;
    }
  }

  if (config.relax_mode == RelaxMode::SdpRelaxation || config.relax_mode == RelaxMode::Both) {
    LiftOptions opts;
    opts.rank_tol = config.rank_tol;
    const LiftedProblem lifted = lift_to_conic(prob, opts);
    const SolverResult res = solve(lifted.program, config.solver);
    out.seconds += res.wall_seconds;
    if (res.status == SolveStatus::Optimal) {
      const RelaxationResult rel = recover_and_gap(lifted, res, f_opt, prob.check_tol_mw);
      out.rank1 = rel.max_residual;
      out.gap = rel.gap_percent;
      if (!rel.recovered_feasible)
        out.diagnostics = "recovered relaxation point infeasible beyond tolerance";
      if (config.relax_mode == RelaxMode::SdpRelaxation) {
        out.status = StepStatus::Feasible;
        out.cost = rel.relaxed_objective;
        out.point = rel.recovered_point;
      }
    } else {
      const StepStatus sdp_status = status_from(res.status);
      if (config.relax_mode == RelaxMode::SdpRelaxation) {
        out.status = sdp_status;
        if (sdp_status == StepStatus::Error)
          out.diagnostics = std::string("sdp solve: ") + to_string(res.status);
      } else {
        out.diagnostics = std::string("sdp solve: ") + to_string(res.status);
      }
      return out;
    }
  }
  return out;
}

std::vector<BranchFlow> extract_flows(const GridCase& grid, const ScopfProblem& prob,
                                      const Eigen::VectorXd& point) {
  std::vector<BranchFlow> flows;
  const int t = prob.periods - 1;
  const auto& snap = prob.snapshots[static_cast<size_t>(t)][0];
  for (size_t e = 0; e < snap.branches.size(); ++e) {
    const Branch& br = *grid.branch(snap.branches[e]);
    const double flow_pu =
        br.susceptance * (point[prob.layout.theta(t, br.from_bus, 0)] -
                          point[prob.layout.theta(t, br.to_bus, 0)]) +
        snap.shift_offset[static_cast<Eigen::Index>(e)];
    BranchFlow bf;
    bf.branch = br.id;
    bf.flow_mw = flow_pu * prob.base_mva;
    bf.limit_mw = br.flow_limit;
    bf.effective_limit_mw = snap.effective_limit[static_cast<Eigen::Index>(e)] * prob.base_mva;
    flows.push_back(bf);
  }
  return flows;
}

// Outages extended by dead-island pruning, plus the shed load.
struct AppliedStep {
  StepResolution resolution;
  double shed_mw = 0.0;
};

AppliedStep apply_step(const GridCase& grid, const StepResolution& res, bool prune) {
  AppliedStep out;
  out.resolution = res;
  if (!prune) return out;
  const NetworkSnapshot snap = build_snapshot(grid, res.applied_outages, res.derate_targets, 0);
  const PruneResult pruned = prune_dead_islands(grid, snap);
  out.shed_mw = pruned.shed_load_mw;
  if (!pruned.pruned.empty()) {
    out.resolution.applied_outages = OutageSet::unite(res.applied_outages, pruned.pruned);
    // derate targets must be surviving branches
    for (auto it = out.resolution.derate_targets.begin();
         it != out.resolution.derate_targets.end();) {
      if (out.resolution.applied_outages.branches.count(it->first))
        it = out.resolution.derate_targets.erase(it);
      else
        ++it;
    }
  }
  return out;
}

}  // namespace

CascadeReport run_cascade(const GridCase& grid, const HurricaneSchedule& schedule,
                          const CascadeConfig& config) {
  if (!(config.derate_fraction > 0.0) || config.derate_fraction > 1.0)
    throw std::invalid_argument("derate_fraction must be in (0, 1]");

  CascadeReport report;
  report.case_label = config.case_label;
  report.schedule_label = config.schedule_label;
  report.config = config;

  std::map<Id, double> carry_p0;  // MW, last feasible base-case dispatch
  for (const auto& g : grid.generators) carry_p0[g.id] = g.p0;

  const int nsteps = static_cast<int>(schedule.batches.size());
  for (int k = 1; k <= nsteps; ++k) {
    StepResolution res = resolve_step(schedule, grid, k);
    for (auto& [id, frac] : res.derate_targets) frac = config.derate_fraction;

    StepReport sr;
    sr.step = k;
    sr.lost_buses = static_cast<int>(res.applied_outages.buses.size());
    sr.lost_branches = static_cast<int>(res.applied_outages.branches.size());
    sr.lost_generators = static_cast<int>(res.applied_outages.generators.size());

    try {
      const AppliedStep applied = apply_step(grid, res, config.prune_dead_islands);
      sr.shed_load_mw = applied.shed_mw;

      BuildConfig bc;
      bc.periods = config.periods;
      bc.include_reserve_pricing = config.include_reserve_pricing;
      bc.granularity = schedule.granularity;
      bc.check_tol_mw = config.check_tol_mw;
      bc.initial_dispatch_mw = carry_p0;
      bc.step_index = k;
      const ScopfProblem prob = build_scopf(grid, applied.resolution, bc);
      if (config.keep_problems)
        report.step_problems.push_back(std::make_shared<ScopfProblem>(prob));

      const StepSolve sol = solve_problem(prob, config);
      sr.status = sol.status;
      sr.operation_cost = sol.cost;
      sr.rank1_residual = sol.rank1;
      sr.gap_percent = sol.gap;
      sr.solve_seconds = sol.seconds;
      sr.diagnostics = sol.diagnostics;

      if (sol.status == StepStatus::Feasible) {
        sr.flows = extract_flows(grid, prob, sol.point);
        // base-case dispatch of the last period becomes the next basecase
        const int t_last = prob.periods - 1;
        std::map<Id, double> next_p0;
        for (Id gid : prob.layout.gens(t_last))
          next_p0[gid] = sol.point[prob.layout.p(t_last, gid, 0)] * prob.base_mva;
        carry_p0 = std::move(next_p0);
      }

      // the same step without derating, for mitigation reporting
      if (config.report_premitigation) {
        if (res.derate_targets.empty() || config.derate_fraction >= 1.0) {
          sr.flows_pre = sr.flows;
          sr.premitigation_cost = sr.operation_cost;
        } else {
          StepResolution undr = applied.resolution;
          for (auto& [id, frac] : undr.derate_targets) frac = 1.0;
          BuildConfig bc_pre = bc;
          const ScopfProblem prob_pre = build_scopf(grid, undr, bc_pre);
          const StepSolve sol_pre = solve_problem(prob_pre, config);
          sr.solve_seconds += sol_pre.seconds;
          if (sol_pre.status == StepStatus::Feasible) {
            sr.flows_pre = extract_flows(grid, prob_pre, sol_pre.point);
            sr.premitigation_cost = sol_pre.cost;
          }
        }
      }
    } catch (const std::exception& e) {
      sr.status = StepStatus::Error;
      sr.diagnostics = e.what();
    }

    const std::string cost_note =
        sr.operation_cost ? " cost " + std::to_string(*sr.operation_cost) : std::string();
    log::info("step %d: %s%s", k, to_string(sr.status), cost_note.c_str());
    report.steps.push_back(std::move(sr));
    if (report.steps.back().status != StepStatus::Feasible && config.stop_on_infeasible) break;
  }
  return report;
}

SweepReport derate_sweep(const GridCase& grid, const HurricaneSchedule& schedule, int step,
                         const std::vector<double>& fractions, const CascadeConfig& config) {
  for (size_t i = 0; i + 1 < fractions.size(); ++i) {
    if (!(fractions[i] > fractions[i + 1]))
      throw std::invalid_argument("sweep fractions must be strictly descending");
  }
  for (double f : fractions) {
    if (!(f > 0.0) || f > 1.0) throw std::invalid_argument("sweep fractions must lie in (0, 1]");
  }

  SweepReport report;
  report.step = step;

  StepResolution res = resolve_step(schedule, grid, step);
  const AppliedStep applied = apply_step(grid, res, config.prune_dead_islands);

  BuildConfig bc;
  bc.periods = config.periods;
  bc.include_reserve_pricing = config.include_reserve_pricing;
  bc.granularity = schedule.granularity;
  bc.check_tol_mw = config.check_tol_mw;
  bc.step_index = step;

  WarmStart warm;
  bool have_warm = false;
  for (double frac : fractions) {
    SweepEntry entry;
    entry.fraction = frac;
    try {
      StepResolution r = applied.resolution;
      for (auto& [id, f] : r.derate_targets) f = frac;
      const ScopfProblem prob = build_scopf(grid, r, bc);
      const QpEncoding enc = to_qp(prob);
      const SolverResult sres = solve(enc.program, config.solver, have_warm ? &warm : nullptr);
      entry.status = status_from(sres.status);
      if (sres.status == SolveStatus::Optimal) {
        Eigen::VectorXd pt = sres.x.head(enc.n_base);
        if (const auto polished = polish_solution(prob, pt)) pt = *polished;
        entry.cost = objective_value(prob, pt);
        warm.x = sres.x;
        warm.y = sres.y;
        warm.s = sres.s;
        have_warm = true;
      }
    } catch (const std::exception& e) {
      entry.status = StepStatus::Error;
      log::info("sweep fraction %.3f failed: %s", frac, e.what());
    }
    report.entries.push_back(entry);
  }

  // the smallest feasible fraction in the list
  for (size_t i = 0; i < report.entries.size(); ++i) {
    if (report.entries[i].status != StepStatus::Feasible) continue;
    if (!report.frontier_index ||
        report.entries[i].fraction < report.entries[*report.frontier_index].fraction)
      report.frontier_index = i;
  }
  return report;
}

}  // namespace cascopf
