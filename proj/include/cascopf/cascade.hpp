#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cascopf/relaxation.hpp"
#include "cascopf/schedule.hpp"
#include "cascopf/scopf.hpp"

namespace cascopf {

enum class RelaxMode { SdpRelaxation, DirectQp, Both };
enum class StepStatus { Feasible, Infeasible, Error };

const char* to_string(RelaxMode m);
const char* to_string(StepStatus s);

struct CascadeConfig {
  double derate_fraction = 0.7;  // overrides the schedule's fraction when set >= 0
  RelaxMode relax_mode = RelaxMode::SdpRelaxation;
  bool stop_on_infeasible = false;
  bool prune_dead_islands = true;
  int periods = 1;  // horizon per step
  bool include_reserve_pricing = true;
  SolverSettings solver;
  double check_tol_mw = 1e-2;
  double rank_tol = 1e-5;
  bool report_premitigation = true;  // also solve each step without derating
  bool keep_problems = false;        // retain built problems (tests, oracles)
  std::string case_label;
  std::string schedule_label;
};

struct BranchFlow {
  Id branch = 0;
  double flow_mw = 0.0;
  double limit_mw = 0.0;
  double effective_limit_mw = 0.0;
};

struct StepReport {
  int step = 0;
  int lost_buses = 0;  // cumulative batch counts
  int lost_branches = 0;
  int lost_generators = 0;
  StepStatus status = StepStatus::Error;
  std::optional<double> operation_cost;  // $, absent when not feasible
  double shed_load_mw = 0.0;
  std::vector<BranchFlow> flows;      // base case, last period
  std::vector<BranchFlow> flows_pre;  // same step solved without derating
  std::optional<double> premitigation_cost;
  std::optional<double> rank1_residual;
  std::optional<double> gap_percent;
  double solve_seconds = 0.0;
  std::string diagnostics;
};

struct CascadeReport {
  std::string case_label;
  std::string schedule_label;
  CascadeConfig config;
  std::vector<StepReport> steps;
  std::vector<std::shared_ptr<const ScopfProblem>> step_problems;  // when keep_problems
};

CascadeReport run_cascade(const GridCase& grid, const HurricaneSchedule& schedule,
                          const CascadeConfig& config = {});

struct SweepEntry {
  double fraction = 0.0;
  StepStatus status = StepStatus::Error;
  std::optional<double> cost;
};

struct SweepReport {
  int step = 0;
  std::vector<SweepEntry> entries;
  std::optional<size_t> frontier_index;  // smallest feasible fraction in the list
};

// Solves one step's problem at each fraction (strictly descending), warm
// starting successive solves.
SweepReport derate_sweep(const GridCase& grid, const HurricaneSchedule& schedule, int step,
                         const std::vector<double>& fractions, const CascadeConfig& config = {});

}  // namespace cascopf
