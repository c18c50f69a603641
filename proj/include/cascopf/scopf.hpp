#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascopf/conic.hpp"
#include "cascopf/grid_model.hpp"
#include "cascopf/schedule.hpp"

namespace cascopf {

enum class ConstraintFamily {
  Balance,          // nodal power balance, per (t, c, bus)
  ReferenceAngle,   // one fixed angle per island
  Thermal,          // two-sided branch flow limits
  Capacity,         // generator dispatch bounds
  ReserveBound,     // 0 <= r/w <= cap
  RampLink,         // base-case inter-period ramping
  ContingencyLink,  // |p_tgc - p_tg0| covered by contingency reserves
  Transition        // base-to-contingency transition bounds
};

const char* to_string(ConstraintFamily f);

// lo <= terms . x <= hi (lo == hi for equalities), coefficients per-unit
struct LinearRow {
  ConstraintFamily family;
  double lo = -kInf;
  double hi = kInf;
  std::vector<std::pair<int, double>> terms;
  int t = 0;
  int c = 0;
  Id element = 0;
};

// kappa * (x[col_now] - prev)^2 where prev is either the variable
// x[col_prev] or, at the horizon start, the constant prev_const.
struct WearTerm {
  int col_now = -1;
  int col_prev = -1;
  double prev_const = 0.0;
  double kappa = 0.0;  // per-unit coefficient
};

// Deterministic index map: t-major, then contingency, then element id.
// Within each (t, c) block dispatch variables precede bus angles; the four
// reserve groups follow all (t, c) blocks, per period.
class VariableLayout {
 public:
  VariableLayout() = default;
  VariableLayout(int periods, std::vector<std::vector<std::vector<Id>>> gens_tc,
                 std::vector<std::vector<std::vector<Id>>> buses_tc,
                 std::vector<std::vector<Id>> gens_t);

  int total() const { return total_; }
  int periods() const { return periods_; }
  int cases(int t) const { return static_cast<int>(gens_tc_[static_cast<size_t>(t)].size()); }

  int p(int t, Id gen, int c) const;
  int theta(int t, Id bus, int c) const;
  int r_up(int t, Id gen) const;
  int r_down(int t, Id gen) const;
  int w_up(int t, Id gen) const;
  int w_down(int t, Id gen) const;

  bool has_p(int t, Id gen, int c) const;
  bool has_theta(int t, Id bus, int c) const;

  const std::vector<Id>& gens(int t, int c) const {
    return gens_tc_[static_cast<size_t>(t)][static_cast<size_t>(c)];
  }
  const std::vector<Id>& buses(int t, int c) const {
    return buses_tc_[static_cast<size_t>(t)][static_cast<size_t>(c)];
  }
  const std::vector<Id>& gens(int t) const { return gens_t_[static_cast<size_t>(t)]; }

 private:
  int rank_of(const std::vector<Id>& ids, Id id) const;

  int periods_ = 0;
  int total_ = 0;
  std::vector<std::vector<std::vector<Id>>> gens_tc_;   // [t][c] sorted
  std::vector<std::vector<std::vector<Id>>> buses_tc_;  // [t][c] sorted
  std::vector<std::vector<Id>> gens_t_;                 // [t] sorted
  std::vector<std::vector<int>> block_offset_;          // [t][c]
  std::vector<int> reserve_offset_;                     // [t]
};

struct BuildConfig {
  int periods = 0;  // 0 = use the case's period_count
  bool include_reserve_pricing = true;
  Granularity granularity = Granularity::PerElement;  // provenance
  double check_tol_mw = 1e-2;
  std::map<Id, double> initial_dispatch_mw;  // overrides generator p0 when set
  int step_index = 0;                        // provenance
};

struct ScopfProblem {
  int periods = 0;
  double base_mva = 100.0;
  double check_tol_mw = 1e-2;  // default feasibility tolerance for checks
  VariableLayout layout;
  std::vector<LinearRow> rows;

  // objective: x'diag(quad)x + linear'x + constant + wear terms, in $
  Eigen::VectorXd quad_diag;
  Eigen::VectorXd linear;
  double constant = 0.0;
  std::vector<WearTerm> wear;

  std::map<Id, double> initial_dispatch_pu;
  std::vector<std::vector<NetworkSnapshot>> snapshots;  // [t][c]
  std::vector<ContingencyCase> contingencies;           // c = 1..K
  int step_index = 0;
  DeratingSet derates_applied;
  std::map<Id, double> generator_pmin_pu;  // for the lifted box cuts
  std::map<Id, double> generator_pmax_pu;
};

struct SolutionCheckReport {
  std::map<ConstraintFamily, double> worst_violation;  // MW (rad for angles)
  double objective = 0.0;                              // $
  bool feasible = false;

  double worst(ConstraintFamily f) const {
    auto it = worst_violation.find(f);
    return it == worst_violation.end() ? 0.0 : it->second;
  }
  double max_violation() const;
};

// Mapping from the conic program back to the problem's variables.
struct QpEncoding {
  ConicProgram program;
  int n_base = 0;  // leading columns are the layout variables
};

ScopfProblem build_scopf(const GridCase& grid, const StepResolution& step,
                         const BuildConfig& config = {});

// Epigraph reformulation of the quadratic objective over second-order
// cones; the conic optimum equals the problem optimum.
QpEncoding to_qp(const ScopfProblem& problem);

SolutionCheckReport check_solution(const ScopfProblem& problem, const Eigen::VectorXd& point,
                                   double tol_mw);

// Exact objective (1a)-(1d) analog at a point, in dollars.
double objective_value(const ScopfProblem& problem, const Eigen::VectorXd& point);

// Active-set refinement of a near-optimal point: solves the KKT system of
// the equality-constrained QP on the detected active rows. Returns the
// refined point when it is feasible and no worse than the input; otherwise
// std::nullopt.
std::optional<Eigen::VectorXd> polish_solution(const ScopfProblem& problem,
                                               const Eigen::VectorXd& point,
                                               double active_tol_pu = 1e-4);

}  // namespace cascopf
