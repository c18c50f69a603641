#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "cascopf/conic.hpp"
#include "cascopf/scopf.hpp"

namespace cascopf {

struct LiftOptions {
  // Moment blocks are attached to consecutive base-case pairs; setting this
  // extends them to every contingency case as well.
  bool moment_blocks_all_cases = false;
  double rank_tol = 1e-5;
};

// 3x3 moment block [[1, p_prev, p_now], [p_prev, O_prev, h], [p_now, h, O_now]]
// expressed through the lifted program's columns.
struct MomentBlockRef {
  int t = 0;  // pair (t-1, t)
  Id gen = 0;
  int c = 0;
  int col_p_prev = -1;
  int col_p_now = -1;
  int col_o_prev = -1;
  int col_o_now = -1;
  int col_h = -1;
};

struct LiftedProblem {
  ScopfProblem base;
  int n_base = 0;
  int n_total = 0;
  std::map<int, int> o_col;  // base dispatch column -> O column
  std::map<std::tuple<int, Id, int>, int> h_col;  // (t, gen, c) -> h column
  std::vector<MomentBlockRef> blocks;
  ConicProgram program;
  LiftOptions options;
};

struct RankResidual {
  double residual = 0.0;  // lambda_2 / lambda_1, eigenvalues clamped at zero
  bool degenerate = false;
};

struct RelaxationResult {
  double relaxed_objective = 0.0;  // f_r, $
  std::map<std::tuple<int, Id, int>, double> dispatch_mw;  // (t, gen, c)
  Eigen::VectorXd recovered_point;  // base-layout variables
  std::vector<double> block_residuals;
  double max_residual = 0.0;
  bool exact = false;
  std::optional<double> gap_percent;        // 100 (f_opt - f_r) / max(|f_opt|, eps), clamped >= 0
  std::optional<double> gap_percent_paper;  // 100 (f_r - f_opt) / f_r
  SolutionCheckReport recovered_check;
  bool recovered_feasible = false;
};

LiftedProblem lift_to_conic(const ScopfProblem& problem, const LiftOptions& options = {});

RankResidual rank1_residual(const Eigen::Matrix3d& block);

RelaxationResult recover_and_gap(const LiftedProblem& lifted, const SolverResult& solved,
                                 std::optional<double> f_opt = std::nullopt,
                                 double check_tol_mw = 1e-2);

}  // namespace cascopf
