#include "cascopf/relaxation.hpp"

#include <cmath>
#include <stdexcept>

namespace cascopf {

namespace {

// s >= q^2 rows for the dim-3 second-order cone ((s+1)/2, (s-1)/2, q)
void push_epigraph(std::vector<Eigen::Triplet<double>>& trip, std::vector<double>& b, int& row,
                   std::vector<ConeSegment>& cones, int s_col, int q_col) {
  trip.emplace_back(row, s_col, -0.5);
  b.push_back(0.5);
  trip.emplace_back(row + 1, s_col, -0.5);
  b.push_back(-0.5);
  trip.emplace_back(row + 2, q_col, -1.0);
  b.push_back(0.0);
  cones.push_back({ConeKind::Soc, 3});
  row += 3;
}

}  // namespace

LiftedProblem lift_to_conic(const ScopfProblem& problem, const LiftOptions& options) {
  LiftedProblem lifted;
  lifted.base = problem;
  lifted.options = options;
  const int n_base = problem.layout.total();
  lifted.n_base = n_base;

  int n = n_base;
  // one O per dispatch variable, layout order
  const int T = problem.periods;
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < problem.layout.cases(t); ++c) {
      for (Id gid : problem.layout.gens(t, c)) {
        lifted.o_col[problem.layout.p(t, gid, c)] = n++;
      }
    }
  }
  // one h per consecutive pair, base case (optionally every case)
  for (int t = 1; t < T; ++t) {
    const int cmax = options.moment_blocks_all_cases ? problem.layout.cases(t) : 1;
    for (int c = 0; c < cmax; ++c) {
      if (c >= problem.layout.cases(t - 1)) continue;
      for (Id gid : problem.layout.gens(t, c)) {
        if (!problem.layout.has_p(t - 1, gid, c)) continue;
        lifted.h_col[{t, gid, c}] = n++;
      }
    }
  }
  lifted.n_total = n;

  ConicProgram& prog = lifted.program;
  prog.n = n;
  prog.c = Eigen::VectorXd::Zero(n);
  prog.c.head(n_base) = problem.linear;
  prog.objective_constant = problem.constant;

  // quadratic dispatch cost becomes linear in O
  for (const auto& [pcol, ocol] : lifted.o_col) prog.c[ocol] += problem.quad_diag[pcol];

  // wear terms: kappa (O_now + O_prev - 2h) per pair; the horizon start uses
  // the constant anchor, kappa (O - 2 p0 p + p0^2)
  for (const auto& wt : problem.wear) {
    const int o_now = lifted.o_col.at(wt.col_now);
    if (wt.col_prev >= 0) {
      const int o_prev = lifted.o_col.at(wt.col_prev);
      // locate the matching h column
      int h = -1;
      for (const auto& [key, col] : lifted.h_col) {
        // identify by the dispatch columns rather than re-deriving (t, g)
        const auto [t, gid, c] = key;
        if (problem.layout.p(t, gid, c) == wt.col_now &&
            problem.layout.p(t - 1, gid, c) == wt.col_prev) {
          h = col;
          break;
        }
      }
      if (h < 0) throw std::logic_error("wear term without a matching moment pair");
      prog.c[o_now] += wt.kappa;
      prog.c[o_prev] += wt.kappa;
      prog.c[h] += -2.0 * wt.kappa;
    } else {
      prog.c[o_now] += wt.kappa;
      prog.c[wt.col_now] += -2.0 * wt.kappa * wt.prev_const;
      prog.objective_constant += wt.kappa * wt.prev_const * wt.prev_const;
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> b;
  int row = 0;
  int zero_rows = 0;
  int nonneg_rows = 0;

  for (const auto& lr : problem.rows) {
    if (lr.lo == lr.hi) {
      for (const auto& [col, coef] : lr.terms) trip.emplace_back(row, col, coef);
      b.push_back(lr.lo);
      ++row;
      ++zero_rows;
    }
  }
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

  // per-O cuts: O >= 0 and the box cut O + pmin pmax <= (pmin + pmax) p
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < problem.layout.cases(t); ++c) {
      for (Id gid : problem.layout.gens(t, c)) {
        const int pcol = problem.layout.p(t, gid, c);
        const int ocol = lifted.o_col.at(pcol);
        trip.emplace_back(row, ocol, -1.0);  // -O <= 0
        b.push_back(0.0);
        ++row;
        ++nonneg_rows;
        const double pmin = problem.generator_pmin_pu.at(gid);
        const double pmax = problem.generator_pmax_pu.at(gid);
        if (std::isfinite(pmin) && std::isfinite(pmax)) {
          trip.emplace_back(row, ocol, 1.0);
          trip.emplace_back(row, pcol, -(pmin + pmax));
          b.push_back(-pmin * pmax);
          ++row;
          ++nonneg_rows;
        }
      }
    }
  }

  if (zero_rows > 0) prog.cones.push_back({ConeKind::Zero, zero_rows});
  if (nonneg_rows > 0) prog.cones.push_back({ConeKind::Nonneg, nonneg_rows});

  // SOCP cut O >= p^2 for every O
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < problem.layout.cases(t); ++c) {
      for (Id gid : problem.layout.gens(t, c)) {
        const int pcol = problem.layout.p(t, gid, c);
        push_epigraph(trip, b, row, prog.cones, lifted.o_col.at(pcol), pcol);
      }
    }
  }

  // moment blocks: psd3 slack equal to
  //   [[1, p_prev, p_now], [p_prev, O_prev, h], [p_now, h, O_now]]
  const double s2 = std::sqrt(2.0);
  for (const auto& [key, hcol] : lifted.h_col) {
    const auto [t, gid, c] = key;
    MomentBlockRef blk;
    blk.t = t;
    blk.gen = gid;
    blk.c = c;
    blk.col_p_prev = problem.layout.p(t - 1, gid, c);
    blk.col_p_now = problem.layout.p(t, gid, c);
    blk.col_o_prev = lifted.o_col.at(blk.col_p_prev);
    blk.col_o_now = lifted.o_col.at(blk.col_p_now);
    blk.col_h = hcol;

    // vec6 order (m11, m21, m31, m22, m32, m33), off-diagonals scaled
    b.push_back(1.0);  // constant corner
    trip.emplace_back(row + 1, blk.col_p_prev, -s2);
    b.push_back(0.0);
    trip.emplace_back(row + 2, blk.col_p_now, -s2);
    b.push_back(0.0);
    trip.emplace_back(row + 3, blk.col_o_prev, -1.0);
    b.push_back(0.0);
    trip.emplace_back(row + 4, blk.col_h, -s2);
    b.push_back(0.0);
    trip.emplace_back(row + 5, blk.col_o_now, -1.0);
    b.push_back(0.0);
    prog.cones.push_back({ConeKind::Psd3, 6});
    row += 6;
    lifted.blocks.push_back(blk);
  }

  prog.m = row;
  prog.A.resize(prog.m, prog.n);
  prog.A.setFromTriplets(trip.begin(), trip.end());
  prog.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  prog.validate();
  return lifted;
}

RankResidual rank1_residual(const Eigen::Matrix3d& block) {
  Eigen::Vector3d vals;
  Eigen::Matrix3d vecs;
  eig3_sym(block, vals, vecs);
  RankResidual rr;
  const double l1 = std::max(vals[0], 0.0);
  const double l2 = std::max(vals[1], 0.0);
  if (l1 <= 1e-12 * std::max(1.0, block.norm())) {
    rr.residual = 0.0;
    rr.degenerate = true;
    return rr;
  }
  rr.residual = l2 / l1;
  return rr;
}

RelaxationResult recover_and_gap(const LiftedProblem& lifted, const SolverResult& solved,
                                 std::optional<double> f_opt, double check_tol_mw) {
  if (solved.x.size() != lifted.n_total)
    throw std::invalid_argument("solver point does not match the lifted layout");
  RelaxationResult result;
  result.relaxed_objective = solved.objective;
  result.recovered_point = solved.x.head(lifted.n_base);

  const ScopfProblem& base = lifted.base;
  for (int t = 0; t < base.periods; ++t) {
    for (int c = 0; c < base.layout.cases(t); ++c) {
      for (Id gid : base.layout.gens(t, c)) {
        result.dispatch_mw[{t, gid, c}] =
            result.recovered_point[base.layout.p(t, gid, c)] * base.base_mva;
      }
    }
  }

  for (const auto& blk : lifted.blocks) {
    Eigen::Matrix3d m;
    const double pp = solved.x[blk.col_p_prev];
    const double pn = solved.x[blk.col_p_now];
    const double op = solved.x[blk.col_o_prev];
    const double on = solved.x[blk.col_o_now];
    const double h = solved.x[blk.col_h];
    m << 1.0, pp, pn, pp, op, h, pn, h, on;
    result.block_residuals.push_back(rank1_residual(m).residual);
  }
  result.max_residual = 0.0;
  for (double r : result.block_residuals) result.max_residual = std::max(result.max_residual, r);
  result.exact = result.max_residual <= lifted.options.rank_tol;

  result.recovered_check = check_solution(base, result.recovered_point, check_tol_mw);
  result.recovered_feasible = result.recovered_check.feasible;

  if (f_opt.has_value()) {
    const double fr = result.relaxed_objective;
    const double fo = *f_opt;
    const double denom = std::max(std::abs(fo), 1e-12);
    result.gap_percent = std::max(0.0, 100.0 * (fo - fr) / denom);
    if (std::abs(fr) > 1e-12) result.gap_percent_paper = 100.0 * (fr - fo) / fr;
  }
  return result;
}

}  // namespace cascopf
