#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cascopf/scopf.hpp"
#include "support/instances.hpp"
#include "support/lp_oracle.hpp"
#include "support/qp_oracle.hpp"

using namespace cascopf;
using namespace cascopf::testing;

namespace {

GridCase one_bus_case() {
  return parse_case(R"({
    "base_mva": 100, "period_count": 1,
    "buses": [{"id": 1, "demand": 0.0}],
    "branches": [],
    "generators": [{"id": 1, "bus": 1, "p_min": 0, "p_max": 100, "p0": 0,
                    "cost": {"alpha_sqr": 0.01, "alpha_lin": 20, "zeta": 50}}]
  })");
}

// single generator at bus 1 serving demand d at bus 2 over one ample branch
GridCase analytic_two_bus(double demand, double kappa = 0.0) {
  std::ostringstream out;
  out << R"({"base_mva": 100, "period_count": 1,
    "buses": [{"id": 1, "demand": 0.0}, {"id": 2, "demand": )"
      << demand << R"(}],
    "branches": [{"id": 1, "from_bus": 1, "to_bus": 2, "susceptance": 8, "flow_limit": 500}],
    "generators": [{"id": 1, "bus": 1, "p_min": 0, "p_max": 400, "p0": )"
      << demand << R"(, "w_max": 400, "w_min": 400, "r_max": 120, "r_min": 120,
      "cost": {"alpha_sqr": 0.02, "alpha_lin": 30, "zeta": 100, "kappa": )"
      << kappa << R"(, "eta_up": 3, "eta_down": 3, "mu_up": 2, "mu_down": 2}}]})";
  return parse_case(out.str());
}

StepResolution no_contingencies() {
  StepResolution res;
  res.step = 1;
  return res;
}

}  // namespace

TEST_CASE("layout: one bus, one generator, T=1 has six variables") {
  const GridCase grid = one_bus_case();
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  CHECK(prob.layout.total() == 6);  // p, theta, r+, r-, w+, w-
  CHECK(prob.layout.p(0, 1, 0) == 0);
  CHECK(prob.layout.theta(0, 1, 0) == 1);
  CHECK(prob.layout.r_up(0, 1) == 2);
  CHECK(prob.layout.w_down(0, 1) == 5);
}

TEST_CASE("layout determinism and count formula on random instances") {
  std::mt19937 rng(41);
  for (int k = 0; k < 10; ++k) {
    const RandomInstance inst = make_random_instance(rng);
    const ScopfProblem a = build_scopf(inst.grid, inst.step, inst.config);
    const ScopfProblem b = build_scopf(inst.grid, inst.step, inst.config);
    CHECK(a.layout.total() == b.layout.total());
    int expected = 0;
    for (int t = 0; t < a.periods; ++t) {
      for (int c = 0; c < a.layout.cases(t); ++c)
        expected += static_cast<int>(a.layout.gens(t, c).size() + a.layout.buses(t, c).size());
      expected += 4 * static_cast<int>(a.layout.gens(t).size());
    }
    CHECK(a.layout.total() == expected);
    for (int t = 0; t < a.periods; ++t) {
      for (int c = 0; c < a.layout.cases(t); ++c) {
        for (Id gid : a.layout.gens(t, c)) CHECK(a.layout.p(t, gid, c) == b.layout.p(t, gid, c));
      }
    }
  }
}

TEST_CASE("zero demand with free minimum gives only fixed costs") {
  const GridCase grid = one_bus_case();
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  const QpEncoding enc = to_qp(prob);
  const SolverResult res = solve(enc.program);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(50.0).epsilon(1e-6));  // sum of zeta
  CHECK(res.x[prob.layout.p(0, 1, 0)] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("overloaded single corridor is flagged primal infeasible") {
  const GridCase grid = parse_case(R"({
    "base_mva": 100, "period_count": 1,
    "buses": [{"id": 1}, {"id": 2, "demand": 100.0}],
    "branches": [{"id": 1, "from_bus": 1, "to_bus": 2, "susceptance": 10, "flow_limit": 50}],
    "generators": [{"id": 1, "bus": 1, "p_max": 300, "cost": {"alpha_lin": 20}}]
  })");
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  const QpEncoding enc = to_qp(prob);
  const SolverResult res = solve(enc.program);
  CHECK(res.status == SolveStatus::PrimalInfeasible);

  // the independent phase-1 oracle agrees
  CHECK(!scopf_phase1_feasible(prob).feasible);
}

TEST_CASE("analytic two-bus optimum") {
  const double d = 120.0;
  const GridCase grid = analytic_two_bus(d);
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  const QpEncoding enc = to_qp(prob);
  const SolverResult res = solve(enc.program);
  REQUIRE(res.status == SolveStatus::Optimal);

  // the only generator serves d; cost = a d^2 + b d + zeta
  const double expected = 0.02 * d * d + 30.0 * d + 100.0;
  CHECK(res.objective == doctest::Approx(expected).epsilon(1e-5));
  CHECK(res.x[prob.layout.p(0, 1, 0)] * 100.0 == doctest::Approx(d).epsilon(1e-5));

  // the analytic optimum passes check_solution with zero violations
  Eigen::VectorXd point = Eigen::VectorXd::Zero(prob.layout.total());
  point[prob.layout.p(0, 1, 0)] = d / 100.0;
  point[prob.layout.theta(0, 1, 0)] = 0.0;
  point[prob.layout.theta(0, 2, 0)] = -(d / 100.0) / 8.0;
  const SolutionCheckReport check = check_solution(prob, point, 1e-9);
  CHECK(check.feasible);
  CHECK(check.max_violation() <= 1e-9);
  CHECK(check.objective == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("check_solution reports per-family violations") {
  const GridCase grid = analytic_two_bus(120.0);
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  Eigen::VectorXd point = Eigen::VectorXd::Zero(prob.layout.total());
  const double d_pu = 1.2;
  point[prob.layout.p(0, 1, 0)] = d_pu;
  point[prob.layout.theta(0, 2, 0)] = -d_pu / 8.0;

  // push dispatch 1 MW above p_max while keeping the balance satisfied is
  // impossible; instead perturb only the capacity row's variable
  Eigen::VectorXd cap = point;
  cap[prob.layout.p(0, 1, 0)] = (400.0 + 1.0) / 100.0;
  const SolutionCheckReport rep = check_solution(prob, cap, 1e-9);
  CHECK(rep.worst(ConstraintFamily::Capacity) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(!rep.feasible);
}

TEST_CASE("transition violations are reported for contingency cases") {
  GridCase grid = analytic_two_bus(120.0);
  grid.generators[0].delta_max = 10.0;
  grid.generators[0].delta_min = 10.0;
  // add a second generator so a contingency case exists without islanding
  grid.generators.push_back(grid.generators[0]);
  grid.generators[1].id = 2;
  grid.generators[1].bus = 2;

  StepResolution res;
  res.step = 1;
  ContingencyCase cc;
  cc.label = "generator 2";
  cc.elements.generators.insert(2);
  res.contingencies.push_back(cc);

  const ScopfProblem prob = build_scopf(grid, res, {});
  Eigen::VectorXd point = Eigen::VectorXd::Zero(prob.layout.total());
  const double delta = 0.22;  // pu, 22 MW > 10 MW bound
  point[prob.layout.p(0, 1, 0)] = 0.6;
  point[prob.layout.p(0, 2, 0)] = 0.6;
  point[prob.layout.p(0, 1, 1)] = 0.6 + delta;
  const SolutionCheckReport rep = check_solution(prob, point, 1e-9);
  CHECK(rep.worst(ConstraintFamily::Transition) == doctest::Approx(22.0 - 10.0).epsilon(1e-9));
}

TEST_CASE("check_solution rejects points of the wrong dimension") {
  const GridCase grid = one_bus_case();
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  const Eigen::VectorXd wrong = Eigen::VectorXd::Zero(prob.layout.total() + 1);
  CHECK_THROWS_AS(check_solution(prob, wrong, 1e-6), std::invalid_argument);
}

TEST_CASE("pure linear cost emits no cones") {
  GridCase grid = one_bus_case();
  grid.generators[0].cost.alpha_sqr = 0.0;
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  const QpEncoding enc = to_qp(prob);
  for (const auto& seg : enc.program.cones) CHECK(seg.kind != ConeKind::Soc);
}

TEST_CASE("epigraph is tight at the optimum") {
  const GridCase grid = analytic_two_bus(90.0);
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), {});
  const QpEncoding enc = to_qp(prob);
  const SolverResult res = solve(enc.program);
  REQUIRE(res.status == SolveStatus::Optimal);
  const double p = res.x[prob.layout.p(0, 1, 0)];
  // the epigraph column for the dispatch variable carries its square
  int s_col = -1;
  for (int j = prob.layout.total(); j < enc.program.n; ++j) {
    if (enc.program.c[j] > 0) {
      s_col = j;
      break;
    }
  }
  REQUIRE(s_col >= 0);
  CHECK(res.x[s_col] == doctest::Approx(p * p).epsilon(1e-4));
}

TEST_CASE("objective via check_solution equals the conic objective at lifted points") {
  std::mt19937 rng(47);
  for (int k = 0; k < 10; ++k) {
    const RandomInstance inst = make_random_instance(rng);
    const ScopfProblem prob = build_scopf(inst.grid, inst.step, inst.config);
    const QpEncoding enc = to_qp(prob);
    const Eigen::VectorXd x = restore_feasible_point(prob, rng);
    // lift: epigraph variables at their tight values
    Eigen::VectorXd z = Eigen::VectorXd::Zero(enc.program.n);
    z.head(prob.layout.total()) = x;
    int extra = prob.layout.total();
    for (int j = 0; j < prob.layout.total(); ++j) {
      if (prob.quad_diag[j] > 0) z[extra++] = x[j] * x[j];
    }
    for (const auto& wt : prob.wear) {
      const double prev = wt.col_prev >= 0 ? x[wt.col_prev] : wt.prev_const;
      const double diff = x[wt.col_now] - prev;
      z[extra++] = diff * diff;
    }
    const double conic_obj = enc.program.c.dot(z) + enc.program.objective_constant;
    const double direct = check_solution(prob, x, 1e-3).objective;
    CHECK(conic_obj == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("tightening a thermal limit never lowers the optimum") {
  std::mt19937 rng(53);
  int tested = 0;
  for (int k = 0; k < 6; ++k) {
    RandomInstanceOptions opts;
    opts.max_buses = 6;
    opts.max_gens = 3;
    opts.periods = 1;
    opts.max_cases = 1;
    const RandomInstance inst = make_random_instance(rng, opts);
    const ScopfProblem prob = build_scopf(inst.grid, inst.step, inst.config);
    const SolverResult base = solve(to_qp(prob).program);
    if (base.status != SolveStatus::Optimal) continue;

    GridCase tighter = inst.grid;
    tighter.branches[0].flow_limit *= 0.25;
    const ScopfProblem prob2 = build_scopf(tighter, inst.step, inst.config);
    const SolverResult tight = solve(to_qp(prob2).program);
    if (tight.status != SolveStatus::Optimal) continue;
    CHECK(tight.objective >= base.objective - 1e-5 * std::abs(base.objective) - 1e-6);
    ++tested;
  }
  CHECK(tested >= 3);
}

TEST_CASE("without contingencies and prices the optimum is plain multi-period dispatch") {
  // 3 buses, 2 generators, T=2: small enough for the dense oracle
  GridCase grid = parse_case(R"({
    "base_mva": 100, "period_count": 2,
    "buses": [{"id": 1}, {"id": 2, "demand": [60.0, 90.0]}, {"id": 3, "demand": [40.0, 30.0]}],
    "branches": [
      {"id": 1, "from_bus": 1, "to_bus": 2, "susceptance": 10, "flow_limit": 400},
      {"id": 2, "from_bus": 2, "to_bus": 3, "susceptance": 10, "flow_limit": 400},
      {"id": 3, "from_bus": 3, "to_bus": 1, "susceptance": 10, "flow_limit": 400}
    ],
    "generators": [
      {"id": 1, "bus": 1, "p_min": 0, "p_max": 250, "p0": 70, "w_max": 40, "w_min": 40,
       "cost": {"alpha_sqr": 0.015, "alpha_lin": 22}},
      {"id": 2, "bus": 3, "p_min": 0, "p_max": 120, "p0": 30, "w_max": 25, "w_min": 25,
       "cost": {"alpha_sqr": 0.03, "alpha_lin": 35}}
    ]
  })");

  BuildConfig cfg;
  cfg.include_reserve_pricing = false;
  const ScopfProblem prob = build_scopf(grid, no_contingencies(), cfg);
  const SolverResult res = solve(to_qp(prob).program);
  REQUIRE(res.status == SolveStatus::Optimal);

  // independent dense economic dispatch with ramp limits: variables
  // (p11, p21, p12, p22), per-period energy balance, box and ramp rows
  DenseQp qp;
  const double a1 = 2 * 0.015, a2 = 2 * 0.03;  // 0.5 x'Px convention
  qp.P = Eigen::Vector4d(a1, a2, a1, a2).asDiagonal();
  qp.q = Eigen::Vector4d(22, 35, 22, 35);
  qp.Aeq = Eigen::MatrixXd::Zero(2, 4);
  qp.Aeq << 1, 1, 0, 0, 0, 0, 1, 1;
  qp.beq = Eigen::Vector2d(100.0, 120.0);

  std::vector<Eigen::RowVector4d> grows;
  std::vector<double> hvals;
  auto ineq = [&](const Eigen::RowVector4d& row, double bound) {
    grows.push_back(row);
    hvals.push_back(bound);
  };
  auto box = [&](int col, double lo, double hi) {
    Eigen::RowVector4d up = Eigen::RowVector4d::Zero(), dn = Eigen::RowVector4d::Zero();
    up[col] = 1;
    dn[col] = -1;
    ineq(up, hi);
    ineq(dn, -lo);
  };
  box(0, 0, 250);
  box(1, 0, 120);
  box(2, 0, 250);
  box(3, 0, 120);
  box(0, 70 - 40, 70 + 40);  // initial ramp anchors
  box(1, 30 - 25, 30 + 25);
  ineq(Eigen::RowVector4d(-1, 0, 1, 0), 40);  // inter-period ramps
  ineq(Eigen::RowVector4d(1, 0, -1, 0), 40);
  ineq(Eigen::RowVector4d(0, -1, 0, 1), 25);
  ineq(Eigen::RowVector4d(0, 1, 0, -1), 25);
  qp.G.resize(static_cast<Eigen::Index>(grows.size()), 4);
  qp.h.resize(static_cast<Eigen::Index>(hvals.size()));
  for (size_t i = 0; i < grows.size(); ++i) {
    qp.G.row(static_cast<Eigen::Index>(i)) = grows[i];
    qp.h[static_cast<Eigen::Index>(i)] = hvals[i];
  }

  const QpOracleResult oracle = solve_qp_bruteforce(qp);
  REQUIRE(oracle.solved);
  CHECK(res.objective == doctest::Approx(oracle.objective).epsilon(1e-5));

  // the anchor keeps the expensive unit at its ramp floor in period one
  CHECK(oracle.x[1] == doctest::Approx(5.0).epsilon(1e-6));
}
