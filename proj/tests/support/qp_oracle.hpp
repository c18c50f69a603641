#pragma once

#include <optional>

#include <Eigen/Dense>

namespace cascopf::testing {

// Dense strictly convex QP
//   minimize   0.5 x'Px + q'x
//   subject to Aeq x = beq,  G x <= h
struct DenseQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

struct QpOracleResult {
  bool solved = false;
  Eigen::VectorXd x;
  double objective = 0.0;
};

// Brute-force oracle: enumerates active sets of the inequality constraints
// and solves the dense KKT system for each candidate, keeping the KKT point
// that satisfies primal feasibility and sign conditions. Exponential in the
// number of inequalities; intended for n <= 20, few inequalities.
QpOracleResult solve_qp_bruteforce(const DenseQp& qp, double tol = 1e-8);

}  // namespace cascopf::testing
