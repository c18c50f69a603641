#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cascopf {

// Standard-form conic program
//
//   minimize    c'x + objective_constant
//   subject to  Ax + s = b,  s in K
//
// where K is a product of cone segments partitioning the slack vector, in
// the order given by `cones`. Second-order segments store (t, v) with the
// scalar first; psd3 segments store a symmetric 3x3 matrix as the 6-vector
// (m11, m21, m31, m22, m32, m33) with off-diagonals scaled by sqrt(2), so
// the cone is self-dual under the Euclidean inner product.
enum class ConeKind { Zero, Nonneg, Soc, Psd3 };

struct ConeSegment {
  ConeKind kind;
  int dim;
};

struct ConicProgram {
  int n = 0;  // variables
  int m = 0;  // constraints
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  double objective_constant = 0.0;
  std::vector<ConeSegment> cones;

  // Throws std::invalid_argument when the cone layout or dimensions are bad.
  void validate() const;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIters };

const char* to_string(SolveStatus s);

struct SolverSettings {
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  double eps_gap = 1e-6;
  double eps_infeasible = 1e-7;
  int max_iters = 100000;
  bool scaling = true;
  double relaxation = 1.5;  // over-relaxation parameter in (0, 2)
  int check_every = 25;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
};

struct SolverResult {
  SolveStatus status = SolveStatus::MaxIters;
  Eigen::VectorXd x;  // primal point, or unbounded-ray certificate
  Eigen::VectorXd y;  // dual point, or infeasibility certificate (b'y = -1)
  Eigen::VectorXd s;
  double objective = 0.0;  // c'x + objective_constant
  Residuals residuals;
  double certificate_residual = 0.0;  // populated for infeasible statuses
  int iterations = 0;
  double wall_seconds = 0.0;
};

// First-order operator splitting on the homogeneous self-dual embedding.
SolverResult solve(const ConicProgram& prog, const SolverSettings& settings = {},
                   const WarmStart* warm = nullptr);

// Normalized residuals of an arbitrary primal/dual iterate:
//   primal  ||Ax + s - b|| / (1 + ||b||)
//   dual    ||A'y + c|| / (1 + ||c||)
//   gap     |c'x + b'y| / (1 + |c'x| + |b'y|)
Residuals compute_residuals(const ConicProgram& prog, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& s);

// Euclidean projection of one slack segment onto its cone (or dual cone).
void project_cone(ConeKind kind, Eigen::Ref<Eigen::VectorXd> seg);
void project_dual_cone(ConeKind kind, Eigen::Ref<Eigen::VectorXd> seg);
Eigen::VectorXd project_cone_copy(ConeKind kind, const Eigen::VectorXd& seg);
Eigen::VectorXd project_dual_cone_copy(ConeKind kind, const Eigen::VectorXd& seg);

// Eigendecomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
// Eigenvalues are returned in descending order with orthonormal columns of
// `vecs` as the matching eigenvectors.
void eig3_sym(const Eigen::Matrix3d& m, Eigen::Vector3d& vals, Eigen::Matrix3d& vecs);

Eigen::Matrix3d mat3_from_vec6(const Eigen::Matrix<double, 6, 1>& v);
Eigen::Matrix<double, 6, 1> vec6_from_mat3(const Eigen::Matrix3d& m);

// Plain-text sparse-triplet dump for cross-checking against external tools.
void dump_program(const ConicProgram& prog, std::ostream& out);

}  // namespace cascopf
