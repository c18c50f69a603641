#include "cascopf/conic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "cascopf/log.hpp"

namespace cascopf {

namespace {
constexpr double kInfD = std::numeric_limits<double>::infinity();
}

void ConicProgram::validate() const {
  if (n <= 0 || m <= 0) throw std::invalid_argument("conic program must have n > 0 and m > 0");
  if (A.rows() != m || A.cols() != n) throw std::invalid_argument("A dimensions do not match n, m");
  if (b.size() != m || c.size() != n) throw std::invalid_argument("b or c dimension mismatch");
  int total = 0;
  for (const auto& seg : cones) {
    if (seg.dim <= 0) throw std::invalid_argument("cone segment with non-positive dimension");
    if (seg.kind == ConeKind::Soc && seg.dim < 2)
      throw std::invalid_argument("second-order segment must have dim >= 2");
    if (seg.kind == ConeKind::Psd3 && seg.dim != 6)
      throw std::invalid_argument("psd3 segment must have dim == 6");
    total += seg.dim;
  }
  if (total != m) throw std::invalid_argument("cone segment dimensions do not sum to m");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::MaxIters: return "max_iters";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// 3x3 symmetric eigensolver (cyclic Jacobi)

void eig3_sym(const Eigen::Matrix3d& m, Eigen::Vector3d& vals, Eigen::Matrix3d& vecs) {
  Eigen::Matrix3d a = 0.5 * (m + m.transpose());
  Eigen::Matrix3d v = Eigen::Matrix3d::Identity();
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off < 1e-34 * std::max(1.0, a.squaredNorm())) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double apq = a(p, q);
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cos = 1.0 / std::sqrt(t * t + 1.0);
        const double sin = t * cos;
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        r(p, p) = cos;
        r(q, q) = cos;
        r(p, q) = sin;
        r(q, p) = -sin;
        a = r.transpose() * a * r;
        a(p, q) = a(q, p) = 0.0;  // annihilated by construction
        v = v * r;
      }
    }
  }
  // sort descending
  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int i, int j) { return a(i, i) > a(j, j); });
  for (int k = 0; k < 3; ++k) {
    vals[k] = a(order[k], order[k]);
    vecs.col(k) = v.col(order[k]);
  }
}

Eigen::Matrix3d mat3_from_vec6(const Eigen::Matrix<double, 6, 1>& v) {
  const double is2 = 1.0 / std::sqrt(2.0);
  Eigen::Matrix3d m;
  m(0, 0) = v[0];
  m(1, 0) = m(0, 1) = v[1] * is2;
  m(2, 0) = m(0, 2) = v[2] * is2;
  m(1, 1) = v[3];
  m(2, 1) = m(1, 2) = v[4] * is2;
  m(2, 2) = v[5];
  return m;
}

Eigen::Matrix<double, 6, 1> vec6_from_mat3(const Eigen::Matrix3d& m) {
  const double s2 = std::sqrt(2.0);
  Eigen::Matrix<double, 6, 1> v;
  v[0] = m(0, 0);
  v[1] = m(1, 0) * s2;
  v[2] = m(2, 0) * s2;
  v[3] = m(1, 1);
  v[4] = m(2, 1) * s2;
  v[5] = m(2, 2);
  return v;
}

// ---------------------------------------------------------------------------
// Cone projections

namespace {

void project_soc(Eigen::Ref<Eigen::VectorXd> seg) {
  const int d = static_cast<int>(seg.size());
  const double t = seg[0];
  const double vn = seg.tail(d - 1).norm();
  if (vn <= t) return;  // inside
  if (vn <= -t) {
    seg.setZero();
    return;
  }
  const double scale = 0.5 * (1.0 + t / vn);
  seg[0] = scale * vn;
  seg.tail(d - 1) *= scale;
}

void project_psd3(Eigen::Ref<Eigen::VectorXd> seg) {
  Eigen::Matrix<double, 6, 1> v = seg;
  const Eigen::Matrix3d m = mat3_from_vec6(v);
  Eigen::Vector3d vals;
  Eigen::Matrix3d vecs;
  eig3_sym(m, vals, vecs);
  if (vals[2] >= 0.0) return;  // already psd
  Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) {
    if (vals[k] > 0.0) out += vals[k] * vecs.col(k) * vecs.col(k).transpose();
  }
  seg = vec6_from_mat3(out);
}

}  // namespace

void project_cone(ConeKind kind, Eigen::Ref<Eigen::VectorXd> seg) {
  switch (kind) {
    case ConeKind::Zero:
      seg.setZero();
      break;
    case ConeKind::Nonneg:
      seg = seg.cwiseMax(0.0);
      break;
    case ConeKind::Soc:
      project_soc(seg);
      break;
    case ConeKind::Psd3:
      project_psd3(seg);
      break;
  }
}

void project_dual_cone(ConeKind kind, Eigen::Ref<Eigen::VectorXd> seg) {
  // dual(Zero) is the free cone; the remaining cones are self-dual
  if (kind == ConeKind::Zero) return;
  project_cone(kind, seg);
}

Eigen::VectorXd project_cone_copy(ConeKind kind, const Eigen::VectorXd& seg) {
  Eigen::VectorXd out = seg;
  project_cone(kind, out);
  return out;
}

Eigen::VectorXd project_dual_cone_copy(ConeKind kind, const Eigen::VectorXd& seg) {
  Eigen::VectorXd out = seg;
  project_dual_cone(kind, out);
  return out;
}

namespace {

void project_onto_cone_product(const std::vector<ConeSegment>& cones,
                               Eigen::Ref<Eigen::VectorXd> v, bool dual) {
  int at = 0;
  for (const auto& seg : cones) {
    if (dual)
      project_dual_cone(seg.kind, v.segment(at, seg.dim));
    else
      project_cone(seg.kind, v.segment(at, seg.dim));
    at += seg.dim;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Residuals

Residuals compute_residuals(const ConicProgram& prog, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& s) {
  if (x.size() != prog.n || y.size() != prog.m || s.size() != prog.m)
    throw std::invalid_argument("iterate dimensions do not match program");
  Residuals r;
  r.primal = (prog.A * x + s - prog.b).norm() / (1.0 + prog.b.norm());
  r.dual = (prog.A.transpose() * y + prog.c).norm() / (1.0 + prog.c.norm());
  const double cx = prog.c.dot(x);
  const double by = prog.b.dot(y);
  r.gap = std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));
  return r;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

// Diagonal (Ruiz-style) equilibration of A. Row factors are uniform within
// soc/psd3 segments so that scaled slacks stay in their cones.
struct Scaling {
  Eigen::VectorXd row;  // D
  Eigen::VectorXd col;  // E
  double rho_b = 1.0;
  double rho_c = 1.0;
};

Scaling equilibrate(const ConicProgram& prog, Eigen::SparseMatrix<double>& a,
                    Eigen::VectorXd& b, Eigen::VectorXd& c, bool enabled) {
  const int m = prog.m, n = prog.n;
  Scaling sc;
  sc.row = Eigen::VectorXd::Ones(m);
  sc.col = Eigen::VectorXd::Ones(n);
  a = prog.A;
  if (enabled) {
    for (int iter = 0; iter < 10; ++iter) {
      Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m);
      Eigen::VectorXd cmax = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < a.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
          const double av = std::abs(it.value());
          rmax[it.row()] = std::max(rmax[it.row()], av);
          cmax[it.col()] = std::max(cmax[it.col()], av);
        }
      }
      // uniform factor per soc/psd3 segment (geometric mean of members)
      int at = 0;
      for (const auto& seg : prog.cones) {
        if (seg.kind == ConeKind::Soc || seg.kind == ConeKind::Psd3) {
          double logsum = 0.0;
          int cnt = 0;
          for (int i = 0; i < seg.dim; ++i) {
            if (rmax[at + i] > 0) {
              logsum += std::log(rmax[at + i]);
              ++cnt;
            }
          }
          const double g = cnt > 0 ? std::exp(logsum / cnt) : 1.0;
          for (int i = 0; i < seg.dim; ++i) rmax[at + i] = g;
        }
        at += seg.dim;
      }
      Eigen::VectorXd dr(m), dc(n);
      for (int i = 0; i < m; ++i) dr[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
      for (int j = 0; j < n; ++j) dc[j] = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
      for (int k = 0; k < a.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
          it.valueRef() *= dr[it.row()] * dc[it.col()];
        }
      }
      sc.row = sc.row.cwiseProduct(dr);
      sc.col = sc.col.cwiseProduct(dc);
    }
  }
  b = sc.row.cwiseProduct(prog.b);
  c = sc.col.cwiseProduct(prog.c);
  if (enabled) {
    sc.rho_b = 1.0 / std::max(b.norm(), 1.0);
    sc.rho_c = 1.0 / std::max(c.norm(), 1.0);
    b *= sc.rho_b;
    c *= sc.rho_c;
  }
  return sc;
}

struct Certificates {
  bool primal_infeasible = false;
  bool dual_infeasible = false;
  double pinf_residual = std::numeric_limits<double>::infinity();
  double dinf_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd y_cert;
  Eigen::VectorXd x_cert;
  Eigen::VectorXd s_cert;
};

// Primal infeasibility: y in K* with A'y ~ 0 and b'y < 0. Dual
// infeasibility: x with Ax + s ~ 0, s in K, c'x < 0. Residuals are
// normalized so a certificate scaled to b'y = -1 (resp. c'x = -1) has
// residual ||A'y|| max(1, ||b||) (resp. ||Ax + s|| max(1, ||c||)).
void check_certificates(const ConicProgram& prog, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y, double eps, Certificates& cert) {
  const double by = prog.b.dot(y);
  if (by < -1e-12) {
    const double res = (prog.A.transpose() * y).norm() * std::max(1.0, prog.b.norm()) / (-by);
    if (res < cert.pinf_residual) {
      cert.pinf_residual = res;
      cert.y_cert = y / (-by);
    }
    if (res <= eps) cert.primal_infeasible = true;
  }
  const double cx = prog.c.dot(x);
  if (cx < -1e-12) {
    Eigen::VectorXd s_dir = -(prog.A * x);
    project_onto_cone_product(prog.cones, s_dir, /*dual=*/false);
    const double res =
        (prog.A * x + s_dir).norm() * std::max(1.0, prog.c.norm()) / (-cx);
    if (res < cert.dinf_residual) {
      cert.dinf_residual = res;
      cert.x_cert = x / (-cx);
      cert.s_cert = s_dir / (-cx);
    }
    if (res <= eps) cert.dual_infeasible = true;
  }
}

}  // namespace

SolverResult solve(const ConicProgram& prog, const SolverSettings& settings,
                   const WarmStart* warm) {
  prog.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = prog.n, m = prog.m;

  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd b, c;
  const Scaling sc = equilibrate(prog, a, b, c, settings.scaling);

  // Cached factorization of (I + A'A) used by the projection onto the
  // affine subspace of the embedding: one solve per iteration.
  Eigen::SparseMatrix<double> gram = Eigen::SparseMatrix<double>(a.transpose()) * a;
  for (int j = 0; j < n; ++j) gram.coeffRef(j, j) += 1.0;
  gram.makeCompressed();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(gram);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("conic solver: factorization of I + A'A failed");

  const Eigen::SparseMatrix<double> at = a.transpose();
  auto solve_m = [&](const Eigen::VectorXd& w1, const Eigen::VectorXd& w2,
                     Eigen::VectorXd& z1, Eigen::VectorXd& z2) {
    z1 = ldlt.solve(w1 - at * w2);
    z2 = w2 + a * z1;
  };

  // h = (c, b); p = M^{-1} h cached for the rank-one update
  Eigen::VectorXd p1(n), p2(m);
  solve_m(c, b, p1, p2);
  const double hp = c.dot(p1) + b.dot(p2);
  const double denom = 1.0 + hp;

  // iterate u = (x, y, tau), v = (0, s, kappa)
  Eigen::VectorXd ux = Eigen::VectorXd::Zero(n), uy = Eigen::VectorXd::Zero(m);
  double utau = 1.0;
  Eigen::VectorXd vs = Eigen::VectorXd::Zero(m);
  double vkappa = 1.0;
  if (warm != nullptr && warm->x.size() == n && warm->y.size() == m && warm->s.size() == m) {
    ux = warm->x.cwiseQuotient(sc.col) * sc.rho_b;
    uy = warm->y.cwiseQuotient(sc.row) * sc.rho_c;
    vs = sc.row.cwiseProduct(warm->s) * sc.rho_b;
    vkappa = 0.0;
  }

  SolverResult result;
  result.x = Eigen::VectorXd::Zero(n);
  result.y = Eigen::VectorXd::Zero(m);
  result.s = Eigen::VectorXd::Zero(m);
  result.residuals = {kInfD, kInfD, kInfD};
  Certificates cert;

  Eigen::VectorXd wx(n), wy(m), gx(n), gy(m), zx(n), zy(m), tx(n), ty(m);
  const double alpha = settings.relaxation;

  int iter = 0;
  for (; iter < settings.max_iters; ++iter) {
    // affine step: (I + Q)^{-1} (u + v)
    wx = ux;
    wy = uy + vs;
    const double wtau = utau + vkappa;
    gx = wx - wtau * c;
    gy = wy - wtau * b;
    solve_m(gx, gy, zx, zy);
    const double hq = c.dot(zx) + b.dot(zy);
    tx = zx - (hq / denom) * p1;
    ty = zy - (hq / denom) * p2;
    const double ttau = wtau + c.dot(tx) + b.dot(ty);

    // over-relaxation
    tx = alpha * tx + (1.0 - alpha) * ux;
    ty = alpha * ty + (1.0 - alpha) * uy;
    const double rtau = alpha * ttau + (1.0 - alpha) * utau;

    // cone step: u = Pi_C(relaxed - v), C = R^n x K* x R+
    ux = tx;  // free block
    uy = ty - vs;
    project_onto_cone_product(prog.cones, uy, /*dual=*/true);
    const double utau_new = std::max(0.0, rtau - vkappa);

    // dual update
    vs = vs - ty + uy;
    vkappa = vkappa - rtau + utau_new;
    utau = utau_new;

    if ((iter + 1) % settings.check_every != 0) continue;

    if (utau > 1e-10) {
      // unscaled candidate
      const Eigen::VectorXd x = sc.col.cwiseProduct(ux) / (utau * sc.rho_b);
      const Eigen::VectorXd y = sc.row.cwiseProduct(uy) / (utau * sc.rho_c);
      const Eigen::VectorXd s = vs.cwiseQuotient(sc.row) / (utau * sc.rho_b);
      const Residuals res = compute_residuals(prog, x, y, s);
      if (res.primal <= settings.eps_primal && res.dual <= settings.eps_dual &&
          res.gap <= settings.eps_gap) {
        result.status = SolveStatus::Optimal;
        result.x = x;
        result.y = y;
        result.s = s;
        result.residuals = res;
        break;
      }
      result.x = x;
      result.y = y;
      result.s = s;
      result.residuals = res;
    }
    {
      const Eigen::VectorXd xr = sc.col.cwiseProduct(ux);
      const Eigen::VectorXd yr = sc.row.cwiseProduct(uy);
      check_certificates(prog, xr, yr, settings.eps_infeasible, cert);
      if (cert.primal_infeasible) {
        result.status = SolveStatus::PrimalInfeasible;
        result.y = cert.y_cert;
        result.certificate_residual = cert.pinf_residual;
        break;
      }
      if (cert.dual_infeasible) {
        result.status = SolveStatus::DualInfeasible;
        result.x = cert.x_cert;
        result.s = cert.s_cert;
        result.certificate_residual = cert.dinf_residual;
        break;
      }
    }
  }

  result.iterations = std::min(iter + 1, settings.max_iters);
  if (result.status == SolveStatus::Optimal) {
    result.objective = prog.c.dot(result.x) + prog.objective_constant;
  } else if (result.status == SolveStatus::MaxIters) {
    log::debug("conic solver hit max_iters=%d (primal %.2e dual %.2e gap %.2e)",
               settings.max_iters, result.residuals.primal, result.residuals.dual,
               result.residuals.gap);
    result.objective = prog.c.dot(result.x) + prog.objective_constant;
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

// ---------------------------------------------------------------------------

void dump_program(const ConicProgram& prog, std::ostream& out) {
  out << "conic-program v1\n";
  out << "n " << prog.n << " m " << prog.m << " constant " << prog.objective_constant << "\n";
  out << "cones " << prog.cones.size() << "\n";
  for (const auto& seg : prog.cones) {
    switch (seg.kind) {
      case ConeKind::Zero: out << "zero "; break;
      case ConeKind::Nonneg: out << "nonneg "; break;
      case ConeKind::Soc: out << "soc "; break;
      case ConeKind::Psd3: out << "psd3 "; break;
    }
    out << seg.dim << "\n";
  }
  out << "c\n";
  for (int i = 0; i < prog.n; ++i) {
    if (prog.c[i] != 0.0) out << i << " " << prog.c[i] << "\n";
  }
  out << "b\n";
  for (int i = 0; i < prog.m; ++i) {
    if (prog.b[i] != 0.0) out << i << " " << prog.b[i] << "\n";
  }
  out << "A " << prog.A.nonZeros() << "\n";
  for (int k = 0; k < prog.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(prog.A, k); it; ++it) {
      out << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
  out << "end\n";
}

}  // namespace cascopf
