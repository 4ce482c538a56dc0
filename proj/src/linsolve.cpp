#include "morphon/linsolve.hpp"

#include <cmath>
#include <string>

namespace morphon {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SolveResult pcg(const LinearOperator& apply_A, std::span<const double> diag,
                std::span<const double> f, std::span<const double> u0, double tol,
                int max_iters) {
  const size_t n = f.size();
  if (diag.size() != n || u0.size() != n)
    throw std::invalid_argument("pcg: preconditioner, rhs and initial guess must have equal length");
  for (size_t i = 0; i < n; ++i)
    if (!(diag[i] > 0.0))
      throw std::invalid_argument("pcg: preconditioner entry " + std::to_string(i) + " is not positive");

  SolveResult out;
  out.u.assign(u0.begin(), u0.end());
  const double fnorm = std::sqrt(dot(f, f));
  if (fnorm == 0.0) {
    std::fill(out.u.begin(), out.u.end(), 0.0);
    out.stats = {0, 0.0, true};
    return out;
  }

  std::vector<double> r(n), z(n), p(n), Ap(n);
  apply_A(out.u, r);
  for (size_t i = 0; i < n; ++i) r[i] = f[i] - r[i];
  double rel = std::sqrt(dot(r, r)) / fnorm;
  if (rel <= tol) {
    out.stats = {0, rel, true};
    return out;
  }
  for (size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = dot(r, z);

  int it = 0;
  while (it < max_iters) {
    apply_A(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0))
      throw SolverBreakdown("pcg: breakdown, p^T A p = " + std::to_string(pAp) +
                            " (operator not positive definite)");
    const double alpha = rz / pAp;
    for (size_t i = 0; i < n; ++i) {
      out.u[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    ++it;
    rel = std::sqrt(dot(r, r)) / fnorm;
    if (rel <= tol) break;
    for (size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  out.stats = {it, rel, rel <= tol};
  return out;
}

std::vector<double> dense_solve(const Eigen::MatrixXd& A, std::span<const double> f,
                                Eigen::Index cap) {
  if (A.rows() != A.cols()) throw std::invalid_argument("dense_solve: matrix is not square");
  if (A.rows() != Eigen::Index(f.size()))
    throw std::invalid_argument("dense_solve: rhs length does not match matrix");
  if (A.rows() > cap)
    throw std::invalid_argument("dense_solve: system size " + std::to_string(A.rows()) +
                                " exceeds cap " + std::to_string(cap));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw std::runtime_error("dense_solve: matrix is singular");
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(f.data(), Eigen::Index(f.size()));
  Eigen::VectorXd x = lu.solve(b);
  // One step of iterative refinement.
  x += lu.solve(b - A * x);
  return {x.data(), x.data() + x.size()};
}

}  // namespace morphon
