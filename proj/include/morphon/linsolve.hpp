#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace morphon {

struct SolveStats {
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
};

struct SolveResult {
  std::vector<double> u;
  SolveStats stats;
};

// y = A x
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

// Raised when p^T A p <= 0, i.e. the operator is not positive definite.
class SolverBreakdown : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Jacobi-preconditioned conjugate gradients, warm-started from u0.
// Stops when ||f - A u||_2 / ||f||_2 <= tol (the recursively updated
// residual), or after max_iters with converged = false.
SolveResult pcg(const LinearOperator& apply_A, std::span<const double> precond_diag,
                std::span<const double> f, std::span<const double> u0, double tol,
                int max_iters);

inline constexpr Eigen::Index kDenseSolveCap = 5000;

// Direct solve by full-pivot LU. Throws on singular A or when the system
// exceeds `cap` unknowns.
std::vector<double> dense_solve(const Eigen::MatrixXd& A, std::span<const double> f,
                                Eigen::Index cap = kDenseSolveCap);

}  // namespace morphon
