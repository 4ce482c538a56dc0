#include "morphon/sensitivity.hpp"

#include <stdexcept>
#include <string>

namespace morphon {

const char* to_string(GradientKind kind) {
  return kind == GradientKind::exact ? "exact" : "synthetic";
}

StateSolver::StateSolver(StructuredGrid grid, MaterialModel mat, const BoundaryConditions& bc)
    : op_(std::move(grid), mat) {
  validate(bc, op_.grid());
  f_ = bc.load_vector(op_.grid().num_dofs());
  mask_ = bc.fixed_mask(op_.grid().num_dofs());
}

SolveResult StateSolver::solve(std::span<const double> z_filtered, std::span<const double> u0,
                               double tol, int max_iters) const {
  const auto E = op_.moduli(z_filtered);
  const auto diag = op_.diagonal(E, mask_);
  std::vector<double> start(u0.begin(), u0.end());
  if (start.empty()) start.assign(f_.size(), 0.0);
  if (start.size() != f_.size()) throw std::invalid_argument("state solve: initial guess has wrong length");
  for (size_t d = 0; d < start.size(); ++d)
    if (mask_[d]) start[d] = 0.0;
  auto A = [&](std::span<const double> x, std::span<double> y) { op_.apply(E, x, mask_, y); };
  return pcg(A, diag, f_, start, tol, max_iters);
}

std::vector<double> StateSolver::apply(std::span<const double> z_filtered,
                                       std::span<const double> u) const {
  const auto E = op_.moduli(z_filtered);
  std::vector<double> y(u.size());
  op_.apply(E, u, mask_, y);
  return y;
}

double compliance(std::span<const double> f, std::span<const double> u) {
  if (f.size() != u.size())
    throw std::invalid_argument("compliance: load length " + std::to_string(f.size()) +
                                " != displacement length " + std::to_string(u.size()));
  double J = 0.0;
  for (size_t i = 0; i < f.size(); ++i) J += f[i] * u[i];
  return J;
}

std::vector<double> compliance_gradient(const ElasticOperator& op, std::span<const double> z,
                                        const FilterOperator& P, std::span<const double> u) {
  const auto zf = P.apply(z);
  const auto energy = op.element_energies(u);
  std::vector<double> g_filtered(zf.size());
  for (size_t e = 0; e < zf.size(); ++e)
    g_filtered[e] = -simp_modulus_derivative(zf[e], op.material()) * energy[e];
  return P.apply_transpose(g_filtered);
}

std::vector<double> compliance_gradient(const StructuredGrid& grid, const MaterialModel& mat,
                                        std::span<const double> z, const FilterOperator& P,
                                        std::span<const double> u) {
  return compliance_gradient(ElasticOperator(grid, mat), z, P, u);
}

std::vector<double> compliance_gradient(const ElasticOperator& op, std::span<const double> z,
                                        const FilterOperator& P, const SolveResult& state) {
  if (!state.stats.converged)
    throw std::logic_error("compliance_gradient: state solve did not converge (relative residual " +
                           std::to_string(state.stats.final_relative_residual) + ")");
  return compliance_gradient(op, z, P, state.u);
}

std::vector<double> element_volume_weights(const StructuredGrid& grid) {
  return std::vector<double>(size_t(grid.num_elements()), 1.0 / double(grid.num_elements()));
}

VolumeEvaluation volume_and_gradient(std::span<const double> z, const FilterOperator& P,
                                     std::span<const double> v, double Vmax) {
  if (v.size() != z.size()) throw std::invalid_argument("volume: weight and density lengths differ");
  const auto zf = P.apply(z);
  VolumeEvaluation out;
  double vol = 0.0;
  for (size_t i = 0; i < zf.size(); ++i) vol += v[i] * zf[i];
  out.value = vol - Vmax;
  out.gradient = P.apply_transpose(v);
  return out;
}

}  // namespace morphon
