#pragma once

#include <span>
#include <vector>

#include "morphon/fem.hpp"
#include "morphon/filter.hpp"
#include "morphon/linsolve.hpp"
#include "morphon/mesh.hpp"

namespace morphon {

enum class GradientKind { exact, synthetic };

const char* to_string(GradientKind kind);

struct EvaluationRecord {
  int iteration = 0;
  double objective = 0.0;  // NaN when no fine solve was performed
  double volume_fraction = 0.0;
  std::vector<double> gradient;
  GradientKind gradient_kind = GradientKind::exact;
  bool fine_solve_performed = false;
  double wall_time = 0.0;  // seconds spent on this iteration
  SolveStats fine_stats{};
};

// Solves K(z_filtered) u = f for one grid and set of boundary conditions.
class StateSolver {
public:
  StateSolver(StructuredGrid grid, MaterialModel mat, const BoundaryConditions& bc);

  const ElasticOperator& op() const { return op_; }
  const StructuredGrid& grid() const { return op_.grid(); }
  const std::vector<double>& load() const { return f_; }
  const std::vector<std::uint8_t>& fixed_mask() const { return mask_; }

  SolveResult solve(std::span<const double> z_filtered, std::span<const double> u0, double tol,
                    int max_iters) const;

  std::vector<double> apply(std::span<const double> z_filtered, std::span<const double> u) const;

private:
  ElasticOperator op_;
  std::vector<double> f_;
  std::vector<std::uint8_t> mask_;
};

double compliance(std::span<const double> f, std::span<const double> u);

// g = P^T g~, g~_e = -dE/dz(z~_e) u_e^T KE u_e with z~ = P z.
std::vector<double> compliance_gradient(const ElasticOperator& op, std::span<const double> z,
                                        const FilterOperator& P, std::span<const double> u);

std::vector<double> compliance_gradient(const StructuredGrid& grid, const MaterialModel& mat,
                                        std::span<const double> z, const FilterOperator& P,
                                        std::span<const double> u);

// Refuses states whose solve did not converge.
std::vector<double> compliance_gradient(const ElasticOperator& op, std::span<const double> z,
                                        const FilterOperator& P, const SolveResult& state);

// Element volumes normalized to sum to one, so v^T P z is a volume fraction.
std::vector<double> element_volume_weights(const StructuredGrid& grid);

struct VolumeEvaluation {
  double value = 0.0;             // v^T P z - Vmax
  std::vector<double> gradient;   // P^T v
};

VolumeEvaluation volume_and_gradient(std::span<const double> z, const FilterOperator& P,
                                     std::span<const double> v, double Vmax);

}  // namespace morphon
