#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "morphon/mesh.hpp"

namespace morphon {

// SIMP material: E(z) = Emin + z^penal (E0 - Emin).
struct MaterialModel {
  double E0 = 1.0;
  double Emin = 1e-9;
  double nu = 0.3;
  double penal = 3.0;

  void validate() const;
};

using ElementMatrix = Eigen::Matrix<double, 24, 24>;
using ElementVector = Eigen::Matrix<double, 24, 1>;

// Unit-modulus hex8 stiffness for a box element of size h, by 2x2x2 Gauss
// quadrature of B^T C B. Rows/columns follow kHexCorners x {x,y,z}.
ElementMatrix hex8_stiffness(double nu, const Vec3& element_size);

double simp_modulus(double z_filtered, const MaterialModel& mat);
// dE/dz at z.
double simp_modulus_derivative(double z_filtered, const MaterialModel& mat);

// Matrix-free K(z) for a fixed grid and material. Fixed dofs are handled by
// identity masking: (K u)_d = u_d for fixed d, and fixed entries of u do not
// contribute to free rows.
class ElasticOperator {
public:
  ElasticOperator(StructuredGrid grid, MaterialModel mat);

  const StructuredGrid& grid() const { return grid_; }
  const MaterialModel& material() const { return mat_; }
  const ElementMatrix& element_matrix() const { return ke_; }

  std::vector<double> moduli(std::span<const double> z_filtered) const;

  // y = K u with precomputed element moduli.
  void apply(std::span<const double> moduli, std::span<const double> u,
             std::span<const std::uint8_t> fixed_mask, std::span<double> y) const;

  std::vector<double> diagonal(std::span<const double> moduli,
                               std::span<const std::uint8_t> fixed_mask) const;

  // u_e^T KE u_e for every element (unit modulus).
  std::vector<double> element_energies(std::span<const double> u) const;

  // Dense K(z) with the same masking; verification oracle for small grids.
  Eigen::MatrixXd assemble_dense(std::span<const double> moduli,
                                 std::span<const std::uint8_t> fixed_mask) const;

private:
  void check_sizes(std::span<const double> moduli, std::span<const double> u,
                   std::span<const std::uint8_t> mask) const;

  StructuredGrid grid_;
  MaterialModel mat_;
  ElementMatrix ke_;
};

std::vector<double> apply_stiffness(const StructuredGrid& grid, const MaterialModel& mat,
                                    std::span<const double> z_filtered,
                                    std::span<const double> u,
                                    std::span<const Index> fixed_dofs);

std::vector<double> jacobi_diagonal(const StructuredGrid& grid, const MaterialModel& mat,
                                    std::span<const double> z_filtered,
                                    std::span<const Index> fixed_dofs);

}  // namespace morphon
