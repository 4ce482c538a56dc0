#include "morphon/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "morphon/parallel.hpp"

namespace morphon {

void MaterialModel::validate() const {
  if (!(E0 > 0.0)) throw std::invalid_argument("material: E0 must be > 0");
  if (!(Emin > 0.0 && Emin < E0)) throw std::invalid_argument("material: require 0 < Emin < E0");
  if (!(nu > 0.0 && nu < 0.5)) throw std::invalid_argument("material: require 0 < nu < 0.5");
  if (!(penal >= 1.0)) throw std::invalid_argument("material: penal must be >= 1");
}

ElementMatrix hex8_stiffness(double nu, const Vec3& h) {
  const double lambda = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = 1.0 / (2.0 * (1.0 + nu));
  Eigen::Matrix<double, 6, 6> C = Eigen::Matrix<double, 6, 6>::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) C(a, b) = lambda;
    C(a, a) = lambda + 2.0 * mu;
    C(a + 3, a + 3) = mu;
  }

  const double gp = 1.0 / std::sqrt(3.0);
  const double detJ = h[0] * h[1] * h[2] / 8.0;
  ElementMatrix ke = ElementMatrix::Zero();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double xi[3] = {a ? gp : -gp, b ? gp : -gp, c ? gp : -gp};
        Eigen::Matrix<double, 6, 24> B = Eigen::Matrix<double, 6, 24>::Zero();
        for (int n = 0; n < 8; ++n) {
          double s[3];
          for (int d = 0; d < 3; ++d) s[d] = kHexCorners[n][d] ? 1.0 : -1.0;
          // N_n = 1/8 prod (1 + s_d xi_d); physical derivative scales by 2/h.
          double dN[3];
          for (int d = 0; d < 3; ++d) {
            double prod = 0.125 * s[d];
            for (int e = 0; e < 3; ++e)
              if (e != d) prod *= 1.0 + s[e] * xi[e];
            dN[d] = prod * 2.0 / h[d];
          }
          const int col = 3 * n;
          B(0, col + 0) = dN[0];
          B(1, col + 1) = dN[1];
          B(2, col + 2) = dN[2];
          B(3, col + 1) = dN[2];  // yz
          B(3, col + 2) = dN[1];
          B(4, col + 0) = dN[2];  // xz
          B(4, col + 2) = dN[0];
          B(5, col + 0) = dN[1];  // xy
          B(5, col + 1) = dN[0];
        }
        ke.noalias() += B.transpose() * C * B * detJ;
      }
  return 0.5 * (ke + ke.transpose());
}

double simp_modulus(double z, const MaterialModel& mat) {
  if (!(z >= 0.0 && z <= 1.0))
    throw std::domain_error("simp_modulus: density must lie in [0,1]");
  return mat.Emin + std::pow(z, mat.penal) * (mat.E0 - mat.Emin);
}

double simp_modulus_derivative(double z, const MaterialModel& mat) {
  return mat.penal * std::pow(z, mat.penal - 1.0) * (mat.E0 - mat.Emin);
}

ElasticOperator::ElasticOperator(StructuredGrid grid, MaterialModel mat)
    : grid_(std::move(grid)), mat_(mat), ke_(hex8_stiffness(mat.nu, grid_.element_size())) {
  mat_.validate();
}

std::vector<double> ElasticOperator::moduli(std::span<const double> z) const {
  if (Index(z.size()) != grid_.num_elements())
    throw std::invalid_argument("moduli: density length " + std::to_string(z.size()) +
                                " != element count " + std::to_string(grid_.num_elements()));
  std::vector<double> E(z.size());
  for (size_t e = 0; e < z.size(); ++e) E[e] = simp_modulus(z[e], mat_);
  return E;
}

void ElasticOperator::check_sizes(std::span<const double> moduli, std::span<const double> u,
                                  std::span<const std::uint8_t> mask) const {
  if (Index(moduli.size()) != grid_.num_elements())
    throw std::invalid_argument("stiffness: modulus vector has wrong length");
  if (Index(u.size()) != grid_.num_dofs())
    throw std::invalid_argument("stiffness: vector length " + std::to_string(u.size()) +
                                " != dof count " + std::to_string(grid_.num_dofs()));
  if (Index(mask.size()) != grid_.num_dofs())
    throw std::invalid_argument("stiffness: fixed mask has wrong length");
}

void ElasticOperator::apply(std::span<const double> moduli, std::span<const double> u,
                            std::span<const std::uint8_t> mask, std::span<double> y) const {
  check_sizes(moduli, u, mask);
  if (y.size() != u.size()) throw std::invalid_argument("stiffness: output has wrong length");
  std::fill(y.begin(), y.end(), 0.0);

  const int nx = grid_.nelx(), ny = grid_.nely(), nz = grid_.nelz();
  const int nthreads = thread_count();
  // Eight-color sweep: elements of one parity class share no nodes, so each
  // dof receives at most one update per color and the sum order is fixed.
  for (int color = 0; color < 8; ++color) {
    const int ci = color & 1, cj = (color >> 1) & 1, ck = (color >> 2) & 1;
    const int nk = (nz - ck + 1) / 2, nj = (ny - cj + 1) / 2;
#pragma omp parallel for collapse(2) schedule(static) num_threads(nthreads)
    for (int kk = 0; kk < nk; ++kk)
      for (int jj = 0; jj < nj; ++jj) {
        const int k = ck + 2 * kk, j = cj + 2 * jj;
        ElementVector ue, ye;
        for (int i = ci; i < nx; i += 2) {
          const Index e = grid_.element_index(i, j, k);
          const Index n0 = grid_.node_index(i, j, k);
          Index dofs[24];
          for (int c = 0; c < 8; ++c) {
            const Index n = n0 + kHexCorners[c][0] +
                            Index(nx + 1) * (kHexCorners[c][1] + Index(ny + 1) * kHexCorners[c][2]);
            for (int d = 0; d < 3; ++d) dofs[3 * c + d] = 3 * n + d;
          }
          for (int a = 0; a < 24; ++a) ue[a] = mask[size_t(dofs[a])] ? 0.0 : u[size_t(dofs[a])];
          ye.noalias() = ke_ * ue;
          const double E = moduli[size_t(e)];
          for (int a = 0; a < 24; ++a) y[size_t(dofs[a])] += E * ye[a];
        }
      }
  }
  for (size_t d = 0; d < y.size(); ++d)
    if (mask[d]) y[d] = u[d];
}

std::vector<double> ElasticOperator::diagonal(std::span<const double> moduli,
                                              std::span<const std::uint8_t> mask) const {
  if (Index(moduli.size()) != grid_.num_elements() || Index(mask.size()) != grid_.num_dofs())
    throw std::invalid_argument("jacobi diagonal: input has wrong length");
  std::vector<double> diag(size_t(grid_.num_dofs()), 0.0);
  for (Index e = 0; e < grid_.num_elements(); ++e) {
    const auto dofs = grid_.element_dofs(e);
    for (int a = 0; a < 24; ++a) diag[size_t(dofs[a])] += moduli[size_t(e)] * ke_(a, a);
  }
  for (size_t d = 0; d < diag.size(); ++d)
    if (mask[d]) diag[d] = 1.0;
  return diag;
}

std::vector<double> ElasticOperator::element_energies(std::span<const double> u) const {
  if (Index(u.size()) != grid_.num_dofs())
    throw std::invalid_argument("element energies: displacement has wrong length");
  std::vector<double> energy(size_t(grid_.num_elements()));
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (Index e = 0; e < grid_.num_elements(); ++e) {
    const auto dofs = grid_.element_dofs(e);
    ElementVector ue;
    for (int a = 0; a < 24; ++a) ue[a] = u[size_t(dofs[a])];
    energy[size_t(e)] = ue.dot(ke_ * ue);
  }
  return energy;
}

Eigen::MatrixXd ElasticOperator::assemble_dense(std::span<const double> moduli,
                                                std::span<const std::uint8_t> mask) const {
  const Index n = grid_.num_dofs();
  if (n > 20000) throw std::invalid_argument("assemble_dense: system too large for a dense oracle");
  if (Index(moduli.size()) != grid_.num_elements() || Index(mask.size()) != n)
    throw std::invalid_argument("assemble_dense: input has wrong length");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (Index e = 0; e < grid_.num_elements(); ++e) {
    const auto dofs = grid_.element_dofs(e);
    for (int a = 0; a < 24; ++a) {
      if (mask[size_t(dofs[a])]) continue;
      for (int b = 0; b < 24; ++b) {
        if (mask[size_t(dofs[b])]) continue;
        K(dofs[a], dofs[b]) += moduli[size_t(e)] * ke_(a, b);
      }
    }
  }
  for (Index d = 0; d < n; ++d)
    if (mask[size_t(d)]) K(d, d) = 1.0;
  return K;
}

namespace {

std::vector<std::uint8_t> mask_from(const StructuredGrid& grid, std::span<const Index> fixed) {
  std::vector<std::uint8_t> mask(size_t(grid.num_dofs()), 0);
  for (Index d : fixed) {
    if (d < 0 || d >= grid.num_dofs()) throw std::invalid_argument("fixed dof out of range");
    mask[size_t(d)] = 1;
  }
  return mask;
}

}  // namespace

std::vector<double> apply_stiffness(const StructuredGrid& grid, const MaterialModel& mat,
                                    std::span<const double> z_filtered,
                                    std::span<const double> u,
                                    std::span<const Index> fixed_dofs) {
  const ElasticOperator op(grid, mat);
  const auto E = op.moduli(z_filtered);
  const auto mask = mask_from(grid, fixed_dofs);
  if (Index(u.size()) != grid.num_dofs())
    throw std::invalid_argument("apply_stiffness: displacement has wrong length");
  std::vector<double> y(u.size());
  op.apply(E, u, mask, y);
  return y;
}

std::vector<double> jacobi_diagonal(const StructuredGrid& grid, const MaterialModel& mat,
                                    std::span<const double> z_filtered,
                                    std::span<const Index> fixed_dofs) {
  const ElasticOperator op(grid, mat);
  return op.diagonal(op.moduli(z_filtered), mask_from(grid, fixed_dofs));
}

}  // namespace morphon
