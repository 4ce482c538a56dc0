#include "morphon/mesh.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace morphon {

StructuredGrid::StructuredGrid(int nelx, int nely, int nelz, Vec3 lengths)
    : dims_{nelx, nely, nelz}, lengths_(lengths) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 1)
      throw std::invalid_argument("grid: element count along axis " + std::to_string(a) +
                                  " must be >= 1, got " + std::to_string(dims_[a]));
    if (!(lengths_[a] > 0.0))
      throw std::invalid_argument("grid: domain length along axis " + std::to_string(a) +
                                  " must be > 0");
    h_[a] = lengths_[a] / dims_[a];
  }
}

std::array<int, 3> StructuredGrid::element_coords(Index e) const {
  if (e < 0 || e >= num_elements())
    throw std::out_of_range("element index " + std::to_string(e) + " out of range");
  const int i = int(e % dims_[0]);
  const Index r = e / dims_[0];
  return {i, int(r % dims_[1]), int(r / dims_[1])};
}

std::array<int, 3> StructuredGrid::node_coords(Index n) const {
  if (n < 0 || n >= num_nodes())
    throw std::out_of_range("node index " + std::to_string(n) + " out of range");
  const int i = int(n % (dims_[0] + 1));
  const Index r = n / (dims_[0] + 1);
  return {i, int(r % (dims_[1] + 1)), int(r / (dims_[1] + 1))};
}

std::array<Index, 8> StructuredGrid::element_nodes(Index e) const {
  const auto [i, j, k] = element_coords(e);
  std::array<Index, 8> nodes{};
  for (int c = 0; c < 8; ++c)
    nodes[c] = node_index(i + kHexCorners[c][0], j + kHexCorners[c][1], k + kHexCorners[c][2]);
  return nodes;
}

std::array<Index, 24> StructuredGrid::element_dofs(Index e) const {
  const auto nodes = element_nodes(e);
  std::array<Index, 24> dofs{};
  for (int c = 0; c < 8; ++c)
    for (int d = 0; d < 3; ++d) dofs[3 * c + d] = 3 * nodes[c] + d;
  return dofs;
}

Vec3 StructuredGrid::element_centroid(Index e) const {
  const auto ijk = element_coords(e);
  return {(ijk[0] + 0.5) * h_[0], (ijk[1] + 0.5) * h_[1], (ijk[2] + 0.5) * h_[2]};
}

Vec3 StructuredGrid::node_position(Index n) const {
  const auto ijk = node_coords(n);
  return {ijk[0] * h_[0], ijk[1] * h_[1], ijk[2] * h_[2]};
}

StructuredGrid build_grid(int nelx, int nely, int nelz, Vec3 lengths) {
  return StructuredGrid(nelx, nely, nelz, lengths);
}

std::array<Index, 24> element_dofs(const StructuredGrid& grid, Index element) {
  return grid.element_dofs(element);
}

std::vector<double> BoundaryConditions::load_vector(Index num_dofs) const {
  std::vector<double> f(size_t(num_dofs), 0.0);
  for (const auto& [dof, value] : loads) {
    if (dof < 0 || dof >= num_dofs) throw std::out_of_range("load dof out of range");
    f[size_t(dof)] += value;
  }
  return f;
}

std::vector<std::uint8_t> BoundaryConditions::fixed_mask(Index num_dofs) const {
  std::vector<std::uint8_t> mask(size_t(num_dofs), 0);
  for (Index d : fixed_dofs) {
    if (d < 0 || d >= num_dofs) throw std::out_of_range("fixed dof out of range");
    mask[size_t(d)] = 1;
  }
  return mask;
}

void validate(const BoundaryConditions& bc, const StructuredGrid& grid) {
  const Index n = grid.num_dofs();
  for (Index d : bc.fixed_dofs)
    if (d < 0 || d >= n) throw std::invalid_argument("fixed dof " + std::to_string(d) + " out of range");
  for (const auto& [d, v] : bc.loads) {
    if (d < 0 || d >= n) throw std::invalid_argument("loaded dof " + std::to_string(d) + " out of range");
    if (std::binary_search(bc.fixed_dofs.begin(), bc.fixed_dofs.end(), d))
      throw std::invalid_argument("dof " + std::to_string(d) + " is both loaded and fixed");
  }
  if (bc.fixed_dofs.size() < 6)
    throw std::invalid_argument("at least 6 dofs must be fixed to remove rigid-body modes");
}

namespace {

void normalize(std::vector<Index>& dofs) {
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
}

}  // namespace

BoundaryConditions cantilever_preset(const StructuredGrid& grid, double load_magnitude) {
  BoundaryConditions bc;
  for (int k = 0; k <= grid.nelz(); ++k)
    for (int j = 0; j <= grid.nely(); ++j) {
      const Index n = grid.node_index(0, j, k);
      for (int d = 0; d < 3; ++d) bc.fixed_dofs.push_back(3 * n + d);
    }
  normalize(bc.fixed_dofs);

  const double hy = grid.element_size()[1];
  for (int j = 0; j <= grid.nely(); ++j) {
    const double weight = (j == 0 || j == grid.nely()) ? 0.5 : 1.0;
    const Index n = grid.node_index(grid.nelx(), j, 0);
    bc.loads[3 * n + 2] += -load_magnitude * hy * weight;
  }
  return bc;
}

BoundaryConditions mbb_preset(const StructuredGrid& grid, double force) {
  if (grid.nelx() % 2 != 0 || grid.nely() % 2 != 0)
    throw std::invalid_argument("mbb preset requires even nelx and nely for a center load node");
  BoundaryConditions bc;
  for (int j = 0; j <= grid.nely(); ++j) {
    const Index left = grid.node_index(0, j, 0);
    const Index right = grid.node_index(grid.nelx(), j, 0);
    bc.fixed_dofs.push_back(3 * left + 2);
    bc.fixed_dofs.push_back(3 * right + 2);
    bc.fixed_dofs.push_back(3 * left + 0);
  }
  bc.fixed_dofs.push_back(3 * grid.node_index(0, 0, 0) + 1);
  bc.fixed_dofs.push_back(3 * grid.node_index(grid.nelx(), 0, 0) + 1);
  normalize(bc.fixed_dofs);

  const Index center = grid.node_index(grid.nelx() / 2, grid.nely() / 2, grid.nelz());
  bc.loads[3 * center + 2] = -force;
  return bc;
}

}  // namespace morphon
