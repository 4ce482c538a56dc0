#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace morphon {

using Index = std::int64_t;
using Vec3 = std::array<double, 3>;

// Structured hexahedral grid over the box [0,Lx] x [0,Ly] x [0,Lz].
//
// Numbering is lexicographic with x fastest, then y, then z:
//   node(i,j,k)    = i + (nelx+1) * (j + (nely+1) * k)
//   element(i,j,k) = i + nelx * (j + nely * k)
//   dof(node, c)   = 3 * node + c,   c in {0:x, 1:y, 2:z}
//
// Element corners follow the usual hex8 ordering
//   0:(0,0,0) 1:(1,0,0) 2:(1,1,0) 3:(0,1,0) 4:(0,0,1) 5:(1,0,1) 6:(1,1,1) 7:(0,1,1)
// which is also the row/column ordering of the element stiffness matrix.
class StructuredGrid {
public:
  StructuredGrid(int nelx, int nely, int nelz, Vec3 lengths);

  int nelx() const { return dims_[0]; }
  int nely() const { return dims_[1]; }
  int nelz() const { return dims_[2]; }
  const std::array<int, 3>& dims() const { return dims_; }
  const Vec3& lengths() const { return lengths_; }
  const Vec3& element_size() const { return h_; }

  Index num_elements() const { return Index(dims_[0]) * dims_[1] * dims_[2]; }
  Index num_nodes() const { return Index(dims_[0] + 1) * (dims_[1] + 1) * (dims_[2] + 1); }
  Index num_dofs() const { return 3 * num_nodes(); }

  Index node_index(int i, int j, int k) const {
    return i + Index(dims_[0] + 1) * (j + Index(dims_[1] + 1) * k);
  }
  Index element_index(int i, int j, int k) const {
    return i + Index(dims_[0]) * (j + Index(dims_[1]) * k);
  }
  std::array<int, 3> element_coords(Index e) const;
  std::array<int, 3> node_coords(Index n) const;

  std::array<Index, 8> element_nodes(Index e) const;
  std::array<Index, 24> element_dofs(Index e) const;

  Vec3 element_centroid(Index e) const;
  Vec3 node_position(Index n) const;
  double element_volume() const { return h_[0] * h_[1] * h_[2]; }

  bool operator==(const StructuredGrid&) const = default;

private:
  std::array<int, 3> dims_;
  Vec3 lengths_;
  Vec3 h_;
};

// Local corner offsets (di, dj, dk) in element-stiffness ordering.
inline constexpr std::array<std::array<int, 3>, 8> kHexCorners{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

StructuredGrid build_grid(int nelx, int nely, int nelz, Vec3 lengths);

std::array<Index, 24> element_dofs(const StructuredGrid& grid, Index element);

struct BoundaryConditions {
  std::vector<Index> fixed_dofs;  // sorted, unique
  std::map<Index, double> loads;  // dof -> force

  std::vector<double> load_vector(Index num_dofs) const;
  std::vector<std::uint8_t> fixed_mask(Index num_dofs) const;

  bool operator==(const BoundaryConditions&) const = default;
};

// Throws std::invalid_argument on out-of-range indices or when a loaded dof
// is also fixed.
void validate(const BoundaryConditions& bc, const StructuredGrid& grid);

// Face x=0 clamped; line load of intensity `load_magnitude` in -z along the
// lower edge (z=0) of face x=Lx, lumped trapezoidally onto the edge nodes.
BoundaryConditions cantilever_preset(const StructuredGrid& grid, double load_magnitude);

// Point load -F in z at the center of the top face (z=Lz). Supports:
// z fixed along both bottom edges x=0 and x=Lx (z=0), x fixed along the
// x=0 bottom edge, y fixed at the bottom corners (0,0,0) and (Lx,0,0).
// Requires even nelx and nely.
BoundaryConditions mbb_preset(const StructuredGrid& grid, double force);

}  // namespace morphon
