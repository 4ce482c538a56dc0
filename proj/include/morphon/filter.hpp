#pragma once

#include <span>
#include <vector>

#include "morphon/mesh.hpp"

namespace morphon {

// Linear cone density filter P = D^{-1} W with W_ij = max(0, R - |c_i - c_j|)
// over element centroids and D = diag(row sums of W). W is symmetric and
// stored once in compressed rows; P^T v is evaluated as W (D^{-1} v).
class FilterOperator {
public:
  FilterOperator(const StructuredGrid& grid, double radius);

  double radius() const { return radius_; }
  Index size() const { return Index(row_sum_.size()); }

  std::vector<double> apply(std::span<const double> z) const;
  std::vector<double> apply_transpose(std::span<const double> v) const;

  // Normalized weight P_ij (0 when outside the support).
  double weight(Index i, Index j) const;
  Index row_nonzeros(Index i) const { return row_ptr_[size_t(i) + 1] - row_ptr_[size_t(i)]; }

private:
  void check(std::span<const double> x, const char* what) const;

  double radius_;
  std::vector<Index> row_ptr_;
  std::vector<Index> cols_;
  std::vector<double> raw_;  // unnormalized weights
  std::vector<double> row_sum_;
};

FilterOperator build_filter(const StructuredGrid& grid, double radius);

}  // namespace morphon
