#include "morphon/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "morphon/parallel.hpp"

namespace morphon {

FilterOperator::FilterOperator(const StructuredGrid& grid, double radius) : radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("filter: radius must be > 0");
  const auto& h = grid.element_size();
  int reach[3];
  for (int a = 0; a < 3; ++a) reach[a] = int(std::ceil(radius / h[a]));

  const Index n = grid.num_elements();
  row_ptr_.reserve(size_t(n) + 1);
  row_ptr_.push_back(0);
  row_sum_.resize(size_t(n));
  for (Index e = 0; e < n; ++e) {
    const auto [i, j, k] = grid.element_coords(e);
    double sum = 0.0;
    for (int k2 = std::max(0, k - reach[2]); k2 <= std::min(grid.nelz() - 1, k + reach[2]); ++k2)
      for (int j2 = std::max(0, j - reach[1]); j2 <= std::min(grid.nely() - 1, j + reach[1]); ++j2)
        for (int i2 = std::max(0, i - reach[0]); i2 <= std::min(grid.nelx() - 1, i + reach[0]); ++i2) {
          const double dx = (i2 - i) * h[0], dy = (j2 - j) * h[1], dz = (k2 - k) * h[2];
          const double w = radius - std::sqrt(dx * dx + dy * dy + dz * dz);
          if (w <= 0.0) continue;
          cols_.push_back(grid.element_index(i2, j2, k2));
          raw_.push_back(w);
          sum += w;
        }
    row_sum_[size_t(e)] = sum;
    row_ptr_.push_back(Index(cols_.size()));
  }
}

void FilterOperator::check(std::span<const double> x, const char* what) const {
  if (Index(x.size()) != size())
    throw std::invalid_argument(std::string("filter ") + what + ": length " +
                                std::to_string(x.size()) + " != " + std::to_string(size()));
}

std::vector<double> FilterOperator::apply(std::span<const double> z) const {
  check(z, "apply");
  std::vector<double> out(z.size());
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (Index i = 0; i < size(); ++i) {
    double s = 0.0;
    for (Index p = row_ptr_[size_t(i)]; p < row_ptr_[size_t(i) + 1]; ++p)
      s += raw_[size_t(p)] * z[size_t(cols_[size_t(p)])];
    out[size_t(i)] = s / row_sum_[size_t(i)];
  }
  return out;
}

std::vector<double> FilterOperator::apply_transpose(std::span<const double> v) const {
  check(v, "apply_transpose");
  std::vector<double> scaled(v.size());
  for (size_t i = 0; i < v.size(); ++i) scaled[i] = v[i] / row_sum_[i];
  std::vector<double> out(v.size());
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (Index j = 0; j < size(); ++j) {
    double s = 0.0;
    for (Index p = row_ptr_[size_t(j)]; p < row_ptr_[size_t(j) + 1]; ++p)
      s += raw_[size_t(p)] * scaled[size_t(cols_[size_t(p)])];
    out[size_t(j)] = s;
  }
  return out;
}

double FilterOperator::weight(Index i, Index j) const {
  if (i < 0 || i >= size() || j < 0 || j >= size()) throw std::out_of_range("filter weight index");
  const auto begin = cols_.begin() + row_ptr_[size_t(i)];
  const auto end = cols_.begin() + row_ptr_[size_t(i) + 1];
  const auto it = std::find(begin, end, j);
  if (it == end) return 0.0;
  return raw_[size_t(it - cols_.begin())] / row_sum_[size_t(i)];
}

FilterOperator build_filter(const StructuredGrid& grid, double radius) {
  return FilterOperator(grid, radius);
}

}  // namespace morphon
