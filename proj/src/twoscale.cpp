#include "morphon/twoscale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "morphon/parallel.hpp"
#include "morphon/sensitivity.hpp"

namespace morphon {

namespace {

StructuredGrid make_coarse(const StructuredGrid& fine, int nb) {
  if (nb < 1) throw std::invalid_argument("block size must be >= 1");
  static const char* axis[3] = {"nelx", "nely", "nelz"};
  for (int a = 0; a < 3; ++a)
    if (fine.dims()[a] % nb != 0)
      throw std::invalid_argument(std::string(axis[a]) + " = " + std::to_string(fine.dims()[a]) +
                                  " is not divisible by block size " + std::to_string(nb));
  return StructuredGrid(fine.nelx() / nb, fine.nely() / nb, fine.nelz() / nb, fine.lengths());
}

}  // namespace

CoarseMap::CoarseMap(const StructuredGrid& fine, int block_size)
    : fine_(fine), coarse_(make_coarse(fine, block_size)), nb_(block_size) {
  block_of_.resize(size_t(fine_.num_elements()));
  members_.resize(size_t(fine_.num_elements()));
  const Index bv = block_volume();
  for (Index e = 0; e < fine_.num_elements(); ++e) {
    const auto [i, j, k] = fine_.element_coords(e);
    const Index b = coarse_.element_index(i / nb_, j / nb_, k / nb_);
    const Index local = (i % nb_) + Index(nb_) * ((j % nb_) + Index(nb_) * (k % nb_));
    block_of_[size_t(e)] = b;
    members_[size_t(b * bv + local)] = e;
  }
}

std::span<const Index> CoarseMap::block_elements(Index b) const {
  if (b < 0 || b >= num_blocks()) throw std::out_of_range("block index " + std::to_string(b) + " out of range");
  const Index bv = block_volume();
  return std::span<const Index>(members_).subspan(size_t(b * bv), size_t(bv));
}

Index CoarseMap::coarse_node_of(Index fine_node) const {
  const auto ijk = fine_.node_coords(fine_node);
  int c[3];
  for (int a = 0; a < 3; ++a) c[a] = (2 * ijk[a] + nb_) / (2 * nb_);
  return coarse_.node_index(c[0], c[1], c[2]);
}

std::vector<double> coarsen_density(std::span<const double> z, const CoarseMap& map) {
  if (Index(z.size()) != map.fine_grid().num_elements())
    throw std::invalid_argument("coarsen_density: density length " + std::to_string(z.size()) +
                                " != fine element count");
  std::vector<double> zc(size_t(map.num_blocks()));
  const double inv = 1.0 / double(map.block_volume());
  for (Index b = 0; b < map.num_blocks(); ++b) {
    double s = 0.0;
    for (Index e : map.block_elements(b)) s += z[size_t(e)];
    zc[size_t(b)] = std::clamp(s * inv, 0.0, 1.0);
  }
  return zc;
}

BoundaryConditions restrict_bc(const BoundaryConditions& fine_bc, const CoarseMap& map) {
  BoundaryConditions out;
  for (Index d : fine_bc.fixed_dofs)
    out.fixed_dofs.push_back(3 * map.coarse_node_of(d / 3) + d % 3);
  std::sort(out.fixed_dofs.begin(), out.fixed_dofs.end());
  out.fixed_dofs.erase(std::unique(out.fixed_dofs.begin(), out.fixed_dofs.end()), out.fixed_dofs.end());
  for (const auto& [d, value] : fine_bc.loads) out.loads[3 * map.coarse_node_of(d / 3) + d % 3] += value;
  return out;
}

SolveResult solve_coarse(std::span<const double> z_coarse, const StructuredGrid& coarse_grid,
                         const BoundaryConditions& coarse_bc, const MaterialModel& mat,
                         std::span<const double> u0, double tol, int max_iters) {
  const StateSolver solver(coarse_grid, mat, coarse_bc);
  return solver.solve(z_coarse, u0, tol, max_iters);
}

double coarse_displacement_rms(std::span<const double> u, std::span<const std::uint8_t> mask) {
  if (u.size() != mask.size()) throw std::invalid_argument("coarse rms: mask length mismatch");
  double s = 0.0;
  Index n = 0;
  for (size_t d = 0; d < u.size(); ++d)
    if (!mask[d]) {
      s += u[d] * u[d];
      ++n;
    }
  return n ? std::sqrt(s / double(n)) : 0.0;
}

namespace {

void fill_features(std::span<const double> z, std::span<const double> uc, double inv_rms,
                   const CoarseMap& map, Index block, double* out) {
  Index pos = 0;
  for (Index e : map.block_elements(block)) out[pos++] = z[size_t(e)];
  const auto& cg = map.coarse_grid();
  for (Index node : cg.element_nodes(block))
    for (int d = 0; d < 3; ++d) out[pos++] = uc[size_t(3 * node + d)] * inv_rms;
  const auto c = cg.element_centroid(block);
  for (int a = 0; a < 3; ++a) out[pos++] = c[a] / cg.lengths()[a];
}

void check_inputs(std::span<const double> z, std::span<const double> uc,
                  std::span<const std::uint8_t> mask, const CoarseMap& map) {
  if (Index(z.size()) != map.fine_grid().num_elements())
    throw std::invalid_argument("features: density length does not match the fine grid");
  if (Index(uc.size()) != map.coarse_grid().num_dofs() || mask.size() != uc.size())
    throw std::invalid_argument("features: coarse displacement length does not match the coarse grid");
}

double inverse_scale(std::span<const double> uc, std::span<const std::uint8_t> mask) {
  const double rms = coarse_displacement_rms(uc, mask);
  return rms > 0.0 ? 1.0 / rms : 0.0;
}

}  // namespace

std::vector<double> make_features(std::span<const double> z, std::span<const double> u_coarse,
                                  std::span<const std::uint8_t> mask, const CoarseMap& map,
                                  Index block) {
  check_inputs(z, u_coarse, mask, map);
  if (block < 0 || block >= map.num_blocks())
    throw std::out_of_range("make_features: block index " + std::to_string(block) + " out of range");
  std::vector<double> f(size_t(map.feature_dim()));
  fill_features(z, u_coarse, inverse_scale(u_coarse, mask), map, block, f.data());
  return f;
}

Eigen::MatrixXd make_all_features(std::span<const double> z, std::span<const double> u_coarse,
                                  std::span<const std::uint8_t> mask, const CoarseMap& map) {
  check_inputs(z, u_coarse, mask, map);
  const double inv = inverse_scale(u_coarse, mask);
  Eigen::MatrixXd X(map.feature_dim(), map.num_blocks());
  const int nthreads = thread_count();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (Index b = 0; b < map.num_blocks(); ++b) fill_features(z, u_coarse, inv, map, b, X.col(b).data());
  return X;
}

std::vector<GradientSample> make_samples(std::span<const double> z,
                                         std::span<const double> u_coarse,
                                         std::span<const std::uint8_t> mask, const CoarseMap& map,
                                         std::span<const double> gradient, int iteration,
                                         double g_floor) {
  if (Index(gradient.size()) != map.fine_grid().num_elements())
    throw std::invalid_argument("make_samples: gradient length does not match the fine grid");
  const Eigen::MatrixXd X = make_all_features(z, u_coarse, mask, map);
  std::vector<GradientSample> samples(size_t(map.num_blocks()));
  for (Index b = 0; b < map.num_blocks(); ++b) {
    auto& s = samples[size_t(b)];
    s.features.assign(X.col(b).data(), X.col(b).data() + X.rows());
    s.iteration = iteration;
    s.target_log.reserve(size_t(map.block_volume()));
    for (Index e : map.block_elements(b))
      s.target_log.push_back(std::log10(std::max(-gradient[size_t(e)], g_floor)));
  }
  return samples;
}

TargetTransform::TargetTransform(double g_floor) : g_floor_(g_floor) {
  if (!(g_floor > 0.0)) throw std::invalid_argument("target transform: g_floor must be > 0");
}

double TargetTransform::stddev() const {
  return count_ > 0 ? std::sqrt(m2_ / double(count_)) : 0.0;
}

double TargetTransform::log_magnitude(double g) const { return std::log10(std::max(-g, g_floor_)); }

void TargetTransform::ingest_log(std::span<const double> values) {
  for (double y : values) {
    ++count_;
    const double delta = y - mean_;
    mean_ += delta / double(count_);
    m2_ += delta * (y - mean_);
  }
}

void TargetTransform::ingest_gradient(std::span<const double> g) {
  std::vector<double> logs(g.size());
  for (size_t i = 0; i < g.size(); ++i) logs[i] = log_magnitude(g[i]);
  ingest_log(logs);
}

double TargetTransform::standardize(double log_magnitude) const {
  const double s = stddev();
  if (!(s > 0.0)) throw std::logic_error("target transform: standard deviation is zero");
  return (log_magnitude - mean_) / s;
}

std::vector<double> TargetTransform::transform(std::span<const double> g_block) const {
  std::vector<double> y(g_block.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = standardize(log_magnitude(g_block[i]));
  return y;
}

double TargetTransform::inverse_one(double y) const {
  const double s = stddev();
  if (!(s > 0.0)) throw std::logic_error("target transform: standard deviation is zero");
  return -std::max(std::pow(10.0, s * y + mean_), g_floor_);
}

std::vector<double> TargetTransform::inverse(std::span<const double> y) const {
  std::vector<double> g(y.size());
  for (size_t i = 0; i < y.size(); ++i) g[i] = inverse_one(y[i]);
  return g;
}

void TargetTransform::restore(std::int64_t count, double mean, double m2, double g_floor) {
  if (count < 0 || m2 < 0.0 || !(g_floor > 0.0))
    throw std::invalid_argument("target transform: invalid restored statistics");
  count_ = count;
  mean_ = mean;
  m2_ = m2;
  g_floor_ = g_floor;
}

}  // namespace morphon
