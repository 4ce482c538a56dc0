#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "morphon/fem.hpp"
#include "morphon/linsolve.hpp"
#include "morphon/mesh.hpp"

namespace morphon {

// Partition of the fine design grid into N_B x N_B x N_B blocks. Each block
// is one element of the coarse grid, which spans the same physical box.
class CoarseMap {
public:
  CoarseMap(const StructuredGrid& fine, int block_size);

  int block_size() const { return nb_; }
  const StructuredGrid& fine_grid() const { return fine_; }
  const StructuredGrid& coarse_grid() const { return coarse_; }
  Index num_blocks() const { return coarse_.num_elements(); }
  Index block_volume() const { return Index(nb_) * nb_ * nb_; }

  Index block_of(Index fine_element) const { return block_of_[size_t(fine_element)]; }
  // Fine elements of block b in local lexicographic order (x fastest).
  std::span<const Index> block_elements(Index b) const;

  // Nearest coarse node of a fine node (ties round up).
  Index coarse_node_of(Index fine_node) const;

  Index feature_dim() const { return block_volume() + 27; }
  Index target_dim() const { return block_volume(); }

private:
  StructuredGrid fine_;
  StructuredGrid coarse_;
  int nb_;
  std::vector<Index> block_of_;
  std::vector<Index> members_;
};

std::vector<double> coarsen_density(std::span<const double> z, const CoarseMap& map);

// A coarse dof is fixed iff some fine node in its footprint (the fine nodes
// nearest to it) has that dof fixed; fine loads move to the nearest coarse node.
BoundaryConditions restrict_bc(const BoundaryConditions& fine_bc, const CoarseMap& map);

// K_C(z_C) u_C = f_C with the same SIMP law as the fine problem. Propagates
// solver errors; the caller checks stats.converged.
SolveResult solve_coarse(std::span<const double> z_coarse, const StructuredGrid& coarse_grid,
                         const BoundaryConditions& coarse_bc, const MaterialModel& mat,
                         std::span<const double> u0, double tol, int max_iters);

// Root-mean-square of u_C over free coarse dofs (0 when all are zero).
double coarse_displacement_rms(std::span<const double> u_coarse,
                               std::span<const std::uint8_t> coarse_fixed_mask);

// Feature vector of one block:
//   [ N_B^3 fine densities of the block, local lexicographic order,
//     24 coarse displacements at the 8 corners of the block's coarse element
//        (corner order as in kHexCorners, components x,y,z), divided by the
//        coarse RMS displacement,
//     block centroid divided by the domain lengths (3) ]
std::vector<double> make_features(std::span<const double> z, std::span<const double> u_coarse,
                                  std::span<const std::uint8_t> coarse_fixed_mask,
                                  const CoarseMap& map, Index block);

// Features of every block as columns of a (feature_dim x num_blocks) matrix.
Eigen::MatrixXd make_all_features(std::span<const double> z, std::span<const double> u_coarse,
                                  std::span<const std::uint8_t> coarse_fixed_mask,
                                  const CoarseMap& map);

struct GradientSample {
  std::vector<double> features;
  // log10(max(-g_i, g_floor)) of the block's exact gradient components.
  std::vector<double> target_log;
  int iteration = 0;
};

std::vector<GradientSample> make_samples(std::span<const double> z,
                                         std::span<const double> u_coarse,
                                         std::span<const std::uint8_t> coarse_fixed_mask,
                                         const CoarseMap& map, std::span<const double> gradient,
                                         int iteration, double g_floor);

// Global log-magnitude standardization of gradient targets:
//   y = (log10(max(-g, g_floor)) - mean) / std
// with running (pooled) mean and population standard deviation.
class TargetTransform {
public:
  explicit TargetTransform(double g_floor = 1e-12);

  double g_floor() const { return g_floor_; }
  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double stddev() const;

  double log_magnitude(double g) const;
  void ingest_log(std::span<const double> log_magnitudes);
  void ingest_gradient(std::span<const double> g);

  std::vector<double> transform(std::span<const double> g_block) const;
  double standardize(double log_magnitude) const;
  std::vector<double> inverse(std::span<const double> y) const;
  double inverse_one(double y) const;

  // Raw accumulator state for checkpointing.
  double m2() const { return m2_; }
  void restore(std::int64_t count, double mean, double m2, double g_floor);

private:
  double g_floor_;
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace morphon
