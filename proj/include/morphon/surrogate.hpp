#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "morphon/twoscale.hpp"

namespace morphon {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Buffers viewed through Eigen maps. Eigen's vectorized kernels peel by
// address, so a fixed alignment keeps results reproducible between runs.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

// Fully connected network with dense connectivity: hidden layer l reads the
// concatenation [x, h_0, ..., h_{l-1}] and the linear output head reads
// [x, h_0, ..., h_{L-1}]. Hidden activations are ReLU.
//
// Parameters live in one flat buffer, layer by layer, each layer as its
// row-major weight block followed by its bias.
class DenseMlp {
public:
  DenseMlp(int input_dim, int width, int layers, int output_dim);

  int input_dim() const { return input_; }
  int width() const { return width_; }
  int layers() const { return layers_; }
  int output_dim() const { return output_; }

  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  Eigen::Map<const RowMatrix> weight(int layer) const;  // layer == layers() is the head
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  // Columns of X are samples; returns output_dim x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;

  // Mean squared error over all entries of the batch and its gradient with
  // respect to the flat parameter buffer.
  double loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           std::span<double> grad) const;
  double loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) const;

  std::int64_t steps_trained = 0;

private:
  std::size_t weight_offset(int layer) const { return offsets_[size_t(layer)]; }
  int fan_in(int layer) const { return input_ + layer * width_; }
  int fan_out(int layer) const { return layer == layers_ ? output_ : width_; }

  Eigen::MatrixXd activations(const Eigen::MatrixXd& X) const;

  int input_, width_, layers_, output_;
  std::vector<std::size_t> offsets_;
  AlignedBuffer params_;
};

// Closed-form parameter count of the dense-connectivity network.
std::size_t dense_mlp_parameter_count(int input_dim, int width, int layers, int output_dim);

// Hidden weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), head weights
// ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)), biases zero. Deterministic in seed.
DenseMlp init_model(int input_dim, int width, int layers, int output_dim, std::uint64_t seed);

Eigen::MatrixXd forward(const DenseMlp& model, const Eigen::MatrixXd& batch);

struct LearningRateSchedule {
  double base = 0.0005;
  double factor = 0.5;
  std::int64_t every = 500;

  double at(std::int64_t step) const;
};

struct TrainState {
  explicit TrainState(const DenseMlp& model, std::uint64_t seed = 0, int batch_size = 256);

  std::vector<double> m;  // Adam first moment
  std::vector<double> v;  // Adam second moment
  std::int64_t step = 0;  // cumulative across sessions
  LearningRateSchedule schedule;
  int batch_size = 256;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  std::mt19937_64 rng;
};

class OnlineDataset {
public:
  void append(GradientSample sample);
  void append(std::vector<GradientSample> samples);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const GradientSample& operator[](std::size_t i) const { return samples_[i]; }

  // Standardized targets under tf, samples as columns.
  Eigen::MatrixXd feature_matrix() const;
  Eigen::MatrixXd target_matrix(const TargetTransform& tf) const;

private:
  std::vector<GradientSample> samples_;
};

struct TrainReport {
  std::int64_t steps = 0;
  double first_batch_loss = 0.0;
  double last_batch_loss = 0.0;
};

// T_steps Adam steps on uniformly drawn minibatches (without replacement
// within a batch) minimizing MSE against standardized targets. The
// learning rate follows state.schedule at the cumulative step counter.
TrainReport train(DenseMlp& model, TrainState& state, const OnlineDataset& data,
                  const TargetTransform& tf, std::int64_t T_steps);

// Same, on explicit matrices (columns are samples).
TrainReport train(DenseMlp& model, TrainState& state, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, std::int64_t T_steps);

// Synthetic gradient over all fine elements: features for every block,
// one batched forward pass, inverse target transform, scatter to fine order.
std::vector<double> predict_full_gradient(const DenseMlp& model, std::span<const double> z,
                                          std::span<const double> u_coarse,
                                          std::span<const std::uint8_t> coarse_fixed_mask,
                                          const CoarseMap& map, const TargetTransform& tf);

// Checkpoint layout (all little-endian):
//   char[8] "MRPHCKPT", u32 version (=1),
//   u32 input_dim, u32 width, u32 layers, u32 output_dim, u64 parameter_count,
//   f64[parameter_count] parameters (row-major weight block, bias, per layer, head last),
//   i64 steps_trained, i64 adam_step, f64[parameter_count] adam_m, f64[parameter_count] adam_v,
//   i64 target_count, f64 target_mean, f64 target_m2, f64 g_floor
// The minibatch RNG is not stored; a loaded state draws batches from seed 0.
void save_checkpoint(const std::string& path, const DenseMlp& model, const TrainState& state,
                     const TargetTransform& tf);

struct Checkpoint {
  DenseMlp model;
  TrainState state;
  TargetTransform transform;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace morphon
