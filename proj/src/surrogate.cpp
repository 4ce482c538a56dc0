#include "morphon/surrogate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace morphon {

std::size_t dense_mlp_parameter_count(int input_dim, int width, int layers, int output_dim) {
  std::size_t n = 0;
  for (int l = 0; l < layers; ++l) n += std::size_t(width) * (input_dim + l * width) + width;
  n += std::size_t(output_dim) * (input_dim + layers * width) + output_dim;
  return n;
}

DenseMlp::DenseMlp(int input_dim, int width, int layers, int output_dim)
    : input_(input_dim), width_(width), layers_(layers), output_(output_dim) {
  if (input_dim < 1 || width < 1 || layers < 1 || output_dim < 1)
    throw std::invalid_argument("DenseMlp: all dimensions must be positive");
  std::size_t off = 0;
  for (int l = 0; l <= layers_; ++l) {
    offsets_.push_back(off);
    off += std::size_t(fan_out(l)) * fan_in(l) + fan_out(l);
  }
  params_.assign(off, 0.0);
}

Eigen::Map<const RowMatrix> DenseMlp::weight(int layer) const {
  return {params_.data() + weight_offset(layer), fan_out(layer), fan_in(layer)};
}

Eigen::Map<const Eigen::VectorXd> DenseMlp::bias(int layer) const {
  return {params_.data() + weight_offset(layer) + std::size_t(fan_out(layer)) * fan_in(layer),
          fan_out(layer)};
}

Eigen::MatrixXd DenseMlp::activations(const Eigen::MatrixXd& X) const {
  if (X.rows() != input_)
    throw std::invalid_argument("DenseMlp: feature length " + std::to_string(X.rows()) +
                                " != input_dim " + std::to_string(input_));
  Eigen::MatrixXd A(input_ + Eigen::Index(layers_) * width_, X.cols());
  A.topRows(input_) = X;
  for (int l = 0; l < layers_; ++l) {
    Eigen::MatrixXd Z = weight(l) * A.topRows(fan_in(l));
    Z.colwise() += bias(l);
    A.middleRows(fan_in(l), width_) = Z.cwiseMax(0.0);
  }
  return A;
}

Eigen::MatrixXd DenseMlp::forward(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd A = activations(X);
  Eigen::MatrixXd out = weight(layers_) * A;
  out.colwise() += bias(layers_);
  return out;
}

double DenseMlp::loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) const {
  if (Y.rows() != output_ || Y.cols() != X.cols())
    throw std::invalid_argument("DenseMlp: target matrix has wrong shape");
  return (forward(X) - Y).squaredNorm() / double(Y.size());
}

double DenseMlp::loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                   std::span<double> grad) const {
  if (Y.rows() != output_ || Y.cols() != X.cols())
    throw std::invalid_argument("DenseMlp: target matrix has wrong shape");
  if (grad.size() != params_.size()) throw std::invalid_argument("DenseMlp: gradient buffer has wrong size");
  const Eigen::MatrixXd A = activations(X);
  Eigen::MatrixXd out = weight(layers_) * A;
  out.colwise() += bias(layers_);
  const Eigen::MatrixXd diff = out - Y;
  const double loss = diff.squaredNorm() / double(Y.size());

  auto grad_weight = [&](int l) {
    return Eigen::Map<RowMatrix>(grad.data() + weight_offset(l), fan_out(l), fan_in(l));
  };
  auto grad_bias = [&](int l) {
    return Eigen::Map<Eigen::VectorXd>(
        grad.data() + weight_offset(l) + std::size_t(fan_out(l)) * fan_in(l), fan_out(l));
  };

  const Eigen::MatrixXd d_out = diff * (2.0 / double(Y.size()));
  grad_weight(layers_).noalias() = d_out * A.transpose();
  grad_bias(layers_) = d_out.rowwise().sum();
  Eigen::MatrixXd dA = weight(layers_).transpose() * d_out;
  for (int l = layers_ - 1; l >= 0; --l) {
    const Eigen::Index r = fan_in(l);
    const Eigen::MatrixXd dZ =
        (A.middleRows(r, width_).array() > 0.0).select(dA.middleRows(r, width_), 0.0);
    grad_weight(l).noalias() = dZ * A.topRows(r).transpose();
    grad_bias(l) = dZ.rowwise().sum();
    if (l > 0) dA.topRows(r).noalias() += weight(l).transpose() * dZ;
  }
  return loss;
}

DenseMlp init_model(int input_dim, int width, int layers, int output_dim, std::uint64_t seed) {
  DenseMlp model(input_dim, width, layers, output_dim);
  std::mt19937_64 rng(seed);
  auto params = model.parameters();
  std::size_t off = 0;
  for (int l = 0; l <= layers; ++l) {
    const int fan_in = input_dim + l * width;
    const int fan_out = l == layers ? output_dim : width;
    const double limit = std::sqrt((l == layers ? 3.0 : 6.0) / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < std::size_t(fan_in) * fan_out; ++i) params[off + i] = dist(rng);
    off += std::size_t(fan_in) * fan_out + fan_out;  // biases stay zero
  }
  return model;
}

Eigen::MatrixXd forward(const DenseMlp& model, const Eigen::MatrixXd& batch) {
  return model.forward(batch);
}

double LearningRateSchedule::at(std::int64_t step) const {
  return base * std::pow(factor, double(step / every));
}

TrainState::TrainState(const DenseMlp& model, std::uint64_t seed, int batch)
    : m(model.parameter_count(), 0.0), v(model.parameter_count(), 0.0), batch_size(batch), rng(seed) {
  if (batch < 1) throw std::invalid_argument("TrainState: batch size must be >= 1");
}

void OnlineDataset::append(GradientSample sample) {
  if (!samples_.empty() && (sample.features.size() != samples_.front().features.size() ||
                            sample.target_log.size() != samples_.front().target_log.size()))
    throw std::invalid_argument("dataset: sample dimensions differ from the first sample");
  samples_.push_back(std::move(sample));
}

void OnlineDataset::append(std::vector<GradientSample> samples) {
  for (auto& s : samples) append(std::move(s));
}

Eigen::MatrixXd OnlineDataset::feature_matrix() const {
  if (samples_.empty()) return {};
  Eigen::MatrixXd X(Eigen::Index(samples_.front().features.size()), Eigen::Index(samples_.size()));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (Eigen::Index(samples_[i].features.size()) != X.rows())
      throw std::invalid_argument("dataset: inconsistent feature lengths");
    X.col(Eigen::Index(i)) = Eigen::Map<const Eigen::VectorXd>(samples_[i].features.data(), X.rows());
  }
  return X;
}

Eigen::MatrixXd OnlineDataset::target_matrix(const TargetTransform& tf) const {
  if (samples_.empty()) return {};
  Eigen::MatrixXd Y(Eigen::Index(samples_.front().target_log.size()), Eigen::Index(samples_.size()));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (Eigen::Index(samples_[i].target_log.size()) != Y.rows())
      throw std::invalid_argument("dataset: inconsistent target lengths");
    for (Eigen::Index r = 0; r < Y.rows(); ++r)
      Y(r, Eigen::Index(i)) = tf.standardize(samples_[i].target_log[std::size_t(r)]);
  }
  return Y;
}

TrainReport train(DenseMlp& model, TrainState& state, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, std::int64_t T_steps) {
  if (X.cols() == 0) throw std::invalid_argument("train: dataset is empty");
  if (X.cols() != Y.cols()) throw std::invalid_argument("train: feature and target counts differ");
  if (state.m.size() != model.parameter_count())
    throw std::invalid_argument("train: optimizer state does not match the model");
  const Eigen::Index n = X.cols();
  const Eigen::Index batch = std::min<Eigen::Index>(state.batch_size, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));

  Eigen::MatrixXd Xb(X.rows(), batch), Yb(Y.rows(), batch);
  AlignedBuffer grad(model.parameter_count());
  auto params = model.parameters();
  TrainReport report;
  for (std::int64_t s = 0; s < T_steps; ++s) {
    for (Eigen::Index i = 0; i < batch; ++i) {
      const auto j = i + Eigen::Index(state.rng() % std::uint64_t(n - i));
      std::swap(order[std::size_t(i)], order[std::size_t(j)]);
      Xb.col(i) = X.col(order[std::size_t(i)]);
      Yb.col(i) = Y.col(order[std::size_t(i)]);
    }
    const double loss = model.loss_and_gradient(Xb, Yb, grad);
    if (s == 0) report.first_batch_loss = loss;
    report.last_batch_loss = loss;

    const double lr = state.schedule.at(state.step);
    ++state.step;
    const double t = double(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p] = state.beta1 * state.m[p] + (1.0 - state.beta1) * grad[p];
      state.v[p] = state.beta2 * state.v[p] + (1.0 - state.beta2) * grad[p] * grad[p];
      params[p] -= lr * (state.m[p] / c1) / (std::sqrt(state.v[p] / c2) + state.epsilon);
    }
    ++model.steps_trained;
    ++report.steps;
  }
  return report;
}

TrainReport train(DenseMlp& model, TrainState& state, const OnlineDataset& data,
                  const TargetTransform& tf, std::int64_t T_steps) {
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");
  return train(model, state, data.feature_matrix(), data.target_matrix(tf), T_steps);
}

std::vector<double> predict_full_gradient(const DenseMlp& model, std::span<const double> z,
                                          std::span<const double> u_coarse,
                                          std::span<const std::uint8_t> mask, const CoarseMap& map,
                                          const TargetTransform& tf) {
  if (model.steps_trained == 0) throw std::logic_error("predict_full_gradient: model has not been trained");
  if (model.input_dim() != map.feature_dim() || model.output_dim() != map.target_dim())
    throw std::invalid_argument("predict_full_gradient: model dimensions do not match the block size");
  const Eigen::MatrixXd X = make_all_features(z, u_coarse, mask, map);
  const Eigen::MatrixXd Y = model.forward(X);
  std::vector<double> g(z.size());
  for (Index b = 0; b < map.num_blocks(); ++b) {
    const auto elems = map.block_elements(b);
    for (std::size_t i = 0; i < elems.size(); ++i)
      g[std::size_t(elems[i])] = tf.inverse_one(Y(Eigen::Index(i), b));
  }
  return g;
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'R', 'P', 'H', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_array(std::ofstream& os, std::span<const double> xs) {
  os.write(reinterpret_cast<const char*>(xs.data()), std::streamsize(xs.size_bytes()));
}

template <class T>
T get(std::ifstream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw std::runtime_error("checkpoint: truncated file");
  return value;
}

void get_array(std::ifstream& is, std::span<double> xs) {
  if (!is.read(reinterpret_cast<char*>(xs.data()), std::streamsize(xs.size_bytes())))
    throw std::runtime_error("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const std::string& path, const DenseMlp& model, const TrainState& state,
                     const TargetTransform& tf) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, std::uint32_t(model.input_dim()));
  put<std::uint32_t>(os, std::uint32_t(model.width()));
  put<std::uint32_t>(os, std::uint32_t(model.layers()));
  put<std::uint32_t>(os, std::uint32_t(model.output_dim()));
  put<std::uint64_t>(os, model.parameter_count());
  put_array(os, model.parameters());
  put<std::int64_t>(os, model.steps_trained);
  put<std::int64_t>(os, state.step);
  put_array(os, state.m);
  put_array(os, state.v);
  put<std::int64_t>(os, tf.count());
  put<double>(os, tf.mean());
  put<double>(os, tf.m2());
  put<double>(os, tf.g_floor());
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const auto in = get<std::uint32_t>(is), width = get<std::uint32_t>(is);
  const auto layers = get<std::uint32_t>(is), out = get<std::uint32_t>(is);
  const auto count = get<std::uint64_t>(is);
  DenseMlp model(static_cast<int>(in), static_cast<int>(width), static_cast<int>(layers),
                 static_cast<int>(out));
  if (count != model.parameter_count()) throw std::runtime_error("checkpoint: parameter count mismatch");
  get_array(is, model.parameters());
  model.steps_trained = get<std::int64_t>(is);
  TrainState state(model);
  state.step = get<std::int64_t>(is);
  get_array(is, state.m);
  get_array(is, state.v);
  const auto n = get<std::int64_t>(is);
  const double mean = get<double>(is), m2 = get<double>(is), floor = get<double>(is);
  TargetTransform tf(floor);
  tf.restore(n, mean, m2, floor);
  return {std::move(model), std::move(state), tf};
}

}  // namespace morphon
