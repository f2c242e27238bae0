#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltlo/envs.hpp"
#include "ltlo/ltl.hpp"

namespace ltlo {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BlockShape {
  std::string name;
  int rows = 0;
  int cols = 0;

  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

/// Storage with a fixed alignment so vectorized reductions round the same
/// way on every run.
template <class T>
using ParamVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// Flat parameter vector split into named matrix blocks (column-major).
template <class T>
class ParamSet {
 public:
  int add(std::string name, int rows, int cols);

  std::size_t size() const { return values_.size(); }
  int block_count() const { return static_cast<int>(shapes_.size()); }
  const std::vector<BlockShape>& shapes() const { return shapes_; }
  std::size_t offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }

  Eigen::Map<Mat<T>> block(int i);
  Eigen::Map<const Mat<T>> block(int i) const;

  ParamVector<T>& values() { return values_; }
  const ParamVector<T>& values() const { return values_; }

  void set_zero() { std::fill(values_.begin(), values_.end(), T(0)); }
  bool all_finite() const;

 private:
  std::vector<BlockShape> shapes_;
  std::vector<std::size_t> offsets_;
  ParamVector<T> values_;
};

/// Hard copy; shapes must match.
template <class T>
void sync_target(const ParamSet<T>& live, ParamSet<T>& target);

/// Batch of sparse binary rows in CSR form.
struct SparseBatch {
  std::vector<std::uint32_t> indices;
  std::vector<std::uint32_t> offsets{0};

  /// Appends one row: the observation indices plus `extra` when >= 0.
  void add_row(std::span<const std::uint16_t> active, long extra = -1);
  std::size_t rows() const { return offsets.size() - 1; }
};

struct MlpShape {
  int sparse_in = 0;
  int dense_in = 0;
  int hidden1 = 64;
  int hidden2 = 64;
  int out = 1;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

template <class T>
struct MlpCache {
  Mat<T> z1, a1, z2, a2, out;
};

/// relu(W1 [x_sparse; x_dense] + b1) -> relu(W2 . + b2) -> W3 . + b3.
/// Samples are columns.
template <class T>
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpShape shape);

  const MlpShape& shape() const { return shape_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  void init(std::mt19937_64& rng);
  void forward(const SparseBatch& x, const Mat<T>& dense, MlpCache<T>& cache) const;
  /// Overwrites `grad`. When d_dense is set it receives dL/d(dense input).
  void backward(const SparseBatch& x, const Mat<T>& dense, const MlpCache<T>& cache, const Mat<T>& d_out,
                ParamSet<T>& grad, Mat<T>* d_dense) const;

 private:
  enum Block { W1, B1, W2, B2, W3, B3 };
  MlpShape shape_;
  ParamSet<T> params_;
};

template <class T>
struct GruStep {
  int token = 0;
  Vec<T> h_prev, z, r, n, ghn;
};

template <class T>
struct GruTrace {
  std::vector<GruStep<T>> steps;
  Vec<T> h;
};

/// Gated recurrent embedder over one-hot proposition tokens. The sequence is
/// read back to front so the next subgoal is the last input seen. The empty
/// sequence embeds to zero.
template <class T>
class Gru {
 public:
  Gru() = default;
  Gru(int vocab, int hidden);

  int vocab() const { return vocab_; }
  int hidden() const { return hidden_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  void init(std::mt19937_64& rng);
  Vec<T> embed(std::span<const PropId> xi) const;
  Vec<T> embed(std::span<const PropId> xi, GruTrace<T>& trace) const;
  /// Accumulates into `grad`.
  void backward(const GruTrace<T>& trace, const Vec<T>& d_h, ParamSet<T>& grad) const;

 private:
  enum Block { Wx, Wh, Bx, Bh };
  int vocab_ = 0;
  int hidden_ = 0;
  ParamSet<T> params_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 2e-5;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t dim, AdamConfig config);

  /// Throws NumericalError if a gradient or updated parameter is not finite.
  void step(ParamSet<T>& params, const ParamSet<T>& grad);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<T>& m() const { return m_; }
  const std::vector<T>& v() const { return v_; }
  void restore(std::vector<T> m, std::vector<T> v, std::uint64_t t);

 private:
  AdamConfig config_;
  std::vector<T> m_, v_;
  std::uint64_t t_ = 0;
};

inline double huber(double x, double delta = 1.0) {
  const double a = x < 0 ? -x : x;
  return a <= delta ? 0.5 * x * x : delta * (a - 0.5 * delta);
}
inline double huber_grad(double x, double delta = 1.0) { return x > delta ? delta : (x < -delta ? -delta : x); }

struct NetDims {
  int obs_dim = 0;
  int num_props = 0;
  int embed = 32;
  int hidden1 = 64;
  int hidden2 = 64;

  friend bool operator==(const NetDims&, const NetDims&) = default;
};

NetDims net_dims_for(const GridWorld& world);

/// Shared embedder, option Q network and multi-step V network, each with a
/// lagged copy. Q takes (observation, one-hot subgoal, embed(xi)); V takes
/// (observation, embed(xi)).
template <class T>
struct AgentNets {
  NetDims dims;
  Gru<T> embedder;
  Mlp<T> q;
  Mlp<T> v;
  Gru<T> embedder_q_target;
  Mlp<T> q_target;
  Gru<T> embedder_v_target;
  Mlp<T> v_target;

  AgentNets() = default;
  AgentNets(NetDims dims, std::uint64_t seed);

  void sync_q_target();
  void sync_v_target();

  std::array<T, kNumActions> q_values(const Observation& s, PropId p, std::span<const PropId> xi) const;
  /// Raw network output, also for empty xi.
  T v_value(const Observation& s, std::span<const PropId> xi) const;

  /// Named nets in checkpoint order.
  std::vector<std::pair<std::string, const ParamSet<T>*>> named() const;
  std::vector<std::pair<std::string, ParamSet<T>*>> named();
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  AgentNets<float> nets;
  Adam<float> adam_embedder;
  Adam<float> adam_q;
  Adam<float> adam_v;
  std::string rng_state;
  int curriculum_level = 1;
  std::uint64_t steps = 0;
  std::uint64_t episodes = 0;
  std::string config_text;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ltlo
