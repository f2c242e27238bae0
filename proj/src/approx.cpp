#include "ltlo/approx.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ltlo {

// ---- ParamSet --------------------------------------------------------------

template <class T>
int ParamSet<T>::add(std::string name, int rows, int cols) {
  shapes_.push_back({std::move(name), rows, cols});
  offsets_.push_back(values_.size());
  values_.resize(values_.size() + static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), T(0));
  return block_count() - 1;
}

template <class T>
Eigen::Map<Mat<T>> ParamSet<T>::block(int i) {
  const auto& s = shapes_[static_cast<std::size_t>(i)];
  return Eigen::Map<Mat<T>>(values_.data() + offset(i), s.rows, s.cols);
}

template <class T>
Eigen::Map<const Mat<T>> ParamSet<T>::block(int i) const {
  const auto& s = shapes_[static_cast<std::size_t>(i)];
  return Eigen::Map<const Mat<T>>(values_.data() + offset(i), s.rows, s.cols);
}

template <class T>
bool ParamSet<T>::all_finite() const {
  for (T x : values_)
    if (!std::isfinite(x)) return false;
  return true;
}

template <class T>
void sync_target(const ParamSet<T>& live, ParamSet<T>& target) {
  if (live.shapes() != target.shapes()) throw ShapeError("sync_target: shape mismatch");
  target.values() = live.values();
}

// ---- SparseBatch -------------------------------------------------------------

void SparseBatch::add_row(std::span<const std::uint16_t> active, long extra) {
  indices.insert(indices.end(), active.begin(), active.end());
  if (extra >= 0) indices.push_back(static_cast<std::uint32_t>(extra));
  offsets.push_back(static_cast<std::uint32_t>(indices.size()));
}

// ---- Mlp ---------------------------------------------------------------------

template <class T>
Mlp<T>::Mlp(MlpShape shape) : shape_(shape) {
  params_.add("w1", shape.hidden1, shape.sparse_in + shape.dense_in);
  params_.add("b1", shape.hidden1, 1);
  params_.add("w2", shape.hidden2, shape.hidden1);
  params_.add("b2", shape.hidden2, 1);
  params_.add("w3", shape.out, shape.hidden2);
  params_.add("b3", shape.out, 1);
}

template <class T>
void Mlp<T>::init(std::mt19937_64& rng) {
  // He-style uniform fan-in scaling, zero biases.
  for (int b : {W1, W2, W3}) {
    auto w = params_.block(b);
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<T>(u(rng));
  }
  for (int b : {B1, B2, B3}) params_.block(b).setZero();
}

template <class T>
void Mlp<T>::forward(const SparseBatch& x, const Mat<T>& dense, MlpCache<T>& c) const {
  const auto n = static_cast<Eigen::Index>(x.rows());
  if (dense.rows() != shape_.dense_in || (shape_.dense_in > 0 && dense.cols() != n))
    throw ShapeError("mlp forward: dense input shape mismatch");
  const auto w1 = params_.block(W1);
  if (shape_.dense_in > 0)
    c.z1.noalias() = w1.rightCols(shape_.dense_in) * dense;
  else
    c.z1.setZero(shape_.hidden1, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (auto k = x.offsets[static_cast<std::size_t>(b)]; k < x.offsets[static_cast<std::size_t>(b) + 1]; ++k) {
      const auto j = x.indices[k];
      if (j >= static_cast<std::uint32_t>(shape_.sparse_in)) throw ShapeError("mlp forward: sparse index out of range");
      c.z1.col(b) += w1.col(j);
    }
  }
  c.z1.colwise() += params_.block(B1).col(0);
  c.a1 = c.z1.cwiseMax(T(0));
  c.z2.noalias() = params_.block(W2) * c.a1;
  c.z2.colwise() += params_.block(B2).col(0);
  c.a2 = c.z2.cwiseMax(T(0));
  c.out.noalias() = params_.block(W3) * c.a2;
  c.out.colwise() += params_.block(B3).col(0);
}

template <class T>
void Mlp<T>::backward(const SparseBatch& x, const Mat<T>& dense, const MlpCache<T>& c, const Mat<T>& d_out,
                      ParamSet<T>& grad, Mat<T>* d_dense) const {
  if (grad.shapes() != params_.shapes()) throw ShapeError("mlp backward: gradient shape mismatch");
  if (d_out.rows() != shape_.out || d_out.cols() != c.out.cols()) throw ShapeError("mlp backward: d_out shape");
  grad.block(W3).noalias() = d_out * c.a2.transpose();
  grad.block(B3) = d_out.rowwise().sum();
  Mat<T> d_z2 = params_.block(W3).transpose() * d_out;
  d_z2.array() *= (c.z2.array() > T(0)).template cast<T>();
  grad.block(W2).noalias() = d_z2 * c.a1.transpose();
  grad.block(B2) = d_z2.rowwise().sum();
  Mat<T> d_z1 = params_.block(W2).transpose() * d_z2;
  d_z1.array() *= (c.z1.array() > T(0)).template cast<T>();
  auto gw1 = grad.block(W1);
  gw1.leftCols(shape_.sparse_in).setZero();
  if (shape_.dense_in > 0) gw1.rightCols(shape_.dense_in).noalias() = d_z1 * dense.transpose();
  for (Eigen::Index b = 0; b < d_z1.cols(); ++b)
    for (auto k = x.offsets[static_cast<std::size_t>(b)]; k < x.offsets[static_cast<std::size_t>(b) + 1]; ++k)
      gw1.col(x.indices[k]) += d_z1.col(b);
  grad.block(B1) = d_z1.rowwise().sum();
  if (d_dense) {
    if (shape_.dense_in > 0)
      d_dense->noalias() = params_.block(W1).rightCols(shape_.dense_in).transpose() * d_z1;
    else
      d_dense->resize(0, d_z1.cols());
  }
}

// ---- Gru -----------------------------------------------------------------------

template <class T>
Gru<T>::Gru(int vocab, int hidden) : vocab_(vocab), hidden_(hidden) {
  params_.add("wx", 3 * hidden, vocab);
  params_.add("wh", 3 * hidden, hidden);
  params_.add("bx", 3 * hidden, 1);
  params_.add("bh", 3 * hidden, 1);
}

template <class T>
void Gru<T>::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (T& x : params_.values()) x = static_cast<T>(u(rng));
}

namespace {

template <class T>
Vec<T> sigmoid(const Vec<T>& x) {
  return (T(1) / (T(1) + (-x.array()).exp())).matrix();
}

template <class T>
Vec<T> gru_run(const ParamSet<T>& p, int vocab, int hidden, std::span<const PropId> xi, GruTrace<T>* trace) {
  const auto wx = p.block(0);
  const auto wh = p.block(1);
  const auto bx = p.block(2).col(0);
  const auto bh = p.block(3).col(0);
  const Eigen::Index H = hidden;
  Vec<T> h = Vec<T>::Zero(H);
  if (trace) trace->steps.clear();
  for (std::size_t i = xi.size(); i-- > 0;) {
    const int token = xi[i];
    if (token >= vocab) throw ShapeError("embed: proposition outside vocabulary");
    const Vec<T> gx = wx.col(token) + bx;
    const Vec<T> gh = wh * h + bh;
    Vec<T> z = sigmoid<T>(gx.head(H) + gh.head(H));
    Vec<T> r = sigmoid<T>(gx.segment(H, H) + gh.segment(H, H));
    Vec<T> ghn = gh.tail(H);
    Vec<T> n = (gx.tail(H).array() + r.array() * ghn.array()).tanh().matrix();
    Vec<T> next = ((T(1) - z.array()) * n.array() + z.array() * h.array()).matrix();
    if (trace) trace->steps.push_back({token, std::move(h), std::move(z), std::move(r), std::move(n), std::move(ghn)});
    h = std::move(next);
  }
  if (trace) trace->h = h;
  return h;
}

}  // namespace

template <class T>
Vec<T> Gru<T>::embed(std::span<const PropId> xi) const {
  return gru_run<T>(params_, vocab_, hidden_, xi, nullptr);
}

template <class T>
Vec<T> Gru<T>::embed(std::span<const PropId> xi, GruTrace<T>& trace) const {
  return gru_run<T>(params_, vocab_, hidden_, xi, &trace);
}

template <class T>
void Gru<T>::backward(const GruTrace<T>& trace, const Vec<T>& d_h, ParamSet<T>& grad) const {
  const Eigen::Index H = hidden_;
  const auto wh = params_.block(Wh);
  auto gwx = grad.block(Wx);
  auto gwh = grad.block(Wh);
  auto gbx = grad.block(Bx).col(0);
  auto gbh = grad.block(Bh).col(0);
  Vec<T> dh = d_h;
  Vec<T> dgx(3 * H), dgh(3 * H);
  for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
    const auto& s = *it;
    const auto z = s.z.array();
    const auto r = s.r.array();
    const auto n = s.n.array();
    const auto dn = dh.array() * (T(1) - z);
    const auto dz = dh.array() * (s.h_prev.array() - n);
    const Vec<T> dh_prev = (dh.array() * z).matrix();
    const Vec<T> dan = (dn * (T(1) - n * n)).matrix();
    dgx.head(H) = (dz * z * (T(1) - z)).matrix();
    dgx.segment(H, H) = (dan.array() * s.ghn.array() * r * (T(1) - r)).matrix();
    dgx.tail(H) = dan;
    dgh.head(2 * H) = dgx.head(2 * H);
    dgh.tail(H) = (dan.array() * r).matrix();
    gwx.col(s.token) += dgx;
    gbx += dgx;
    gwh.noalias() += dgh * s.h_prev.transpose();
    gbh += dgh;
    dh = dh_prev + wh.transpose() * dgh;
  }
}

// ---- Adam ----------------------------------------------------------------------

template <class T>
Adam<T>::Adam(std::size_t dim, AdamConfig config) : config_(config), m_(dim, T(0)), v_(dim, T(0)) {}

template <class T>
void Adam<T>::step(ParamSet<T>& params, const ParamSet<T>& grad) {
  auto& p = params.values();
  const auto& g = grad.values();
  if (p.size() != m_.size() || g.size() != m_.size()) throw ShapeError("adam: dimension mismatch");
  ++t_;
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
  const T c2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
  const T lr = static_cast<T>(config_.lr);
  const T eps = static_cast<T>(config_.eps);
  bool finite = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T gi = g[i];
    m_[i] = b1 * m_[i] + (T(1) - b1) * gi;
    v_[i] = b2 * v_[i] + (T(1) - b2) * gi * gi;
    p[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    finite = finite && std::isfinite(p[i]);
  }
  if (!finite) throw NumericalError("non-finite parameter after Adam step " + std::to_string(t_));
}

template <class T>
void Adam<T>::restore(std::vector<T> m, std::vector<T> v, std::uint64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw ShapeError("adam restore: dimension mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

// ---- AgentNets -------------------------------------------------------------------

NetDims net_dims_for(const GridWorld& world) {
  NetDims d;
  d.obs_dim = static_cast<int>(world.obs_dim());
  d.num_props = static_cast<int>(world.alphabet().size());
  return d;
}

template <class T>
AgentNets<T>::AgentNets(NetDims d, std::uint64_t seed)
    : dims(d),
      embedder(d.num_props, d.embed),
      q(MlpShape{d.obs_dim + d.num_props, d.embed, d.hidden1, d.hidden2, kNumActions}),
      v(MlpShape{d.obs_dim, d.embed, d.hidden1, d.hidden2, 1}) {
  std::mt19937_64 rng(seed);
  embedder.init(rng);
  q.init(rng);
  v.init(rng);
  embedder_q_target = embedder;
  embedder_v_target = embedder;
  q_target = q;
  v_target = v;
}

template <class T>
void AgentNets<T>::sync_q_target() {
  sync_target(embedder.params(), embedder_q_target.params());
  sync_target(q.params(), q_target.params());
}

template <class T>
void AgentNets<T>::sync_v_target() {
  sync_target(embedder.params(), embedder_v_target.params());
  sync_target(v.params(), v_target.params());
}

template <class T>
std::array<T, kNumActions> AgentNets<T>::q_values(const Observation& s, PropId p, std::span<const PropId> xi) const {
  SparseBatch x;
  x.add_row(s.active, static_cast<long>(dims.obs_dim) + p);
  const Mat<T> dense = embedder.embed(xi);
  MlpCache<T> c;
  q.forward(x, dense, c);
  std::array<T, kNumActions> out{};
  for (int a = 0; a < kNumActions; ++a) out[static_cast<std::size_t>(a)] = c.out(a, 0);
  return out;
}

template <class T>
T AgentNets<T>::v_value(const Observation& s, std::span<const PropId> xi) const {
  SparseBatch x;
  x.add_row(s.active);
  const Mat<T> dense = embedder.embed(xi);
  MlpCache<T> c;
  v.forward(x, dense, c);
  return c.out(0, 0);
}

template <class T>
std::vector<std::pair<std::string, const ParamSet<T>*>> AgentNets<T>::named() const {
  return {{"embedder", &embedder.params()},          {"q", &q.params()},
          {"v", &v.params()},                        {"embedder_q_target", &embedder_q_target.params()},
          {"q_target", &q_target.params()},          {"embedder_v_target", &embedder_v_target.params()},
          {"v_target", &v_target.params()}};
}

template <class T>
std::vector<std::pair<std::string, ParamSet<T>*>> AgentNets<T>::named() {
  return {{"embedder", &embedder.params()},          {"q", &q.params()},
          {"v", &v.params()},                        {"embedder_q_target", &embedder_q_target.params()},
          {"q_target", &q_target.params()},          {"embedder_v_target", &embedder_v_target.params()},
          {"v_target", &v_target.params()}};
}

template class ParamSet<float>;
template class ParamSet<double>;
template void sync_target(const ParamSet<float>&, ParamSet<float>&);
template void sync_target(const ParamSet<double>&, ParamSet<double>&);
template class ParamSet<long double>;
template class Mlp<long double>;
template class Gru<long double>;
template class Mlp<float>;
template class Mlp<double>;
template class Gru<float>;
template class Gru<double>;
template class Adam<float>;
template class Adam<double>;
template struct AgentNets<float>;
template struct AgentNets<double>;

// ---- Checkpoint ------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'T', 'L', 'O'};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open " + path + " for writing");
  }
  template <class U>
  void pod(U x) {
    out_.write(reinterpret_cast<const char*>(&x), sizeof(U));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  // Each block row-major.
  void blocks(const ParamSet<float>& shape, std::span<const float> flat) {
    for (int b = 0; b < shape.block_count(); ++b) {
      const auto& s = shape.shapes()[static_cast<std::size_t>(b)];
      const float* base = flat.data() + shape.offset(b);
      for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) pod<float>(base[static_cast<std::size_t>(c) * s.rows + r]);
    }
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) throw CheckpointError("write failed: " + path);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw CheckpointError("cannot open " + path);
  }
  template <class U>
  U pod() {
    U x{};
    in_.read(reinterpret_cast<char*>(&x), sizeof(U));
    if (!in_) throw CheckpointError("truncated checkpoint");
    return x;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (std::uint64_t{1} << 30)) throw CheckpointError("corrupt string length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw CheckpointError("truncated checkpoint");
    return s;
  }
  std::vector<float> blocks(const ParamSet<float>& shape) {
    std::vector<float> flat(shape.size());
    for (int b = 0; b < shape.block_count(); ++b) {
      const auto& s = shape.shapes()[static_cast<std::size_t>(b)];
      float* base = flat.data() + shape.offset(b);
      for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) base[static_cast<std::size_t>(c) * s.rows + r] = pod<float>();
    }
    return flat;
  }

 private:
  std::ifstream in_;
};

void write_adam(Writer& w, const Adam<float>& adam, const ParamSet<float>& shape) {
  const auto& c = adam.config();
  w.pod<std::uint64_t>(adam.steps());
  w.pod<double>(c.lr);
  w.pod<double>(c.beta1);
  w.pod<double>(c.beta2);
  w.pod<double>(c.eps);
  // A default-constructed optimizer has no moments yet; store them as zeros.
  const std::vector<float> zeros(adam.m().empty() ? shape.size() : 0, 0.0f);
  const auto& m = adam.m().empty() ? zeros : adam.m();
  const auto& v = adam.v().empty() ? zeros : adam.v();
  if (m.size() != shape.size() || v.size() != shape.size())
    throw CheckpointError("optimizer state does not match its network");
  w.blocks(shape, m);
  w.blocks(shape, v);
}

Adam<float> read_adam(Reader& r, const ParamSet<float>& shape) {
  const auto t = r.pod<std::uint64_t>();
  AdamConfig c;
  c.lr = r.pod<double>();
  c.beta1 = r.pod<double>();
  c.beta2 = r.pod<double>();
  c.eps = r.pod<double>();
  Adam<float> adam(shape.size(), c);
  auto m = r.blocks(shape);
  auto v = r.blocks(shape);
  adam.restore(std::move(m), std::move(v), t);
  return adam;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w(path);
  for (char c : kMagic) w.pod<char>(c);
  w.pod<std::uint32_t>(kCheckpointVersion);
  const NetDims& d = ckpt.nets.dims;
  for (int x : {d.obs_dim, d.num_props, d.embed, d.hidden1, d.hidden2}) w.pod<std::uint32_t>(static_cast<std::uint32_t>(x));
  const auto nets = ckpt.nets.named();
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(nets.size()));
  for (const auto& [name, p] : nets) {
    w.str(name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p->block_count()));
    for (const auto& s : p->shapes()) {
      w.str(s.name);
      w.pod<std::uint32_t>(static_cast<std::uint32_t>(s.rows));
      w.pod<std::uint32_t>(static_cast<std::uint32_t>(s.cols));
    }
  }
  for (const auto& [name, p] : nets) w.blocks(*p, p->values());
  write_adam(w, ckpt.adam_embedder, ckpt.nets.embedder.params());
  write_adam(w, ckpt.adam_q, ckpt.nets.q.params());
  write_adam(w, ckpt.adam_v, ckpt.nets.v.params());
  w.str(ckpt.rng_state);
  w.pod<std::int32_t>(ckpt.curriculum_level);
  w.pod<std::uint64_t>(ckpt.steps);
  w.pod<std::uint64_t>(ckpt.episodes);
  w.str(ckpt.config_text);
  w.finish(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  for (char c : kMagic)
    if (r.pod<char>() != c) throw CheckpointError(path + ": not a checkpoint (bad magic)");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError(path + ": checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  NetDims d;
  for (int* x : {&d.obs_dim, &d.num_props, &d.embed, &d.hidden1, &d.hidden2}) *x = static_cast<int>(r.pod<std::uint32_t>());
  Checkpoint ckpt;
  ckpt.nets = AgentNets<float>(d, 0);
  auto nets = ckpt.nets.named();
  if (r.pod<std::uint32_t>() != nets.size()) throw CheckpointError("unexpected net count");
  for (const auto& [name, p] : nets) {
    if (r.str() != name) throw CheckpointError("unexpected net name, wanted " + name);
    if (r.pod<std::uint32_t>() != static_cast<std::uint32_t>(p->block_count()))
      throw CheckpointError("block count mismatch in " + name);
    for (const auto& s : p->shapes()) {
      const auto bname = r.str();
      const auto rows = static_cast<int>(r.pod<std::uint32_t>());
      const auto cols = static_cast<int>(r.pod<std::uint32_t>());
      if (bname != s.name || rows != s.rows || cols != s.cols)
        throw CheckpointError("shape mismatch in " + name + "." + s.name);
    }
  }
  for (auto& [name, p] : nets) {
    const auto flat = r.blocks(*p);
    p->values().assign(flat.begin(), flat.end());
  }
  ckpt.adam_embedder = read_adam(r, ckpt.nets.embedder.params());
  ckpt.adam_q = read_adam(r, ckpt.nets.q.params());
  ckpt.adam_v = read_adam(r, ckpt.nets.v.params());
  ckpt.rng_state = r.str();
  ckpt.curriculum_level = r.pod<std::int32_t>();
  ckpt.steps = r.pod<std::uint64_t>();
  ckpt.episodes = r.pod<std::uint64_t>();
  ckpt.config_text = r.str();
  return ckpt;
}

}  // namespace ltlo
