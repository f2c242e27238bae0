#include "ltlo/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ltlo {

std::size_t EpisodeTrace::stage(std::size_t t) const {
  return static_cast<std::size_t>(std::lower_bound(sat_times.begin(), sat_times.end(), t) - sat_times.begin());
}

Transition EpisodeTrace::transition(std::size_t t, bool myopic) const {
  if (t >= length()) throw std::out_of_range("transition index past the trace");
  const std::size_t j = stage(t);
  if (j >= xi.size()) throw std::logic_error("step after the last subgoal was met");
  Transition tr;
  tr.s = &states[t];
  tr.a = actions[t];
  tr.r = rewards[t];
  tr.s_next = &states[t + 1];
  tr.p = xi[j];
  if (!myopic) tr.xi = std::span<const PropId>(xi).subspan(j + 1);
  tr.beta = j < sat_times.size() && sat_times[j] == t;
  tr.terminal = success && t + 1 == length();
  return tr;
}

void push_transitions(TransitionBuffer& buffer, const TracePtr& trace) {
  for (std::size_t t = 0; t < trace->length(); ++t) buffer.push(TransitionRef{trace, static_cast<std::uint32_t>(t)});
}

double v_mc(std::span<const double> rewards, std::size_t t, std::size_t t_end, double gamma) {
  if (t > t_end || t_end >= rewards.size()) throw std::out_of_range("v_mc range outside the trace");
  double sum = 0.0;
  double discount = 1.0;
  for (std::size_t k = t; k <= t_end; ++k) {
    sum += discount * rewards[k];
    discount *= gamma;
  }
  return sum;
}

VTargetPlan plan_v_target(const EpisodeTrace& trace, std::size_t t, double gamma) {
  const std::size_t T = trace.length();
  if (t >= T) throw std::out_of_range("v_target index past the trace");
  const std::size_t j = trace.stage(t);
  const std::span<const PropId> xi(trace.xi);
  VTargetPlan plan;
  if (j >= xi.size()) {
    plan.head = v_mc(trace.rewards, t, T - 1, gamma);
    return plan;
  }
  if (j < trace.sat_times.size()) {
    const std::size_t met = trace.sat_times[j];
    plan.head = v_mc(trace.rewards, t, met, gamma);
    plan.discount = std::pow(gamma, static_cast<double>(met + 1 - t));
    plan.tail = met + 1 < T ? v_mc(trace.rewards, met + 1, T - 1, gamma) : 0.0;
    if (j + 1 < xi.size()) {
      plan.needs_v = true;
      plan.v_state = met + 1;
      plan.v_xi = xi.subspan(j + 1);
    }
    return plan;
  }
  plan.discount = 1.0;
  plan.tail = v_mc(trace.rewards, t, T - 1, gamma);
  plan.needs_v = true;
  plan.v_state = t;
  plan.v_xi = xi.subspan(j);
  return plan;
}

double finish_v_target(const VTargetPlan& plan, double v) {
  if (plan.discount == 0.0) return plan.head;
  return plan.head + plan.discount * std::max(plan.needs_v ? v : 0.0, plan.tail);
}

double v_target(const EpisodeTrace& trace, std::size_t t, const VFn& v_lagged, double gamma) {
  const VTargetPlan plan = plan_v_target(trace, t, gamma);
  return finish_v_target(plan, plan.needs_v ? v_lagged(plan.v_state, plan.v_xi) : 0.0);
}

double q_target(const Transition& tr, const std::function<double()>& q_lagged_max, const std::function<double()>& v_live,
                double gamma) {
  if (tr.terminal) return tr.r;
  if (tr.beta) return tr.r + gamma * (tr.xi.empty() ? 0.0 : v_live());
  return tr.r + gamma * q_lagged_max();
}

EpisodeTrace her_relabel(const EpisodeTrace& trace, double r_f, std::mt19937_64& rng) {
  SubgoalSequence visited;
  std::vector<std::size_t> times;
  LabelSet seen;
  for (std::size_t t = 0; t < trace.length(); ++t) {
    for (PropId p = 0; p < kMaxProps; ++p) {
      if (trace.labels[t].contains(p) && !seen.contains(p)) {
        seen.insert(p);
        visited.push_back(p);
        times.push_back(t);
      }
    }
  }
  if (visited.empty()) throw NoLabelsVisited("trace visits no proposition");
  const std::size_t len = std::uniform_int_distribution<std::size_t>(1, visited.size())(rng);
  const std::size_t cut = times[len - 1];

  EpisodeTrace out;
  out.states.assign(trace.states.begin(), trace.states.begin() + static_cast<std::ptrdiff_t>(cut + 2));
  out.actions.assign(trace.actions.begin(), trace.actions.begin() + static_cast<std::ptrdiff_t>(cut + 1));
  out.rewards.assign(trace.rewards.begin(), trace.rewards.begin() + static_cast<std::ptrdiff_t>(cut + 1));
  out.labels.assign(trace.labels.begin(), trace.labels.begin() + static_cast<std::ptrdiff_t>(cut + 1));
  out.rewards[cut] = r_f;
  out.xi.assign(visited.begin(), visited.begin() + static_cast<std::ptrdiff_t>(len));
  out.sat_times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(len));
  out.success = true;
  return out;
}

// ---- batched updates -----------------------------------------------------------

namespace {

// Distinct subgoal sequences of a batch, embedded once each.
struct EmbedIndex {
  std::map<SubgoalSequence, int> ids;
  std::vector<std::span<const PropId>> unique;
  std::vector<int> column;  // per sample

  void add(std::span<const PropId> xi) {
    const auto [it, fresh] = ids.emplace(SubgoalSequence(xi.begin(), xi.end()), static_cast<int>(unique.size()));
    if (fresh) unique.push_back(xi);
    column.push_back(it->second);
  }

  Mat<float> embed(const Gru<float>& gru, std::vector<GruTrace<float>>* traces) const {
    Mat<float> out(gru.hidden(), static_cast<Eigen::Index>(unique.size()));
    if (traces) traces->resize(unique.size());
    for (std::size_t u = 0; u < unique.size(); ++u)
      out.col(static_cast<Eigen::Index>(u)) = traces ? gru.embed(unique[u], (*traces)[u]) : gru.embed(unique[u]);
    return out;
  }

  Mat<float> gather(const Mat<float>& per_unique) const {
    Mat<float> out(per_unique.rows(), static_cast<Eigen::Index>(column.size()));
    for (std::size_t b = 0; b < column.size(); ++b) out.col(static_cast<Eigen::Index>(b)) = per_unique.col(column[b]);
    return out;
  }

  // Sums per-sample embedding gradients into the embedder gradient.
  void backward(const Gru<float>& gru, const std::vector<GruTrace<float>>& traces, const Mat<float>& d_dense,
                ParamSet<float>& grad) const {
    Mat<float> d_unique = Mat<float>::Zero(d_dense.rows(), static_cast<Eigen::Index>(unique.size()));
    for (std::size_t b = 0; b < column.size(); ++b) d_unique.col(column[b]) += d_dense.col(static_cast<Eigen::Index>(b));
    for (std::size_t u = 0; u < unique.size(); ++u) {
      if (traces[u].steps.empty()) continue;
      gru.backward(traces[u], d_unique.col(static_cast<Eigen::Index>(u)), grad);
    }
  }
};

ParamSet<float> zeros_like(const ParamSet<float>& p) {
  ParamSet<float> z = p;
  z.set_zero();
  return z;
}

}  // namespace

Learner::Learner(AgentNets<float>& nets, LearnerConfig config)
    : nets_(nets),
      config_(config),
      adam_embedder_(nets.embedder.params().size(), config.adam),
      adam_q_(nets.q.params().size(), config.adam),
      adam_v_(nets.v.params().size(), config.adam),
      grad_embedder_(zeros_like(nets.embedder.params())),
      grad_q_(zeros_like(nets.q.params())),
      grad_v_(zeros_like(nets.v.params())) {
  if (config.batch_size <= 0) throw std::invalid_argument("batch size must be positive");
}

std::vector<double> Learner::q_targets(std::span<const Transition> batch) const {
  const long obs_dim = nets_.dims.obs_dim;
  SparseBatch xv, xq;
  EmbedIndex ev, eq;
  std::vector<std::size_t> row(batch.size(), 0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = batch[b];
    if (tr.terminal) continue;
    if (tr.beta) {
      if (tr.xi.empty()) continue;
      row[b] = xv.rows();
      xv.add_row(tr.s_next->active);
      ev.add(tr.xi);
    } else {
      row[b] = xq.rows();
      xq.add_row(tr.s_next->active, obs_dim + tr.p);
      eq.add(tr.xi);
    }
  }
  MlpCache<float> cv, cq, live;
  if (xv.rows() > 0) nets_.v.forward(xv, ev.gather(ev.embed(nets_.embedder, nullptr)), cv);
  if (xq.rows() > 0) {
    nets_.q_target.forward(xq, eq.gather(eq.embed(nets_.embedder_q_target, nullptr)), cq);
    if (config_.double_q) nets_.q.forward(xq, eq.gather(eq.embed(nets_.embedder, nullptr)), live);
  }
  auto bootstrap = [&](Eigen::Index r) {
    if (!config_.double_q) return static_cast<double>(cq.out.col(r).maxCoeff());
    Eigen::Index best = 0;
    live.out.col(r).maxCoeff(&best);
    return static_cast<double>(cq.out(best, r));
  };

  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto r = static_cast<Eigen::Index>(row[b]);
    y[b] = q_target(
        batch[b], [&] { return bootstrap(r); },
        [&] { return static_cast<double>(cv.out(0, r)); }, config_.gamma);
  }
  return y;
}

double Learner::update_q_on(std::span<const Transition> batch) {
  if (batch.empty()) return 0.0;
  const std::vector<double> y = q_targets(batch);
  const long obs_dim = nets_.dims.obs_dim;
  SparseBatch x;
  EmbedIndex e;
  for (const Transition& tr : batch) {
    x.add_row(tr.s->active, obs_dim + tr.p);
    e.add(tr.xi);
  }
  std::vector<GruTrace<float>> traces;
  const Mat<float> dense = e.gather(e.embed(nets_.embedder, &traces));
  MlpCache<float> cache;
  nets_.q.forward(x, dense, cache);

  const double scale = 1.0 / static_cast<double>(batch.size());
  Mat<float> d_out = Mat<float>::Zero(kNumActions, static_cast<Eigen::Index>(batch.size()));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const auto a = static_cast<Eigen::Index>(batch[b].a);
    const double diff = static_cast<double>(cache.out(a, col)) - y[b];
    loss += huber(diff, config_.huber_delta) * scale;
    d_out(a, col) = static_cast<float>(huber_grad(diff, config_.huber_delta) * scale);
  }
  Mat<float> d_dense;
  nets_.q.backward(x, dense, cache, d_out, grad_q_, &d_dense);
  grad_embedder_.set_zero();
  e.backward(nets_.embedder, traces, d_dense, grad_embedder_);
  adam_q_.step(nets_.q.params(), grad_q_);
  adam_embedder_.step(nets_.embedder.params(), grad_embedder_);
  return loss;
}

double Learner::update_q(const TransitionBuffer& buffer, std::mt19937_64& rng) {
  if (buffer.empty()) return 0.0;
  std::vector<Transition> batch;
  batch.reserve(static_cast<std::size_t>(config_.batch_size));
  for (int i = 0; i < config_.batch_size; ++i) {
    const TransitionRef& ref = buffer.sample(rng);
    batch.push_back(ref.trace->transition(ref.t, config_.myopic));
  }
  return update_q_on(batch);
}

std::vector<double> Learner::v_targets(std::span<const std::pair<const EpisodeTrace*, std::size_t>> batch) const {
  std::vector<VTargetPlan> plans;
  plans.reserve(batch.size());
  SparseBatch x;
  EmbedIndex e;
  std::vector<std::size_t> row(batch.size(), 0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& [trace, t] = batch[b];
    plans.push_back(plan_v_target(*trace, t, config_.gamma));
    if (!plans.back().needs_v) continue;
    row[b] = x.rows();
    x.add_row(trace->states[plans.back().v_state].active);
    e.add(plans.back().v_xi);
  }
  MlpCache<float> c;
  if (x.rows() > 0) nets_.v_target.forward(x, e.gather(e.embed(nets_.embedder_v_target, nullptr)), c);
  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    y[b] = finish_v_target(plans[b], plans[b].needs_v ? static_cast<double>(c.out(0, static_cast<Eigen::Index>(row[b]))) : 0.0);
  return y;
}

double Learner::update_v_on(std::span<const std::pair<const EpisodeTrace*, std::size_t>> batch) {
  if (batch.empty()) return 0.0;
  const std::vector<double> y = v_targets(batch);
  SparseBatch x;
  EmbedIndex e;
  for (const auto& [trace, t] : batch) {
    x.add_row(trace->states[t].active);
    e.add(std::span<const PropId>(trace->xi).subspan(std::min(trace->stage(t), trace->xi.size())));
  }
  std::vector<GruTrace<float>> traces;
  const Mat<float> dense = e.gather(e.embed(nets_.embedder, &traces));
  MlpCache<float> cache;
  nets_.v.forward(x, dense, cache);

  const double scale = 1.0 / static_cast<double>(batch.size());
  Mat<float> d_out(1, static_cast<Eigen::Index>(batch.size()));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double diff = static_cast<double>(cache.out(0, static_cast<Eigen::Index>(b))) - y[b];
    loss += huber(diff, config_.huber_delta) * scale;
    d_out(0, static_cast<Eigen::Index>(b)) = static_cast<float>(huber_grad(diff, config_.huber_delta) * scale);
  }
  Mat<float> d_dense;
  nets_.v.backward(x, dense, cache, d_out, grad_v_, &d_dense);
  grad_embedder_.set_zero();
  e.backward(nets_.embedder, traces, d_dense, grad_embedder_);
  adam_v_.step(nets_.v.params(), grad_v_);
  adam_embedder_.step(nets_.embedder.params(), grad_embedder_);
  return loss;
}

double Learner::update_v(const TraceBuffer& traces, std::mt19937_64& rng) {
  if (traces.empty()) return 0.0;
  std::vector<std::pair<const EpisodeTrace*, std::size_t>> batch;
  batch.reserve(static_cast<std::size_t>(config_.batch_size));
  for (int i = 0; i < config_.batch_size; ++i) {
    const EpisodeTrace* trace = traces.sample(rng).get();
    if (trace->length() == 0) continue;
    batch.emplace_back(trace, std::uniform_int_distribution<std::size_t>(0, trace->length() - 1)(rng));
  }
  return update_v_on(batch);
}

}  // namespace ltlo
