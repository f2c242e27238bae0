#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ltlo/approx.hpp"
#include "ltlo/decompose.hpp"
#include "ltlo/envs.hpp"

namespace ltlo {

/// One step of a trace seen through the option that was active: views into
/// the owning EpisodeTrace, which must outlive it.
struct Transition {
  const Observation* s = nullptr;
  Action a = Action::Up;
  double r = 0.0;
  const Observation* s_next = nullptr;
  PropId p = 0;
  std::span<const PropId> xi;  // subgoals after p
  bool beta = false;           // label(s_next) holds p
  bool terminal = false;       // episode ended by success here
};

struct EpisodeTrace {
  std::vector<Observation> states;  // T + 1
  std::vector<Action> actions;      // T
  std::vector<double> rewards;      // T
  std::vector<LabelSet> labels;     // T, label of states[t + 1]
  SubgoalSequence xi;
  std::vector<std::size_t> sat_times;  // step that met xi[i]
  bool success = false;

  std::size_t length() const { return actions.size(); }
  /// Index into xi of the subgoal pursued during step t.
  std::size_t stage(std::size_t t) const;
  /// With `myopic` the future part of the option is dropped.
  Transition transition(std::size_t t, bool myopic = false) const;
};

/// Fixed-capacity FIFO; index 0 is the oldest item.
template <class T>
class Ring {
 public:
  explicit Ring(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ring capacity must be positive");
  }

  void push(T item) {
    if (items_.size() < cap_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % cap_;
    }
    ++pushed_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return cap_; }
  bool empty() const { return items_.empty(); }
  std::uint64_t pushed() const { return pushed_; }
  const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  const T& sample(std::mt19937_64& rng) const {
    return items_[std::uniform_int_distribution<std::size_t>(0, items_.size() - 1)(rng)];
  }

 private:
  std::size_t cap_;
  std::size_t head_ = 0;
  std::vector<T> items_;
  std::uint64_t pushed_ = 0;
};

using TracePtr = std::shared_ptr<const EpisodeTrace>;

struct TransitionRef {
  TracePtr trace;
  std::uint32_t t = 0;
};

using TransitionBuffer = Ring<TransitionRef>;
using TraceBuffer = Ring<TracePtr>;

void push_transitions(TransitionBuffer& buffer, const TracePtr& trace);

/// sum_{k=t}^{t_end} gamma^(k-t) r_k. Throws std::out_of_range.
double v_mc(std::span<const double> rewards, std::size_t t, std::size_t t_end, double gamma);

/// The V target split in two: everything the trace alone determines, then
/// the lagged V value, if one is needed.
struct VTargetPlan {
  double head = 0.0;
  double discount = 0.0;
  double tail = 0.0;
  bool needs_v = false;
  std::size_t v_state = 0;  // index into trace.states
  std::span<const PropId> v_xi;
};

/// If the pursued subgoal is met at t' >= t (reward of step t' in the head):
///   V_MC(t, t') + gamma^(t'+1-t) max{V(s_{t'+1}; rest), V_MC(t'+1, T-1)}
/// otherwise max{V(s_t; xi_t), V_MC(t, T-1)}. V(.; {}) is 0.
VTargetPlan plan_v_target(const EpisodeTrace& trace, std::size_t t, double gamma);
double finish_v_target(const VTargetPlan& plan, double v);

using VFn = std::function<double(std::size_t state, std::span<const PropId> xi)>;
double v_target(const EpisodeTrace& trace, std::size_t t, const VFn& v_lagged, double gamma);

/// r + gamma * (beta ? V(s'; xi) : max_a' Q_target(s', a'; xi)), or r at a
/// terminal step. Only the branch taken is evaluated; V(.; {}) is 0.
double q_target(const Transition& tr, const std::function<double()>& q_lagged_max,
                const std::function<double()>& v_live, double gamma);

class NoLabelsVisited : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relabels a failed trace with a prefix (random length >= 1) of the
/// propositions it visited, in first-visit order. The trace is cut after the
/// last of them, which now pays r_f.
EpisodeTrace her_relabel(const EpisodeTrace& trace, double r_f, std::mt19937_64& rng);

struct LearnerConfig {
  double gamma = 0.99;
  int batch_size = 256;
  double huber_delta = 1.0;
  bool myopic = false;
  /// Pick the bootstrap action with the live Q and evaluate it with the
  /// lagged Q instead of taking the lagged maximum.
  bool double_q = false;
  AdamConfig adam;
};

/// Gradient steps for the option Q network and the multi-step V network.
/// Both also train the shared embedder.
class Learner {
 public:
  Learner(AgentNets<float>& nets, LearnerConfig config);

  double update_q(const TransitionBuffer& buffer, std::mt19937_64& rng);
  double update_v(const TraceBuffer& traces, std::mt19937_64& rng);

  double update_q_on(std::span<const Transition> batch);
  double update_v_on(std::span<const std::pair<const EpisodeTrace*, std::size_t>> batch);

  /// Targets only, no step.
  std::vector<double> q_targets(std::span<const Transition> batch) const;
  std::vector<double> v_targets(std::span<const std::pair<const EpisodeTrace*, std::size_t>> batch) const;

  const LearnerConfig& config() const { return config_; }
  Adam<float>& adam_embedder() { return adam_embedder_; }
  Adam<float>& adam_q() { return adam_q_; }
  Adam<float>& adam_v() { return adam_v_; }
  const Adam<float>& adam_embedder() const { return adam_embedder_; }
  const Adam<float>& adam_q() const { return adam_q_; }
  const Adam<float>& adam_v() const { return adam_v_; }

 private:
  AgentNets<float>& nets_;
  LearnerConfig config_;
  Adam<float> adam_embedder_;
  Adam<float> adam_q_;
  Adam<float> adam_v_;
  ParamSet<float> grad_embedder_;
  ParamSet<float> grad_q_;
  ParamSet<float> grad_v_;
};

}  // namespace ltlo
