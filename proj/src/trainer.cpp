#include "ltlo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <sstream>

namespace ltlo {

namespace {

void require(bool ok, const char* field) {
  if (!ok) throw InvalidConfig(std::string("invalid train.") + field);
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void validate(const TrainConfig& c) {
  require(c.total_steps > 0, "total_steps");
  require(c.gamma > 0 && c.gamma < 1, "gamma");
  require(c.r_f > 0, "r_f");
  require(c.eps_final >= 0 && c.eps_init <= 1 && c.eps_init >= c.eps_final, "eps_init");
  require(c.eps_fraction > 0 && c.eps_fraction <= 1, "eps_fraction");
  require(c.curriculum_levels > 0, "curriculum_levels");
  require(c.curriculum_threshold > 0 && c.curriculum_threshold <= 1, "curriculum_threshold");
  require(c.curriculum_window > 0, "curriculum_window");
  require(c.adversarial_candidates > 0, "adversarial_candidates");
  require(c.subgoal_steps > 0, "subgoal_steps");
  require(c.batch_size > 0, "batch_size");
  require(c.q_update_interval > 0, "q_update_interval");
  require(c.q_target_update_interval > 0, "q_target_update_interval");
  require(c.v_update_interval > 0, "v_update_interval");
  require(c.v_target_update_interval > 0, "v_target_update_interval");
  require(c.her_ratio >= 0 && c.her_ratio <= 1, "her_ratio");
  require(c.buffer_size > 0, "buffer_size");
  require(c.trace_buffer_size > 0, "trace_buffer_size");
  require(c.adam.lr > 0 && c.adam.eps > 0, "lr");
  require(c.adam.beta1 >= 0 && c.adam.beta1 < 1 && c.adam.beta2 >= 0 && c.adam.beta2 < 1, "beta1");
  require(c.eval_interval > 0, "eval_interval");
  require(c.eval_episodes > 0, "eval_episodes");
  require(c.checkpoint_interval > 0, "checkpoint_interval");
}

// ---- Curriculum ----------------------------------------------------------------

Curriculum::Curriculum(int levels, double threshold, int window)
    : levels_(levels), threshold_(threshold), window_(static_cast<std::size_t>(window)) {
  if (levels < 1 || window < 1) throw std::invalid_argument("curriculum needs a level and a window");
}

double Curriculum::success_rate() const {
  return outcomes_.empty() ? 0.0 : static_cast<double>(successes_) / static_cast<double>(outcomes_.size());
}

bool Curriculum::record(bool success) {
  if (complete_) return false;
  outcomes_.push_back(success);
  successes_ += success;
  if (outcomes_.size() > window_) {
    successes_ -= outcomes_.front();
    outcomes_.pop_front();
  }
  if (outcomes_.size() < window_ || success_rate() < threshold_) return false;
  last_rate_ = success_rate();
  if (level_ == levels_) {
    complete_ = true;
  } else {
    ++level_;
  }
  outcomes_.clear();
  successes_ = 0;
  return true;
}

void Curriculum::set_level(int level) {
  level_ = std::clamp(level, 1, levels_);
  outcomes_.clear();
  successes_ = 0;
}

double epsilon_at(const TrainConfig& c, std::uint64_t step) {
  const double horizon = c.eps_fraction * static_cast<double>(c.total_steps);
  const double frac = std::min(1.0, static_cast<double>(step) / horizon);
  return c.eps_init + (c.eps_final - c.eps_init) * frac;
}

SubgoalSequence random_sequence(int length, int num_props, std::mt19937_64& rng) {
  if (length < 1 || num_props < 1 || (length > 1 && num_props < 2))
    throw std::invalid_argument("not enough propositions for the sequence");
  std::uniform_int_distribution<int> pick(0, num_props - 1);
  SubgoalSequence xi;
  while (static_cast<int>(xi.size()) < length) {
    const auto p = static_cast<PropId>(pick(rng));
    if (!xi.empty() && xi.back() == p) continue;
    xi.push_back(p);
  }
  return xi;
}

SubgoalSequence sample_adversarial_task(int length, const Observation& s0, const AgentNets<float>& nets,
                                        int candidates, int num_props, std::mt19937_64& rng) {
  if (length > num_props) throw std::invalid_argument("sequence length exceeds the alphabet");
  SubgoalSequence best;
  float best_v = 0.0f;
  for (int i = 0; i < candidates; ++i) {
    SubgoalSequence xi = random_sequence(length, num_props, rng);
    const float v = nets.v_value(s0, xi);
    if (i == 0 || v < best_v) {
      best_v = v;
      best = std::move(xi);
    }
  }
  return best;
}

int greedy_action(const std::array<float, kNumActions>& q) {
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

EpisodeTrace run_episode(GridWorld& world, const SubgoalSequence& xi, const AgentNets<float>& nets, double epsilon,
                         const EpisodeOptions& options, std::mt19937_64& rng, const std::function<void()>& after_step) {
  if (xi.empty()) throw std::invalid_argument("run_episode needs a subgoal");
  EpisodeTrace trace;
  trace.xi = xi;
  trace.states.push_back(world.observe());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, kNumActions - 1);
  std::size_t j = 0;
  int stage_steps = 0;
  while (j < xi.size() && stage_steps < options.subgoal_steps && trace.actions.size() < options.max_steps) {
    const std::span<const PropId> rest =
        options.myopic ? std::span<const PropId>() : std::span<const PropId>(xi).subspan(j + 1);
    int a;
    if (epsilon > 0.0 && coin(rng) < epsilon) {
      a = any_action(rng);
    } else {
      a = greedy_action(nets.q_values(trace.states.back(), xi[j], rest));
    }
    const auto result = world.step(static_cast<Action>(a));
    ++stage_steps;
    double reward = result.reward;
    if (result.label.contains(xi[j])) {
      trace.sat_times.push_back(trace.actions.size());
      ++j;
      stage_steps = 0;
      if (j == xi.size()) reward = options.r_f;
    }
    trace.actions.push_back(static_cast<Action>(a));
    trace.rewards.push_back(reward);
    trace.labels.push_back(result.label);
    trace.states.push_back(world.observe());
    if (after_step) after_step();
  }
  trace.success = j == xi.size();
  return trace;
}

EvalSummary evaluate_sequences(const EnvParams& env, const AgentNets<float>& nets, int length, int episodes,
                               std::uint64_t seed, const EpisodeOptions& options) {
  std::mt19937_64 rng(seed);
  EvalSummary out;
  for (int i = 0; i < episodes; ++i) {
    GridWorld world = generate(env, rng());
    const SubgoalSequence xi = random_sequence(length, static_cast<int>(world.alphabet().size()), rng);
    const EpisodeTrace tr = run_episode(world, xi, nets, 0.0, options, rng);
    double ret = 0.0;
    for (double r : tr.rewards) ret += r;
    out.return_mean += ret / episodes;
    out.success_rate += (tr.success ? 1.0 : 0.0) / episodes;
  }
  return out;
}

std::string MetricsRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["episode"] = episode;
  j["level"] = level;
  j["epsilon"] = epsilon;
  j["train_success_rate"] = train_success_rate;
  j["eval_return_mean"] = eval_return_mean;
  j["eval_success_rate"] = eval_success_rate;
  j["q_loss"] = q_loss;
  j["v_loss"] = v_loss;
  j["wall_ms"] = wall_ms;
  return j.dump();
}

// ---- Trainer -------------------------------------------------------------------

namespace {

int props_of(const EnvParams& env) {
  return static_cast<int>(generate(env, 0).alphabet().size());
}

LearnerConfig learner_config(const TrainConfig& c) {
  LearnerConfig l;
  l.gamma = c.gamma;
  l.batch_size = c.batch_size;
  l.myopic = c.myopic;
  l.double_q = c.double_q;
  l.adam = c.adam;
  return l;
}

}  // namespace

Trainer::Trainer(EnvParams env, TrainConfig config)
    : env_(env),
      config_((validate(config), config)),
      num_props_(props_of(env)),
      nets_(net_dims_for(generate(env, 0)), config.seed),
      learner_(nets_, learner_config(config)),
      curriculum_(config.curriculum_levels, config.curriculum_threshold, config.curriculum_window),
      transitions_(config.buffer_size),
      traces_(config.trace_buffer_size),
      rng_(config.seed) {
  if (config.curriculum_levels > num_props_)
    throw InvalidConfig("invalid train.curriculum_levels: exceeds the number of propositions");
}

void Trainer::run(const Callbacks& callbacks) {
  start_ms_ = now_ms();
  EpisodeOptions options{config_.subgoal_steps, config_.r_f, config_.myopic};
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  while (steps_ < config_.total_steps && !(curriculum_.complete() && config_.stop_at_completion)) {
    GridWorld world = generate(env_, rng_());
    const SubgoalSequence xi = sample_adversarial_task(curriculum_.level(), world.observe(), nets_,
                                                       config_.adversarial_candidates, num_props_, rng_);
    const double eps = epsilon_at(config_, steps_);
    options.max_steps = config_.total_steps - steps_;
    const EpisodeTrace trace = run_episode(world, xi, nets_, eps, options, rng_, [&] { after_step(callbacks); });
    ++episodes_;
    const int before = curriculum_.level();
    if (curriculum_.record(trace.success))
      level_log_.push_back(LevelChange{episodes_, before, curriculum_.last_advance_rate()});
    store(trace);
    if (!trace.success && coin(rng_) < config_.her_ratio) {
      try {
        store(her_relabel(trace, config_.r_f, rng_));
      } catch (const NoLabelsVisited&) {
      }
    } else if (!trace.success) {
      traces_.push(std::make_shared<const EpisodeTrace>(trace));
    }
  }
  if (callbacks.on_metrics && steps_ % config_.eval_interval != 0) callbacks.on_metrics(metrics());
  if (callbacks.on_checkpoint) callbacks.on_checkpoint(*this);
}

void Trainer::store(const EpisodeTrace& trace) {
  auto ptr = std::make_shared<const EpisodeTrace>(trace);
  push_transitions(transitions_, ptr);
  if (trace.success) traces_.push(ptr);
}

void Trainer::after_step(const Callbacks& callbacks) {
  ++steps_;
  if (transitions_.size() >= std::max<std::uint64_t>(config_.learning_starts, 1)) {
    if (steps_ % static_cast<std::uint64_t>(config_.q_update_interval) == 0) {
      q_loss_sum_ += learner_.update_q(transitions_, rng_);
      ++q_updates_;
    }
    if (!traces_.empty() && steps_ % static_cast<std::uint64_t>(config_.v_update_interval) == 0) {
      v_loss_sum_ += learner_.update_v(traces_, rng_);
      ++v_updates_;
    }
  }
  if (steps_ % static_cast<std::uint64_t>(config_.q_target_update_interval) == 0) nets_.sync_q_target();
  if (steps_ % static_cast<std::uint64_t>(config_.v_target_update_interval) == 0) nets_.sync_v_target();
  if (callbacks.on_metrics && steps_ % config_.eval_interval == 0) callbacks.on_metrics(metrics());
  if (callbacks.on_checkpoint && steps_ % config_.checkpoint_interval == 0) callbacks.on_checkpoint(*this);
}

MetricsRecord Trainer::metrics() {
  MetricsRecord m;
  m.step = steps_;
  m.episode = episodes_;
  m.level = curriculum_.level();
  m.epsilon = epsilon_at(config_, steps_);
  m.train_success_rate = curriculum_.success_rate();
  const EvalSummary eval =
      evaluate_sequences(env_, nets_, curriculum_.level(), config_.eval_episodes, config_.seed ^ 0x9e3779b97f4a7c15ULL,
                         EpisodeOptions{config_.subgoal_steps, config_.r_f, config_.myopic});
  m.eval_return_mean = eval.return_mean;
  m.eval_success_rate = eval.success_rate;
  m.q_loss = q_updates_ ? q_loss_sum_ / q_updates_ : 0.0;
  m.v_loss = v_updates_ ? v_loss_sum_ / v_updates_ : 0.0;
  q_loss_sum_ = v_loss_sum_ = 0.0;
  q_updates_ = v_updates_ = 0;
  m.wall_ms = config_.record_wall_time ? now_ms() - start_ms_ : 0;
  return m;
}

Checkpoint Trainer::checkpoint(std::string config_text) const {
  Checkpoint c;
  c.nets = nets_;
  c.adam_embedder = learner_.adam_embedder();
  c.adam_q = learner_.adam_q();
  c.adam_v = learner_.adam_v();
  std::ostringstream rng_text;
  rng_text << rng_;
  c.rng_state = rng_text.str();
  c.curriculum_level = curriculum_.level();
  c.steps = steps_;
  c.episodes = episodes_;
  c.config_text = std::move(config_text);
  return c;
}

}  // namespace ltlo
