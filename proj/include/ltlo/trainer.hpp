#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ltlo/approx.hpp"
#include "ltlo/envs.hpp"
#include "ltlo/learner.hpp"

namespace ltlo {

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  std::uint64_t seed = 1;
  std::uint64_t total_steps = 10'000'000;
  double gamma = 0.99;
  double r_f = 10.0;
  double eps_init = 0.75;
  double eps_final = 0.05;
  double eps_fraction = 0.5;  // of total_steps spent decaying
  int curriculum_levels = 5;
  double curriculum_threshold = 0.8;
  int curriculum_window = 100;
  bool stop_at_completion = true;
  int adversarial_candidates = 8;
  int subgoal_steps = 100;  // T_S
  int batch_size = 256;
  int q_update_interval = 5;
  int q_target_update_interval = 1500;
  int v_update_interval = 5;
  int v_target_update_interval = 1500;
  double her_ratio = 1.0;
  std::size_t buffer_size = 2'000'000;
  std::size_t trace_buffer_size = 20'000;
  std::uint64_t learning_starts = 1000;
  AdamConfig adam;
  std::uint64_t eval_interval = 10'000;
  int eval_episodes = 64;
  std::uint64_t checkpoint_interval = 100'000;
  bool myopic = false;
  bool double_q = false;
  bool record_wall_time = false;
};

/// Throws InvalidConfig naming the offending field.
void validate(const TrainConfig& config);

/// Levels 1..K; advances when the success rate over a full window of the
/// current level reaches the threshold. The window restarts on each advance.
class Curriculum {
 public:
  Curriculum(int levels, double threshold, int window);

  int level() const { return level_; }
  int levels() const { return levels_; }
  bool complete() const { return complete_; }
  double success_rate() const;
  /// True when this outcome advanced the level or completed the curriculum.
  bool record(bool success);
  void set_level(int level);
  double last_advance_rate() const { return last_rate_; }

 private:
  int levels_;
  double threshold_;
  std::size_t window_;
  int level_ = 1;
  bool complete_ = false;
  std::deque<bool> outcomes_;
  int successes_ = 0;
  double last_rate_ = 0.0;
};

/// Linear from eps_init to eps_final over eps_fraction * total_steps.
double epsilon_at(const TrainConfig& config, std::uint64_t step);

/// Uniform sequence of `length` propositions with no immediate repeats.
SubgoalSequence random_sequence(int length, int num_props, std::mt19937_64& rng);

/// Lowest-V candidate among n random sequences; first index wins ties.
SubgoalSequence sample_adversarial_task(int length, const Observation& s0, const AgentNets<float>& nets, int candidates,
                                        int num_props, std::mt19937_64& rng);

/// First action with the largest value.
int greedy_action(const std::array<float, kNumActions>& q);

struct EpisodeOptions {
  int subgoal_steps = 100;
  double r_f = 10.0;
  bool myopic = false;
  /// Hard cap on the episode length across all subgoals.
  std::uint64_t max_steps = UINT64_MAX;
};

/// Executes the options for xi in turn, epsilon-greedy, at most
/// subgoal_steps per subgoal. `after_step` runs after every environment step.
EpisodeTrace run_episode(GridWorld& world, const SubgoalSequence& xi, const AgentNets<float>& nets, double epsilon,
                         const EpisodeOptions& options, std::mt19937_64& rng,
                         const std::function<void()>& after_step = {});

struct EvalSummary {
  double return_mean = 0.0;
  double success_rate = 0.0;
};

/// Greedy rollouts on `episodes` random sequences of the given length; the
/// task set depends only on `seed`.
EvalSummary evaluate_sequences(const EnvParams& env, const AgentNets<float>& nets, int length, int episodes,
                               std::uint64_t seed, const EpisodeOptions& options);

struct MetricsRecord {
  std::uint64_t step = 0;
  std::uint64_t episode = 0;
  int level = 1;
  double epsilon = 0.0;
  double train_success_rate = 0.0;
  double eval_return_mean = 0.0;
  double eval_success_rate = 0.0;
  double q_loss = 0.0;
  double v_loss = 0.0;
  std::int64_t wall_ms = 0;

  std::string to_json() const;
};

struct LevelChange {
  std::uint64_t episode = 0;
  int from = 1;
  double success_rate = 0.0;
};

class Trainer {
 public:
  struct Callbacks {
    std::function<void(const MetricsRecord&)> on_metrics;
    std::function<void(const Trainer&)> on_checkpoint;
  };

  Trainer(EnvParams env, TrainConfig config);

  /// Trains until the step budget is spent or, with stop_at_completion, the
  /// curriculum completes. Throws NumericalError on non-finite parameters.
  void run(const Callbacks& callbacks = {});

  Checkpoint checkpoint(std::string config_text) const;

  const AgentNets<float>& nets() const { return nets_; }
  const Curriculum& curriculum() const { return curriculum_; }
  const TrainConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  std::uint64_t episodes() const { return episodes_; }
  const std::vector<LevelChange>& level_log() const { return level_log_; }
  const TransitionBuffer& transitions() const { return transitions_; }
  const TraceBuffer& traces() const { return traces_; }

 private:
  void after_step(const Callbacks& callbacks);
  void store(const EpisodeTrace& trace);
  MetricsRecord metrics();

  EnvParams env_;
  TrainConfig config_;
  int num_props_;
  AgentNets<float> nets_;
  Learner learner_;
  Curriculum curriculum_;
  TransitionBuffer transitions_;
  TraceBuffer traces_;
  std::mt19937_64 rng_;
  std::uint64_t steps_ = 0;
  std::uint64_t episodes_ = 0;
  std::vector<LevelChange> level_log_;
  double q_loss_sum_ = 0.0, v_loss_sum_ = 0.0;
  int q_updates_ = 0, v_updates_ = 0;
  std::int64_t start_ms_ = 0;
};

}  // namespace ltlo
