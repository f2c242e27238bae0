#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltlo/approx.hpp"
#include "ltlo/decompose.hpp"
#include "ltlo/envs.hpp"
#include "ltlo/ltl.hpp"

namespace ltlo {

/// Value estimates the executor consults. Takes the world rather than an
/// observation so exact planners can stand in for the networks.
class ValueModel {
 public:
  virtual ~ValueModel() = default;
  virtual std::array<float, kNumActions> q_values(const GridWorld& world, PropId p,
                                                  std::span<const PropId> xi) const = 0;
  virtual double v_value(const GridWorld& world, std::span<const PropId> xi) const = 0;
};

class NetModel : public ValueModel {
 public:
  explicit NetModel(const AgentNets<float>& nets) : nets_(nets) {}
  std::array<float, kNumActions> q_values(const GridWorld& world, PropId p, std::span<const PropId> xi) const override;
  double v_value(const GridWorld& world, std::span<const PropId> xi) const override;

 private:
  const AgentNets<float>& nets_;
};

class EmptyK : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Highest V; ties go to the shorter sequence, then the lexicographically
/// smaller one. Throws EmptyK when k is empty.
SubgoalSequence select_sequence(std::span<const SubgoalSequence> k, const GridWorld& world, const ValueModel& model);

struct ShieldedAction {
  Action action = Action::Up;
  bool fallback = false;
  int rejections = 0;
};

/// Tries actions in descending option Q and takes the first whose proximity
/// value max_{q in unsafe} Q_q(s, a; empty) stays within kappa. When every
/// action is rejected, returns the one with the smallest proximity value.
ShieldedAction safe_action(const GridWorld& world, std::span<const PropId> xi, const ValueModel& model,
                           LabelSet unsafe, double kappa, bool myopic = false);

struct ExecOptions {
  DecompositionCaps caps;
  bool shield = true;
  double kappa = 9.95;
  bool myopic = false;
  double r_f = 10.0;
  int subgoal_steps = 100;
  /// 0 picks subgoal_steps * longest sequence * 2.
  int max_steps = 0;
};

struct ExecEvent {
  int step = 0;
  Pos pos;
  LabelSet label;
};

struct ExecutionReport {
  bool success = false;
  bool violated = false;  // ended by reaching an unsafe proposition
  bool step_cap = false;
  int steps = 0;
  double total_return = 0.0;
  int violations = 0;
  int fallbacks = 0;
  int step_cap_limit = 0;
  std::vector<std::pair<int, SubgoalSequence>> chosen;  // (step, remaining plan)
  std::vector<ExecEvent> events;
  std::vector<Pos> path;  // agent positions, spawn first
  std::vector<Action> actions;
  std::vector<LabelSet> labels;
  std::vector<double> rewards;
  Formula residual;
};

/// Decomposes phi and follows the best plan, progressing the residual after
/// every step and replanning on each label event. Ends when the residual is
/// decided, a plan is exhausted, every plan dies, or the step cap is hit.
/// Throws EmptyResult when phi has no satisfying sequence.
ExecutionReport execute(GridWorld world, const Formula& phi, const ValueModel& model, const ExecOptions& options);

/// Report as a JSON object (names resolved through the world's alphabet).
std::string report_json(const ExecutionReport& report, const Formula& phi, const Alphabet& alphabet);

}  // namespace ltlo
