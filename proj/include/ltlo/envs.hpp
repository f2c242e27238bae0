#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ltlo/ltl.hpp"

namespace ltlo {

enum class Action : std::uint8_t { Up, Down, Left, Right };
inline constexpr int kNumActions = 4;

enum class CellKind : std::uint8_t { Empty, Letter, Wall, Lock, Key };

/// `value` is the proposition id for letters and the color (0 or 1) for
/// locks and keys.
struct Cell {
  CellKind kind = CellKind::Empty;
  std::uint8_t value = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Pos {
  int row = 0;
  int col = 0;

  friend bool operator==(const Pos&, const Pos&) = default;
};

inline constexpr int kNumColors = 2;

enum class EnvKind { Letter, Room, Fig1 };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

struct EnvParams {
  EnvKind kind = EnvKind::Letter;
  int n = 7;
  int m = 10;  // labeled cells
  int k = 5;   // distinct letters
  /// Reuse the layout drawn from layout_seed; only the spawn changes.
  bool fixed_layout = false;
  std::uint64_t layout_seed = 0;
  double step_reward = -0.01;

  static EnvParams defaults(EnvKind kind);
};

class InvalidParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sparse one-hot grid. Indices are channel * n * n + row * n + col, sorted.
/// Channels: one per letter, then wall, lock per color, key per color, agent.
struct Observation {
  std::vector<std::uint16_t> active;

  friend bool operator==(const Observation&, const Observation&) = default;
};

class GridWorld {
 public:
  GridWorld() = default;
  GridWorld(int n, Alphabet alphabet, double step_reward = -0.01);

  int size() const { return n_; }
  const Alphabet& alphabet() const { return alphabet_; }
  double step_reward() const { return step_reward_; }

  bool in_bounds(Pos p) const { return p.row >= 0 && p.col >= 0 && p.row < n_ && p.col < n_; }
  const Cell& at(Pos p) const { return cells_[index(p)]; }
  void set(Pos p, Cell c) { cells_[index(p)] = c; }

  Pos agent() const { return agent_; }
  void place_agent(Pos p);
  bool holds_key(int color) const { return keys_[static_cast<std::size_t>(color)]; }

  /// Walkable for the agent given the keys it holds now.
  bool passable(Pos p) const;
  /// Walkable given an explicit key set (bit c = holds key c).
  bool passable_with(Pos p, unsigned keys) const;

  LabelSet label() const;

  struct StepResult {
    LabelSet label;
    double reward = 0.0;
  };
  StepResult step(Action a);

  int channels() const { return static_cast<int>(alphabet_.size()) + 2 + 2 * kNumColors; }
  std::size_t obs_dim() const { return static_cast<std::size_t>(channels() * n_ * n_); }
  Observation observe() const;

  std::vector<Pos> cells_of(PropId p) const;

  /// One char per cell: '.' empty, '#' wall, 'a'+id letter, 'Y'/'G' locks
  /// and '1'/'2' keys for colors 0/1, '@' agent. Rows end in '\n'.
  std::string render() const;
  static GridWorld from_ascii(std::string_view text, const Alphabet& alphabet, double step_reward = -0.01);

  friend bool operator==(const GridWorld&, const GridWorld&) = default;

 private:
  std::size_t index(Pos p) const { return static_cast<std::size_t>(p.row * n_ + p.col); }

  int n_ = 0;
  Alphabet alphabet_;
  double step_reward_ = -0.01;
  std::vector<Cell> cells_;
  Pos agent_;
  std::array<bool, kNumColors> keys_{};
};

Pos moved(Pos p, Action a);

/// Deterministic in (params, seed). With fixed_layout the board comes from
/// params.layout_seed and `seed` only picks the spawn.
GridWorld generate(const EnvParams& params, std::uint64_t seed);

/// The 7x7 craft board: two wood cells, a diamond and an ax.
GridWorld fig1_world(std::uint64_t spawn_seed, double step_reward = -0.1);
inline constexpr Pos kFig1Spawn{1, 4};

/// Shortest path lengths from `from` to every cell, tracking keys picked up
/// on the way; -1 where unreachable. Keys held at the start are `keys`.
std::vector<int> bfs_distances(const GridWorld& world, Pos from, unsigned keys);

class StepAfterDone : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct StepOutcome {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  LabelSet label;
  Formula residual;
};

/// Grid world paired with a task formula: rewards follow the residual.
class TaskableEnv {
 public:
  TaskableEnv(GridWorld world, Formula task, double r_f, int max_steps);

  StepOutcome step(Action a);

  const GridWorld& world() const { return world_; }
  const Formula& residual() const { return residual_; }
  bool done() const { return done_; }
  bool satisfied() const { return satisfied_; }
  int steps() const { return steps_; }
  int max_steps() const { return max_steps_; }

 private:
  GridWorld world_;
  Formula residual_;
  double r_f_;
  int max_steps_;
  int steps_ = 0;
  bool done_ = false;
  bool satisfied_ = false;
};

}  // namespace ltlo
