#include "ltlo/envs.hpp"

#include <algorithm>
#include <deque>
#include <random>

namespace ltlo {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Letter: return "letter";
    case EnvKind::Room: return "room";
    case EnvKind::Fig1: return "fig1";
  }
  return "?";
}

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "letter") return EnvKind::Letter;
  if (name == "room") return EnvKind::Room;
  if (name == "fig1") return EnvKind::Fig1;
  throw InvalidParams("unknown env kind '" + std::string(name) + "'");
}

EnvParams EnvParams::defaults(EnvKind kind) {
  EnvParams p;
  p.kind = kind;
  switch (kind) {
    case EnvKind::Letter: break;
    case EnvKind::Room:
      p.n = 9;
      p.m = 8;
      p.k = 5;
      break;
    case EnvKind::Fig1:
      p.n = 7;
      p.m = 4;
      p.k = 3;
      p.fixed_layout = true;
      p.step_reward = -0.1;
      break;
  }
  return p;
}

GridWorld::GridWorld(int n, Alphabet alphabet, double step_reward)
    : n_(n), alphabet_(std::move(alphabet)), step_reward_(step_reward), cells_(static_cast<std::size_t>(n * n)) {
  if (n < 2) throw InvalidParams("grid side must be at least 2");
  if (alphabet_.size() > 26) throw InvalidParams("at most 26 letters");
}

void GridWorld::place_agent(Pos p) {
  if (!in_bounds(p) || at(p).kind == CellKind::Wall) throw InvalidParams("agent must stand on a free cell");
  agent_ = p;
}

bool GridWorld::passable_with(Pos p, unsigned keys) const {
  if (!in_bounds(p)) return false;
  const Cell& c = at(p);
  if (c.kind == CellKind::Wall) return false;
  if (c.kind == CellKind::Lock) return (keys >> c.value) & 1u;
  return true;
}

bool GridWorld::passable(Pos p) const {
  unsigned keys = 0;
  for (int c = 0; c < kNumColors; ++c)
    if (keys_[static_cast<std::size_t>(c)]) keys |= 1u << c;
  return passable_with(p, keys);
}

LabelSet GridWorld::label() const {
  const Cell& c = at(agent_);
  return c.kind == CellKind::Letter ? LabelSet::of(c.value) : LabelSet{};
}

Pos moved(Pos p, Action a) {
  switch (a) {
    case Action::Up: return {p.row - 1, p.col};
    case Action::Down: return {p.row + 1, p.col};
    case Action::Left: return {p.row, p.col - 1};
    case Action::Right: return {p.row, p.col + 1};
  }
  return p;
}

GridWorld::StepResult GridWorld::step(Action a) {
  const Pos next = moved(agent_, a);
  if (passable(next)) {
    agent_ = next;
    Cell& c = cells_[index(next)];
    if (c.kind == CellKind::Key) {
      keys_[c.value] = true;
      c = Cell{};
    }
  }
  return {label(), step_reward_};
}

Observation GridWorld::observe() const {
  const int k = static_cast<int>(alphabet_.size());
  const int plane = n_ * n_;
  Observation obs;
  for (int i = 0; i < plane; ++i) {
    const Cell& c = cells_[static_cast<std::size_t>(i)];
    int ch = -1;
    switch (c.kind) {
      case CellKind::Empty: break;
      case CellKind::Letter: ch = c.value; break;
      case CellKind::Wall: ch = k; break;
      case CellKind::Lock: ch = k + 1 + c.value; break;
      case CellKind::Key: ch = k + 1 + kNumColors + c.value; break;
    }
    if (ch >= 0) obs.active.push_back(static_cast<std::uint16_t>(ch * plane + i));
  }
  obs.active.push_back(static_cast<std::uint16_t>((channels() - 1) * plane + agent_.row * n_ + agent_.col));
  std::sort(obs.active.begin(), obs.active.end());
  return obs;
}

std::vector<Pos> GridWorld::cells_of(PropId p) const {
  std::vector<Pos> out;
  for (int r = 0; r < n_; ++r)
    for (int c = 0; c < n_; ++c)
      if (at({r, c}).kind == CellKind::Letter && at({r, c}).value == p) out.push_back({r, c});
  return out;
}

std::string GridWorld::render() const {
  std::string out;
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) {
      const Cell& cell = at({r, c});
      char ch = '.';
      switch (cell.kind) {
        case CellKind::Empty: break;
        case CellKind::Letter: ch = static_cast<char>('a' + cell.value); break;
        case CellKind::Wall: ch = '#'; break;
        case CellKind::Lock: ch = cell.value == 0 ? 'Y' : 'G'; break;
        case CellKind::Key: ch = static_cast<char>('1' + cell.value); break;
      }
      if (agent_ == Pos{r, c}) ch = '@';
      out += ch;
    }
    out += '\n';
  }
  return out;
}

GridWorld GridWorld::from_ascii(std::string_view text, const Alphabet& alphabet, double step_reward) {
  std::vector<std::string_view> rows;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto row = text.substr(0, nl);
    if (!row.empty()) rows.push_back(row);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  const int n = static_cast<int>(rows.size());
  GridWorld w(n, alphabet, step_reward);
  int agents = 0;
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != n) throw InvalidParams("board must be square");
    for (int c = 0; c < n; ++c) {
      const char ch = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      Cell cell;
      if (ch == '#') {
        cell.kind = CellKind::Wall;
      } else if (ch == 'Y' || ch == 'G') {
        cell = {CellKind::Lock, static_cast<std::uint8_t>(ch == 'Y' ? 0 : 1)};
      } else if (ch == '1' || ch == '2') {
        cell = {CellKind::Key, static_cast<std::uint8_t>(ch - '1')};
      } else if (ch >= 'a' && ch <= 'z') {
        if (static_cast<std::size_t>(ch - 'a') >= alphabet.size()) throw InvalidParams("letter outside alphabet");
        cell = {CellKind::Letter, static_cast<std::uint8_t>(ch - 'a')};
      } else if (ch == '@') {
        w.agent_ = {r, c};
        ++agents;
      } else if (ch != '.') {
        throw InvalidParams(std::string("unknown board char '") + ch + "'");
      }
      w.set({r, c}, cell);
    }
  }
  if (agents != 1) throw InvalidParams("board needs exactly one '@'");
  return w;
}

std::vector<int> bfs_distances(const GridWorld& world, Pos from, unsigned keys) {
  const int n = world.size();
  const std::size_t cells = static_cast<std::size_t>(n * n);
  constexpr unsigned kMasks = 1u << kNumColors;
  std::vector<int> dist(cells * kMasks, -1);
  std::deque<std::pair<Pos, unsigned>> queue;
  auto slot = [&](Pos p, unsigned m) { return static_cast<std::size_t>(p.row * n + p.col) * kMasks + m; };
  dist[slot(from, keys)] = 0;
  queue.push_back({from, keys});
  while (!queue.empty()) {
    const auto [p, m] = queue.front();
    queue.pop_front();
    const int d = dist[slot(p, m)];
    for (int a = 0; a < kNumActions; ++a) {
      const Pos q = moved(p, static_cast<Action>(a));
      if (!world.passable_with(q, m)) continue;
      unsigned mq = m;
      if (world.at(q).kind == CellKind::Key) mq |= 1u << world.at(q).value;
      if (dist[slot(q, mq)] >= 0) continue;
      dist[slot(q, mq)] = d + 1;
      queue.push_back({q, mq});
    }
  }
  std::vector<int> out(cells, -1);
  for (std::size_t i = 0; i < cells; ++i)
    for (unsigned m = 0; m < kMasks; ++m) {
      const int d = dist[i * kMasks + m];
      if (d >= 0 && (out[i] < 0 || d < out[i])) out[i] = d;
    }
  return out;
}

namespace {

using Rng = std::mt19937_64;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

// Cells reachable from `from` holding `keys`, without stepping on keys.
std::vector<char> flood(const GridWorld& w, Pos from, unsigned keys) {
  const int n = w.size();
  std::vector<char> seen(static_cast<std::size_t>(n * n), 0);
  std::vector<Pos> stack{from};
  seen[static_cast<std::size_t>(from.row * n + from.col)] = 1;
  while (!stack.empty()) {
    const Pos p = stack.back();
    stack.pop_back();
    for (int a = 0; a < kNumActions; ++a) {
      const Pos q = moved(p, static_cast<Action>(a));
      if (!w.passable_with(q, keys) || w.at(q).kind == CellKind::Key) continue;
      auto& s = seen[static_cast<std::size_t>(q.row * n + q.col)];
      if (s) continue;
      s = 1;
      stack.push_back(q);
    }
  }
  return seen;
}

std::vector<Pos> reachable_empty(const GridWorld& w, Pos from, unsigned keys) {
  const auto seen = flood(w, from, keys);
  std::vector<Pos> out;
  for (int r = 0; r < w.size(); ++r)
    for (int c = 0; c < w.size(); ++c)
      if (seen[static_cast<std::size_t>(r * w.size() + c)] && w.at({r, c}).kind == CellKind::Empty) out.push_back({r, c});
  return out;
}

void place_letters(GridWorld& w, std::vector<Pos>& free, int m, int k, Rng& rng) {
  std::shuffle(free.begin(), free.end(), rng);
  for (int i = 0; i < m; ++i) {
    const int letter = i < k ? i : uniform(rng, 0, k - 1);
    w.set(free[static_cast<std::size_t>(i)], {CellKind::Letter, static_cast<std::uint8_t>(letter)});
  }
  free.erase(free.begin(), free.begin() + m);
}

GridWorld letter_layout(const EnvParams& p, std::uint64_t seed) {
  Rng rng(seed);
  GridWorld w(p.n, Alphabet::letters(static_cast<std::size_t>(p.k)), p.step_reward);
  std::vector<Pos> free;
  for (int r = 0; r < p.n; ++r)
    for (int c = 0; c < p.n; ++c) free.push_back({r, c});
  place_letters(w, free, p.m, p.k, rng);
  w.place_agent(pick(rng, free));
  return w;
}

// Four rooms split by a wall row and column through the middle. Each wall
// segment has one corridor at its center; two of them get locks.
GridWorld room_layout(const EnvParams& p, std::uint64_t seed) {
  Rng rng(seed);
  const int n = p.n;
  const int mid = n / 2;
  GridWorld w(n, Alphabet::letters(static_cast<std::size_t>(p.k)), p.step_reward);
  for (int i = 0; i < n; ++i) {
    w.set({mid, i}, {CellKind::Wall, 0});
    w.set({i, mid}, {CellKind::Wall, 0});
  }
  const int far = mid + 1 + (n - mid - 1) / 2;
  const std::array<Pos, 4> corridors{Pos{mid / 2, mid}, Pos{far, mid}, Pos{mid, mid / 2}, Pos{mid, far}};
  for (Pos c : corridors) w.set(c, {});
  std::array<int, 4> order{0, 1, 2, 3};
  std::shuffle(order.begin(), order.end(), rng);
  const int first_color = uniform(rng, 0, 1);
  for (int i = 0; i < kNumColors; ++i)
    w.set(corridors[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])],
          {CellKind::Lock, static_cast<std::uint8_t>((first_color + i) % kNumColors)});

  std::vector<Pos> free;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (r != mid && c != mid) free.push_back({r, c});
  place_letters(w, free, p.m, p.k, rng);
  const Pos spawn = pick(rng, free);
  w.place_agent(spawn);

  // First key goes where the agent can walk with no keys, next to a lock
  // that borders that region; the second one where the first key leads.
  const auto seen = flood(w, spawn, 0);
  std::vector<int> bordering;
  for (Pos c : corridors) {
    const Cell cell = w.at(c);
    if (cell.kind != CellKind::Lock) continue;
    for (int a = 0; a < kNumActions; ++a) {
      const Pos q = moved(c, static_cast<Action>(a));
      if (w.in_bounds(q) && seen[static_cast<std::size_t>(q.row * n + q.col)]) {
        bordering.push_back(cell.value);
        break;
      }
    }
  }
  const int first_key = pick(rng, bordering);
  auto key_cells = reachable_empty(w, spawn, 0);
  std::erase(key_cells, spawn);
  w.set(pick(rng, key_cells), {CellKind::Key, static_cast<std::uint8_t>(first_key)});

  auto next_region = reachable_empty(w, spawn, 1u << first_key);
  std::erase(next_region, spawn);
  w.set(pick(rng, next_region), {CellKind::Key, static_cast<std::uint8_t>(1 - first_key)});
  return w;
}

void validate(const EnvParams& p) {
  if (p.k < 1 || p.k > 26) throw InvalidParams("k must be in [1, 26]");
  if (p.m <= p.k) throw InvalidParams("need m > k");
  switch (p.kind) {
    case EnvKind::Letter:
      if (p.n < 2) throw InvalidParams("n must be at least 2");
      if (p.m > p.n * p.n - 1) throw InvalidParams("need m <= n*n - 1");
      break;
    case EnvKind::Room: {
      if (p.n < 5) throw InvalidParams("room needs n >= 5");
      const int mid = p.n / 2;
      const int side = std::min(mid, p.n - mid - 1);
      // Even if every letter lands in the spawn room, spawn and both keys
      // still fit next to them.
      if (p.m + 3 > side * side) throw InvalidParams("too many letters for the rooms");
      break;
    }
    case EnvKind::Fig1: break;
  }
}

void respawn(GridWorld& w, Rng& rng) {
  unsigned keys = 0;
  for (int c = 0; c < kNumColors; ++c)
    if (w.holds_key(c)) keys |= 1u << c;
  w.place_agent(pick(rng, reachable_empty(w, w.agent(), keys)));
}

}  // namespace

constexpr std::string_view kFig1Board =
    ".......\n"
    ".a..@..\n"
    ".......\n"
    ".......\n"
    ".......\n"
    "...a..c\n"
    "..b....\n";

GridWorld fig1_world(std::uint64_t spawn_seed, double step_reward) {
  GridWorld w = GridWorld::from_ascii(kFig1Board, Alphabet({"wood", "diamond", "ax"}), step_reward);
  Rng rng(spawn_seed);
  respawn(w, rng);
  return w;
}

GridWorld generate(const EnvParams& params, std::uint64_t seed) {
  validate(params);
  auto layout = [&](std::uint64_t s) {
    switch (params.kind) {
      case EnvKind::Letter: return letter_layout(params, s);
      case EnvKind::Room: return room_layout(params, s);
      case EnvKind::Fig1: break;
    }
    return fig1_world(s, params.step_reward);
  };
  if (params.kind == EnvKind::Fig1) return fig1_world(seed, params.step_reward);
  if (!params.fixed_layout) return layout(seed);
  GridWorld w = layout(params.layout_seed);
  Rng rng(seed);
  respawn(w, rng);
  return w;
}

TaskableEnv::TaskableEnv(GridWorld world, Formula task, double r_f, int max_steps)
    : world_(std::move(world)), residual_(simplify(task)), r_f_(r_f), max_steps_(max_steps) {
  if (residual_.is_true() || residual_.is_false()) {
    done_ = true;
    satisfied_ = residual_.is_true();
  }
}

StepOutcome TaskableEnv::step(Action a) {
  if (done_) throw StepAfterDone("episode already finished");
  const auto env = world_.step(a);
  ++steps_;
  residual_ = prog(env.label, residual_);
  double reward = env.reward;
  if (residual_.is_true()) {
    reward = r_f_;
    done_ = satisfied_ = true;
  } else if (residual_.is_false()) {
    reward = -r_f_;
    done_ = true;
  } else if (steps_ >= max_steps_) {
    // Out of budget: whatever is left only has to hold at the end of the
    // trace, e.g. G !lake survives, F a does not.
    done_ = true;
    satisfied_ = holds_at_end(residual_);
    reward = satisfied_ ? r_f_ : -r_f_;
  }
  return {world_.observe(), reward, done_, env.label, residual_};
}

}  // namespace ltlo
