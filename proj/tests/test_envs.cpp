#include <doctest.h>

#include <deque>
#include <random>
#include <set>

#include "ltlo/envs.hpp"

using namespace ltlo;

namespace {

// Independent reachability check on the rendered board: BFS over
// (row, col, keys) reading only characters.
std::set<std::pair<int, int>> reachable_from_text(const std::string& board) {
  std::vector<std::string> rows;
  std::size_t start = 0;
  while (start < board.size()) {
    const auto nl = board.find('\n', start);
    rows.push_back(board.substr(start, nl - start));
    start = nl + 1;
  }
  const int n = static_cast<int>(rows.size());
  int sr = -1, sc = -1;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (rows[r][c] == '@') sr = r, sc = c;
  std::set<std::tuple<int, int, int>> seen{{sr, sc, 0}};
  std::deque<std::tuple<int, int, int>> q{{sr, sc, 0}};
  std::set<std::pair<int, int>> cells{{sr, sc}};
  const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
  while (!q.empty()) {
    auto [r, c, keys] = q.front();
    q.pop_front();
    for (int d = 0; d < 4; ++d) {
      const int nr = r + dr[d], nc = c + dc[d];
      if (nr < 0 || nc < 0 || nr >= n || nc >= n) continue;
      const char ch = rows[nr][nc];
      if (ch == '#') continue;
      if (ch == 'Y' && !(keys & 1)) continue;
      if (ch == 'G' && !(keys & 2)) continue;
      int nk = keys;
      if (ch == '1') nk |= 1;
      if (ch == '2') nk |= 2;
      if (seen.insert({nr, nc, nk}).second) {
        q.push_back({nr, nc, nk});
        cells.insert({nr, nc});
      }
    }
  }
  return cells;
}

int count_kind(const GridWorld& w, CellKind kind) {
  int count = 0;
  for (int r = 0; r < w.size(); ++r)
    for (int c = 0; c < w.size(); ++c) count += w.at({r, c}).kind == kind;
  return count;
}

}  // namespace

TEST_CASE("letter generation") {
  EnvParams p;  // n=7, m=10, k=5
  const GridWorld w = generate(p, 0);
  CHECK(w.size() == 7);
  CHECK(count_kind(w, CellKind::Letter) == 10);
  CHECK(count_kind(w, CellKind::Wall) == 0);
  for (PropId l = 0; l < 5; ++l) CHECK_FALSE(w.cells_of(l).empty());
  CHECK(w.at(w.agent()).kind == CellKind::Empty);
  CHECK(w == generate(p, 0));
  CHECK_FALSE(w == generate(p, 1));
}

TEST_CASE("letter params are validated") {
  EnvParams p;
  p.m = 5;
  CHECK_THROWS_AS(generate(p, 0), InvalidParams);
  p.m = 49;
  CHECK_THROWS_AS(generate(p, 0), InvalidParams);
  p.m = 48;
  CHECK_NOTHROW(generate(p, 0));
}

TEST_CASE("room generation") {
  const EnvParams p = EnvParams::defaults(EnvKind::Room);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GridWorld w = generate(p, seed);
    CHECK(count_kind(w, CellKind::Lock) == 2);
    CHECK(count_kind(w, CellKind::Key) == 2);
    CHECK(count_kind(w, CellKind::Letter) == 8);
    // 2n-1 wall cells minus 4 corridors.
    CHECK(count_kind(w, CellKind::Wall) == 2 * 9 - 1 - 4);
    std::set<int> lock_colors, key_colors;
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) {
        if (w.at({r, c}).kind == CellKind::Lock) lock_colors.insert(w.at({r, c}).value);
        if (w.at({r, c}).kind == CellKind::Key) key_colors.insert(w.at({r, c}).value);
      }
    CHECK(lock_colors == std::set<int>{0, 1});
    CHECK(key_colors == std::set<int>{0, 1});
    for (PropId l = 0; l < 5; ++l) CHECK_FALSE(w.cells_of(l).empty());
  }
}

TEST_CASE("room boards are solvable") {
  const EnvParams p = EnvParams::defaults(EnvKind::Room);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const GridWorld w = generate(p, seed);
    const auto reach = reachable_from_text(w.render());
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) {
        const auto kind = w.at({r, c}).kind;
        if (kind == CellKind::Letter || kind == CellKind::Key || kind == CellKind::Lock)
          REQUIRE_MESSAGE(reach.count({r, c}), "seed ", seed, "\n", w.render());
      }
  }
}

TEST_CASE("bfs_distances agrees with the text oracle on reachability") {
  const EnvParams p = EnvParams::defaults(EnvKind::Room);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const GridWorld w = generate(p, seed);
    const auto reach = reachable_from_text(w.render());
    const auto dist = bfs_distances(w, w.agent(), 0);
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) CHECK((dist[static_cast<std::size_t>(r * 9 + c)] >= 0) == (reach.count({r, c}) > 0));
  }
}

TEST_CASE("fixed layout keeps the board and moves the spawn") {
  for (EnvKind kind : {EnvKind::Letter, EnvKind::Room}) {
    EnvParams p = EnvParams::defaults(kind);
    p.fixed_layout = true;
    p.layout_seed = 42;
    std::set<std::pair<int, int>> spawns;
    const GridWorld first = generate(p, 0);
    for (std::uint64_t s = 0; s < 30; ++s) {
      GridWorld w = generate(p, s);
      spawns.insert({w.agent().row, w.agent().col});
      w.place_agent(first.agent());
      CHECK(w == first);
    }
    CHECK(spawns.size() > 5);
  }
}

TEST_CASE("env_step mechanics") {
  const Alphabet ab = Alphabet::letters(2);
  GridWorld w = GridWorld::from_ascii(
      "#a..\n"
      "@1Yb\n"
      "....\n"
      "....\n",
      ab);
  auto r = w.step(Action::Up);  // wall
  CHECK(w.agent() == Pos{1, 0});
  CHECK(r.reward == doctest::Approx(-0.01));
  CHECK(r.label.empty());
  w.step(Action::Left);  // edge
  CHECK(w.agent() == Pos{1, 0});

  r = w.step(Action::Right);  // key
  CHECK(w.agent() == Pos{1, 1});
  CHECK(w.holds_key(0));
  CHECK(w.at({1, 1}).kind == CellKind::Empty);
  w.step(Action::Right);  // lock opens with the key
  CHECK(w.agent() == Pos{1, 2});
  r = w.step(Action::Right);
  CHECK(r.label == LabelSet::of(1));

  GridWorld locked = GridWorld::from_ascii(
      "@Y\n"
      "..\n",
      ab);
  locked.step(Action::Right);
  CHECK(locked.agent() == Pos{0, 0});
}

TEST_CASE("label is the letter under the agent") {
  std::mt19937_64 rng(1);
  GridWorld w = generate(EnvParams{}, 3);
  for (int t = 0; t < 500; ++t) {
    const auto r = w.step(static_cast<Action>(rng() % 4));
    const Cell& c = w.at(w.agent());
    CHECK(r.label == (c.kind == CellKind::Letter ? LabelSet::of(c.value) : LabelSet{}));
  }
}

TEST_CASE("observation encoding") {
  const GridWorld w = generate(EnvParams::defaults(EnvKind::Room), 5);
  const Observation obs = w.observe();
  const int plane = 81;
  CHECK(w.channels() == 5 + 6);
  std::vector<int> per_cell(plane, 0);
  int agent_bits = 0;
  for (auto i : obs.active) {
    CHECK(i < w.obs_dim());
    ++per_cell[i % plane];
    if (i / plane == w.channels() - 1) {
      ++agent_bits;
      CHECK(i % plane == w.agent().row * 9 + w.agent().col);
    }
  }
  CHECK(agent_bits == 1);
  for (int v : per_cell) CHECK(v <= 2);
  CHECK(std::is_sorted(obs.active.begin(), obs.active.end()));
  CHECK(obs.active.size() == static_cast<std::size_t>(count_kind(w, CellKind::Wall) + 2 + 2 + 8 + 1));
}

TEST_CASE("render round-trips") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const GridWorld w = generate(EnvParams::defaults(EnvKind::Room), s);
    CHECK(GridWorld::from_ascii(w.render(), w.alphabet()) == w);
  }
}

TEST_CASE("fig1 board") {
  const GridWorld w = fig1_world(0);
  CHECK(w.alphabet().names() == std::vector<std::string>{"wood", "diamond", "ax"});
  CHECK(w.cells_of(0) == std::vector<Pos>{{1, 1}, {5, 3}});
  CHECK(w.cells_of(1) == std::vector<Pos>{{6, 2}});
  CHECK(w.cells_of(2) == std::vector<Pos>{{5, 6}});
  CHECK(w.step_reward() == doctest::Approx(-0.1));
  const auto d = bfs_distances(w, kFig1Spawn, 0);
  auto at = [&](Pos p) { return d[static_cast<std::size_t>(p.row * 7 + p.col)]; };
  // Near wood then the rest: 3 + 6 + 5; far wood: 5 + 2 + 5.
  CHECK(at({1, 1}) == 3);
  CHECK(at({5, 3}) == 5);
}

TEST_CASE("taskable rewards") {
  const Alphabet ab = Alphabet::letters(5);
  const auto board = GridWorld::from_ascii(
      "@a...\n"
      "e....\n"
      ".....\n"
      ".....\n"
      "....b\n",
      ab);
  {
    TaskableEnv env(board, parse("F a", ab), 10.0, 100);
    const auto out = env.step(Action::Right);
    CHECK(out.reward == 10.0);
    CHECK(out.done);
    CHECK(env.satisfied());
    CHECK_THROWS_AS(env.step(Action::Right), StepAfterDone);
  }
  {
    TaskableEnv env(board, parse("!e U b", ab), 10.0, 100);
    const auto out = env.step(Action::Down);
    CHECK(out.reward == -10.0);
    CHECK(out.done);
    CHECK_FALSE(env.satisfied());
  }
  {
    TaskableEnv env(board, parse("F b", ab), 10.0, 100);
    const auto out = env.step(Action::Up);
    CHECK(out.reward == doctest::Approx(-0.01));
    CHECK_FALSE(out.done);
  }
  {
    TaskableEnv env(board, parse("G !e", ab), 10.0, 3);
    env.step(Action::Up);
    env.step(Action::Up);
    const auto out = env.step(Action::Up);
    CHECK(out.done);
    CHECK(out.reward == 10.0);
    CHECK(env.satisfied());
  }
  {
    TaskableEnv env(board, parse("F b", ab), 10.0, 2);
    env.step(Action::Up);
    const auto out = env.step(Action::Up);
    CHECK(out.done);
    CHECK(out.reward == -10.0);
  }
  {
    TaskableEnv env(board, parse("true", ab), 10.0, 2);
    CHECK(env.done());
    CHECK(env.satisfied());
  }
}

TEST_CASE("episode return stays within bounds") {
  std::mt19937_64 rng(8);
  const Alphabet ab = Alphabet::letters(5);
  const char* tasks[] = {"F a", "F (a & F b)", "!e U b", "G !c", "F (a & F b) & G !e", "X X c"};
  const int budget = 40;
  for (int ep = 0; ep < 300; ++ep) {
    TaskableEnv env(generate(EnvParams{}, rng()), parse(tasks[ep % 6], ab), 10.0, budget);
    double ret = 0.0;
    while (!env.done()) ret += env.step(static_cast<Action>(rng() % 4)).reward;
    CHECK(ret <= 10.0 + 1e-12);
    CHECK(ret >= -10.0 + budget * -0.01 - 1e-12);
  }
}
