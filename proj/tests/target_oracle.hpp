#pragma once

// Test-only references for the learning targets and relabeling, computed
// directly from the label stream.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ltlo/learner.hpp"

namespace oracle {

using namespace ltlo;

inline constexpr double kGamma = 0.99;

// Random short trace over `props` propositions; sat_times found by scanning
// the label stream. Observations are placeholders indexed by step.
inline EpisodeTrace random_trace(std::mt19937_64& rng, int props, std::size_t max_len) {
  std::uniform_int_distribution<int> prop(0, props - 1);
  std::uniform_int_distribution<int> xi_len(1, 3);
  std::uniform_real_distribution<double> reward(-1.0, 10.0);
  EpisodeTrace tr;
  for (int k = xi_len(rng); k > 0; --k) {
    PropId p;
    do p = static_cast<PropId>(prop(rng));
    while (!tr.xi.empty() && tr.xi.back() == p);
    tr.xi.push_back(p);
  }
  tr.states.push_back(Observation{{0}});
  std::size_t j = 0;
  while (tr.actions.size() < max_len && j < tr.xi.size()) {
    const std::size_t t = tr.actions.size();
    LabelSet l;
    if (rng() % 2) l = LabelSet::of(static_cast<PropId>(prop(rng)));
    tr.actions.push_back(static_cast<Action>(rng() % 4));
    tr.rewards.push_back(reward(rng));
    tr.labels.push_back(l);
    tr.states.push_back(Observation{{static_cast<std::uint16_t>(t + 1)}});
    if (l.contains(tr.xi[j])) {
      tr.sat_times.push_back(t);
      ++j;
    }
  }
  tr.success = j == tr.xi.size();
  return tr;
}

// Deterministic pseudo-random lagged V.
inline double fake_v(std::size_t state, std::span<const PropId> xi) {
  std::string key = std::to_string(state) + ":";
  for (PropId p : xi) key += static_cast<char>('a' + p);
  return static_cast<double>(std::hash<std::string>{}(key) % 20001) / 1000.0 - 5.0;
}

// Naive evaluation of the V target straight from the label stream.
inline double oracle_v_target(const EpisodeTrace& tr, std::size_t t, double gamma) {
  const std::size_t T = tr.actions.size();
  std::size_t j = 0;
  for (std::size_t k = 0; k < t; ++k)
    if (j < tr.xi.size() && tr.labels[k].contains(tr.xi[j])) ++j;
  auto mc = [&](std::size_t from, std::size_t to_excl) {
    double s = 0;
    for (std::size_t k = from; k < to_excl; ++k) s += std::pow(gamma, static_cast<double>(k - from)) * tr.rewards[k];
    return s;
  };
  if (j == tr.xi.size()) return mc(t, T);
  std::vector<PropId> rest(tr.xi.begin() + static_cast<long>(j), tr.xi.end());
  for (std::size_t k = t; k < T; ++k) {
    if (!tr.labels[k].contains(tr.xi[j])) continue;
    const std::vector<PropId> after(rest.begin() + 1, rest.end());
    const double boot = after.empty() ? 0.0 : fake_v(k + 1, after);
    return mc(t, k + 1) + std::pow(gamma, static_cast<double>(k + 1 - t)) * std::max(boot, mc(k + 1, T));
  }
  return std::max(fake_v(t, rest), mc(t, T));
}

inline EpisodeTrace random_walk(const GridWorld& start, SubgoalSequence xi, int steps, std::mt19937_64& rng) {
  GridWorld w = start;
  EpisodeTrace tr;
  tr.xi = std::move(xi);
  tr.states.push_back(w.observe());
  std::size_t j = 0;
  for (int t = 0; t < steps && j < tr.xi.size(); ++t) {
    const auto a = static_cast<Action>(rng() % 4);
    const auto r = w.step(a);
    tr.actions.push_back(a);
    tr.rewards.push_back(r.reward);
    tr.labels.push_back(r.label);
    tr.states.push_back(w.observe());
    if (r.label.contains(tr.xi[j])) {
      tr.sat_times.push_back(static_cast<std::size_t>(t));
      ++j;
    }
  }
  tr.success = j == tr.xi.size();
  return tr;
}

// F(p1 & F(p2 & ... F pn)).
inline Formula chain_formula(const SubgoalSequence& xi) {
  Formula chain = Formula::make_eventually(Formula::prop(xi.back()));
  for (std::size_t i = xi.size() - 1; i-- > 0;)
    chain = Formula::make_eventually(Formula::make_and(Formula::prop(xi[i]), chain));
  return chain;
}

}  // namespace oracle
