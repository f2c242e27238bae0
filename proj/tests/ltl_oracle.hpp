#pragma once

// Test-only reference semantics for finite traces, written directly from the
// trace definitions (no progression, no simplification).

#include <random>
#include <span>
#include <vector>

#include "ltlo/ltl.hpp"

namespace oracle {

using ltlo::Formula;
using ltlo::LabelSet;
using ltlo::Op;

// Satisfaction of f by the suffix trace[i..]. Position i == trace.size() is
// the empty suffix: atoms, X, U and F are unmet there, G holds vacuously.
inline bool holds(std::span<const LabelSet> trace, std::size_t i, const Formula& f) {
  const std::size_t n = trace.size();
  switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Prop: return i < n && trace[i].contains(f.prop_id());
    case Op::Not: return !holds(trace, i, f.lhs());
    case Op::And: return holds(trace, i, f.lhs()) && holds(trace, i, f.rhs());
    case Op::Or: return holds(trace, i, f.lhs()) || holds(trace, i, f.rhs());
    case Op::Next: return i < n && holds(trace, i + 1, f.lhs());
    case Op::Until:
      for (std::size_t j = i; j < n; ++j) {
        if (holds(trace, j, f.rhs())) return true;
        if (!holds(trace, j, f.lhs())) return false;
      }
      return false;
    case Op::Eventually:
      for (std::size_t j = i; j < n; ++j)
        if (holds(trace, j, f.lhs())) return true;
      return false;
    case Op::Always:
      for (std::size_t j = i; j < n; ++j)
        if (!holds(trace, j, f.lhs())) return false;
      return true;
  }
  return false;
}

// Random formula over `props` propositions with depth at most `depth`.
inline Formula random_formula(std::mt19937_64& rng, int props, int depth) {
  std::uniform_int_distribution<int> pick_prop(0, props - 1);
  if (depth <= 1) {
    std::uniform_int_distribution<int> leaf(0, 9);
    const int l = leaf(rng);
    if (l == 0) return Formula::top();
    if (l == 1) return Formula::bottom();
    return Formula::prop(static_cast<ltlo::PropId>(pick_prop(rng)));
  }
  std::uniform_int_distribution<int> kind(0, 8);
  switch (kind(rng)) {
    case 0: return Formula::prop(static_cast<ltlo::PropId>(pick_prop(rng)));
    case 1: return Formula::make_not(random_formula(rng, props, depth - 1));
    case 2: return Formula::make_and(random_formula(rng, props, depth - 1), random_formula(rng, props, depth - 1));
    case 3: return Formula::make_or(random_formula(rng, props, depth - 1), random_formula(rng, props, depth - 1));
    case 4: return Formula::make_next(random_formula(rng, props, depth - 1));
    case 5:
    case 6:
      return Formula::make_until(random_formula(rng, props, depth - 1), random_formula(rng, props, depth - 1));
    case 7: return Formula::make_eventually(random_formula(rng, props, depth - 1));
    default: return Formula::make_always(random_formula(rng, props, depth - 1));
  }
}

// Random trace of length in [min_len, max_len]; each step carries zero or one
// proposition, or occasionally two.
inline std::vector<LabelSet> random_trace(std::mt19937_64& rng, int props, int min_len, int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> pick(-1, props - 1);
  std::vector<LabelSet> out(static_cast<std::size_t>(len(rng)));
  for (auto& s : out) {
    const int p = pick(rng);
    if (p >= 0) s.insert(static_cast<ltlo::PropId>(p));
    if (rng() % 8 == 0) {
      const int q = pick(rng);
      if (q >= 0) s.insert(static_cast<ltlo::PropId>(q));
    }
  }
  return out;
}

}  // namespace oracle
