#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltlo/ltl.hpp"

namespace ltlo {

/// Ordered subgoals; front() is the next one to reach. May be empty.
using SubgoalSequence = std::vector<PropId>;

struct DecompositionCaps {
  std::size_t max_sequences = 256;
  std::size_t max_depth = 12;
  /// Bound on open search nodes per BFS level.
  std::size_t max_frontier = std::size_t{1} << 16;
};

struct DecompositionResult {
  std::vector<SubgoalSequence> sequences;
  bool truncated = false;
};

class EmptyResult : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Breadth-first progression search for every non-redundant subgoal sequence
/// that satisfies phi: each subgoal must change the residual without
/// falsifying it, and a sequence ends as soon as its residual is accepted
/// (true, or only G obligations left). Output is shortest first, then
/// lexicographic by proposition id. Throws EmptyResult when nothing is found.
DecompositionResult decompose(const Formula& phi, const Alphabet& alphabet, const DecompositionCaps& caps = {});

/// True iff progressing phi through the singleton labels of xi leaves an
/// accepted residual.
bool verify_sequence(const Formula& phi, std::span<const PropId> xi);

/// Space separated proposition names, e.g. "a b d".
std::string to_string(std::span<const PropId> xi, const Alphabet& alphabet);

}  // namespace ltlo
