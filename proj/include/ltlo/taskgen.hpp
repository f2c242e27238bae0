#pragma once

#include <cstdint>
#include <stdexcept>

#include "ltlo/decompose.hpp"
#include "ltlo/ltl.hpp"

namespace ltlo {

class AlphabetTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DnfParams {
  int min_terms = 3;
  int max_terms = 6;
  int min_len = 1;
  int max_len = 5;
  double safety_prob = 0.5;  // chance a term carries G !e
};

/// Disjunction of terms F(p1 & F(p2 & ... F pn)), each with distinct props
/// and optionally conjoined with G !e for an e outside the chain. Needs
/// max_len + 1 propositions when safety_prob > 0, else max_len.
Formula gen_dnf(const Alphabet& alphabet, std::uint64_t seed, const DnfParams& params = {});

struct RecursiveParams {
  int min_depth = 3;
  int max_depth = 5;
};

/// Conjunction of chains !s1 U (g1 & F(!s2 U (g2 & ...))). A depth D is drawn
/// per formula; each chain level nests again or stops with equal odds (always
/// stops at level D) and another conjunct is added with equal odds while
/// fewer than D exist. Every proposition occurs once. Needs 2 * max_depth
/// propositions.
Formula gen_recursive(const Alphabet& alphabet, std::uint64_t seed, const RecursiveParams& params = {});

/// Length of the shortest satisfying subgoal sequence.
std::size_t task_depth(const Formula& phi, const Alphabet& alphabet, const DecompositionCaps& caps = {});

}  // namespace ltlo
