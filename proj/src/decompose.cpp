#include "ltlo/decompose.hpp"

#include <unordered_map>

namespace ltlo {

namespace {

struct Node {
  SubgoalSequence xi;
  Formula residual;
};

// Successor residuals per proposition, shared by all branches that reach the
// same residual.
class ProgCache {
 public:
  explicit ProgCache(std::size_t props) : props_(props) {}

  const std::vector<Formula>& successors(const Formula& f) {
    auto it = cache_.find(f);
    if (it != cache_.end()) return it->second;
    std::vector<Formula> next;
    next.reserve(props_);
    for (std::size_t p = 0; p < props_; ++p) next.push_back(prog(LabelSet::of(static_cast<PropId>(p)), f));
    return cache_.emplace(f, std::move(next)).first->second;
  }

 private:
  std::size_t props_;
  std::unordered_map<Formula, std::vector<Formula>, FormulaHash> cache_;
};

}  // namespace

DecompositionResult decompose(const Formula& phi, const Alphabet& alphabet, const DecompositionCaps& caps) {
  DecompositionResult out;
  ProgCache cache(alphabet.size());
  std::vector<Node> frontier{{{}, simplify(phi)}};
  if (frontier.front().residual.is_false()) throw EmptyResult("formula is unsatisfiable");

  for (std::size_t depth = 0; !frontier.empty(); ++depth) {
    std::vector<Node> next;
    bool expandable = false;
    for (const Node& node : frontier) {
      const auto& succ = cache.successors(node.residual);
      for (std::size_t p = 0; p < succ.size(); ++p) {
        const Formula& r = succ[p];
        if (r == node.residual || r.is_false()) continue;
        expandable = true;
        if (depth >= caps.max_depth) break;
        SubgoalSequence xi = node.xi;
        xi.push_back(static_cast<PropId>(p));
        if (holds_at_end(r)) {
          if (out.sequences.size() >= caps.max_sequences) {
            if (out.sequences.empty()) throw EmptyResult("no sequence within caps");
            out.truncated = true;
            return out;
          }
          out.sequences.push_back(std::move(xi));
        } else {
          if (next.size() >= caps.max_frontier) {
            out.truncated = true;
            continue;
          }
          next.push_back({std::move(xi), r});
        }
      }
      if (depth >= caps.max_depth && expandable) break;
    }
    if (depth >= caps.max_depth) {
      out.truncated = out.truncated || expandable;
      break;
    }
    frontier = std::move(next);
  }
  if (out.sequences.empty()) throw EmptyResult("no satisfying subgoal sequence");
  return out;
}

bool verify_sequence(const Formula& phi, std::span<const PropId> xi) {
  std::vector<LabelSet> labels;
  labels.reserve(xi.size());
  for (PropId p : xi) labels.push_back(LabelSet::of(p));
  return holds_at_end(progress_trace(labels, phi));
}

std::string to_string(std::span<const PropId> xi, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (i) out += ' ';
    out += alphabet.name(xi[i]);
  }
  return out;
}

}  // namespace ltlo
