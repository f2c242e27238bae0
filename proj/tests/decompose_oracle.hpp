#pragma once

// Test-only enumeration of subgoal sequences straight from the definitions.

#include <set>
#include <vector>

#include "ltl_oracle.hpp"
#include "ltlo/decompose.hpp"

namespace oracle {

using ltlo::PropId;
using ltlo::SubgoalSequence;
using ltlo::prog;
using ltlo::simplify;

// Every sequence over `props` of length 1..max_len whose steps each change
// the residual without falsifying it, whose proper prefixes are not yet
// satisfying, and which satisfies phi under the direct trace semantics.
inline std::set<SubgoalSequence> brute_force(const Formula& phi, int props, std::size_t max_len) {
  std::set<SubgoalSequence> out;
  auto satisfies = [&](const SubgoalSequence& xi) {
    std::vector<LabelSet> trace;
    for (PropId p : xi) trace.push_back(LabelSet::of(p));
    return oracle::holds(trace, 0, phi);
  };
  std::vector<SubgoalSequence> all{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<SubgoalSequence> longer;
    for (const auto& s : all)
      for (int p = 0; p < props; ++p) {
        auto t = s;
        t.push_back(static_cast<PropId>(p));
        longer.push_back(t);
      }
    for (const auto& xi : longer) {
      bool ok = satisfies(xi);
      Formula r = phi;
      for (std::size_t i = 0; ok && i < xi.size(); ++i) {
        const Formula n = prog(LabelSet::of(xi[i]), r);
        if (n == simplify(r) || n.is_false()) ok = false;
        SubgoalSequence prefix(xi.begin(), xi.begin() + static_cast<long>(i) + 1);
        if (i + 1 < xi.size() && satisfies(prefix)) ok = false;
        r = n;
      }
      if (ok) out.insert(xi);
    }
    all = std::move(longer);
  }
  return out;
}

}  // namespace oracle
