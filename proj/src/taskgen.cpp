#include "ltlo/taskgen.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace ltlo {

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool coin(std::mt19937_64& rng) { return uniform(rng, 0, 1) == 1; }

std::vector<PropId> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<PropId> ids(n);
  std::iota(ids.begin(), ids.end(), PropId{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

// F(p1 & F(p2 & ... F pn))
Formula chain(std::span<const PropId> props) {
  Formula inner = Formula::make_eventually(Formula::prop(props.back()));
  for (std::size_t i = props.size() - 1; i-- > 0;)
    inner = Formula::make_eventually(Formula::make_and(Formula::prop(props[i]), inner));
  return inner;
}

}  // namespace

Formula gen_dnf(const Alphabet& alphabet, std::uint64_t seed, const DnfParams& params) {
  if (params.min_terms < 1 || params.min_terms > params.max_terms || params.min_len < 1 ||
      params.min_len > params.max_len || params.safety_prob < 0.0 || params.safety_prob > 1.0)
    throw std::invalid_argument("bad DNF parameters");
  const std::size_t needed = static_cast<std::size_t>(params.max_len) + (params.safety_prob > 0.0 ? 1 : 0);
  if (alphabet.size() < needed)
    throw AlphabetTooSmall("DNF tasks need " + std::to_string(needed) + " propositions, got " +
                           std::to_string(alphabet.size()));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution safety(params.safety_prob);
  const int terms = uniform(rng, params.min_terms, params.max_terms);
  Formula out;
  for (int t = 0; t < terms; ++t) {
    const int len = uniform(rng, params.min_len, params.max_len);
    const std::vector<PropId> ids = shuffled(alphabet.size(), rng);
    Formula term = chain(std::span<const PropId>(ids).first(static_cast<std::size_t>(len)));
    if (safety(rng)) term = Formula::make_and(term, Formula::make_always(Formula::make_not(Formula::prop(ids[len]))));
    out = t == 0 ? term : Formula::make_or(out, term);
  }
  return out;
}

Formula gen_recursive(const Alphabet& alphabet, std::uint64_t seed, const RecursiveParams& params) {
  if (params.min_depth < 1 || params.min_depth > params.max_depth) throw std::invalid_argument("bad depth bounds");
  const std::size_t needed = 2 * static_cast<std::size_t>(params.max_depth);
  if (alphabet.size() < needed)
    throw AlphabetTooSmall("recursive tasks need " + std::to_string(needed) + " propositions, got " +
                           std::to_string(alphabet.size()));
  std::mt19937_64 rng(seed);
  const int depth = uniform(rng, params.min_depth, params.max_depth);
  const std::vector<PropId> ids = shuffled(alphabet.size(), rng);
  std::size_t next = 0;

  // Levels of one chain as (s, g) pairs, outermost first.
  auto draw_chain = [&] {
    std::vector<std::pair<PropId, PropId>> levels;
    do {
      levels.emplace_back(ids[next], ids[next + 1]);
      next += 2;
    } while (static_cast<int>(levels.size()) < depth && next + 2 <= ids.size() && coin(rng));
    Formula inner = Formula::make_until(Formula::make_not(Formula::prop(levels.back().first)),
                                        Formula::prop(levels.back().second));
    for (std::size_t i = levels.size() - 1; i-- > 0;)
      inner = Formula::make_until(Formula::make_not(Formula::prop(levels[i].first)),
                                  Formula::make_and(Formula::prop(levels[i].second), Formula::make_eventually(inner)));
    return inner;
  };

  Formula out = draw_chain();
  int conjuncts = 1;
  while (conjuncts < depth && next + 2 <= ids.size() && coin(rng)) {
    out = Formula::make_and(out, draw_chain());
    ++conjuncts;
  }
  return out;
}

std::size_t task_depth(const Formula& phi, const Alphabet& alphabet, const DecompositionCaps& caps) {
  const auto result = decompose(phi, alphabet, caps);
  std::size_t best = result.sequences.front().size();
  for (const auto& xi : result.sequences) best = std::min(best, xi.size());
  return best;
}

}  // namespace ltlo
