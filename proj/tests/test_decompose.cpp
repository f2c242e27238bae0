#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "decompose_oracle.hpp"
#include "ltl_oracle.hpp"
#include "ltlo/decompose.hpp"

using namespace ltlo;

namespace {

const Alphabet kAbc = Alphabet::letters(8);

Formula P(const char* text) { return parse(text, kAbc); }

SubgoalSequence seq(const char* letters) {
  SubgoalSequence out;
  for (const char* c = letters; *c; ++c) out.push_back(static_cast<PropId>(*c - 'a'));
  return out;
}

}  // namespace

TEST_CASE("decompose the worked branching example") {
  const auto r = decompose(P("F (a & F ((b | c) & F (d | e)))"), kAbc);
  CHECK_FALSE(r.truncated);
  CHECK(r.sequences == std::vector<SubgoalSequence>{seq("abd"), seq("abe"), seq("acd"), seq("ace")});
}

TEST_CASE("decompose single goal") {
  const auto r = decompose(P("F a"), kAbc);
  CHECK(r.sequences == std::vector<SubgoalSequence>{seq("a")});
}

TEST_CASE("decompose the recursive conjunction") {
  // Both conjuncts must be met, so every member has all four goals.
  const Formula f = P("(!a U (b & F (!c U d))) & (!e U (f & F (!g U h)))");
  const auto r = decompose(f, kAbc);
  CHECK(r.sequences ==
        std::vector<SubgoalSequence>{seq("bdfh"), seq("bfdh"), seq("bfhd"), seq("fbdh"), seq("fbhd"), seq("fhbd")});
  CHECK_FALSE(verify_sequence(f, seq("bd")));
  CHECK_FALSE(verify_sequence(f, seq("fh")));
}

TEST_CASE("decompose the recursive disjunction starts with both short chains") {
  const auto r = decompose(P("(!a U (b & F (!c U d))) | (!e U (f & F (!g U h)))"), kAbc);
  REQUIRE(r.sequences.size() >= 2);
  CHECK(r.sequences[0] == seq("bd"));
  CHECK(r.sequences[1] == seq("fh"));
}

TEST_CASE("decompose accepts residual safety obligations") {
  const auto r = decompose(P("F (a & F b) & G !e"), kAbc);
  CHECK(r.sequences == std::vector<SubgoalSequence>{seq("ab")});
}

TEST_CASE("decompose errors") {
  CHECK_THROWS_AS(decompose(P("false"), kAbc), EmptyResult);
  CHECK_THROWS_AS(decompose(P("a & !a"), kAbc), EmptyResult);
  // Needs five steps, only four allowed.
  DecompositionCaps caps;
  caps.max_depth = 4;
  CHECK_THROWS_AS(decompose(P("F (a & F (b & F (c & F (d & F e))))"), kAbc, caps), EmptyResult);
}

TEST_CASE("decompose caps set truncated") {
  DecompositionCaps caps;
  caps.max_sequences = 2;
  const auto r = decompose(P("F (a & F ((b | c) & F (d | e)))"), kAbc, caps);
  CHECK(r.truncated);
  CHECK(r.sequences == std::vector<SubgoalSequence>{seq("abd"), seq("abe")});

  caps = {};
  caps.max_depth = 2;
  const auto d = decompose(P("F a | F (b & F (c & F d))"), kAbc, caps);
  CHECK(d.truncated);
  CHECK(d.sequences == std::vector<SubgoalSequence>{seq("a"), seq("ba")});
}

TEST_CASE("globally forbidden props never appear in any sequence") {
  std::mt19937_64 rng(77);
  const Alphabet five = Alphabet::letters(5);
  for (int i = 0; i < 300; ++i) {
    const auto q = static_cast<PropId>(rng() % 5);
    const Formula f = Formula::make_and(oracle::random_formula(rng, 5, 4),
                                        Formula::make_always(Formula::make_not(Formula::prop(q))));
    try {
      for (const auto& xi : decompose(f, five).sequences) CHECK(std::find(xi.begin(), xi.end(), q) == xi.end());
    } catch (const EmptyResult&) {
    }
  }
}

TEST_CASE("verify_sequence examples") {
  CHECK(verify_sequence(P("F (a & F b)"), seq("ab")));
  CHECK_FALSE(verify_sequence(P("F (a & F b)"), seq("ba")));
  CHECK_FALSE(verify_sequence(P("!e U b"), seq("eb")));
  CHECK(verify_sequence(P("G !e"), seq("")));
}

TEST_CASE("decompose matches brute-force enumeration") {
  std::mt19937_64 rng(2024);
  const Alphabet five = Alphabet::letters(5);
  DecompositionCaps caps;
  caps.max_depth = 4;
  int nonempty = 0;
  for (int i = 0; i < 1000; ++i) {
    const Formula f = oracle::random_formula(rng, 5, 4);
    const auto expected = oracle::brute_force(f, 5, 4);
    std::set<SubgoalSequence> got;
    try {
      const auto r = decompose(f, five, caps);
      got.insert(r.sequences.begin(), r.sequences.end());
      CHECK(got.size() == r.sequences.size());
      CHECK(std::is_sorted(r.sequences.begin(), r.sequences.end(), [](const auto& x, const auto& y) {
        return x.size() != y.size() ? x.size() < y.size() : x < y;
      }));
      const LabelSet unsafe = unsafe_set(f, five);
      for (const auto& xi : r.sequences) {
        CHECK(verify_sequence(f, xi));
        CHECK_FALSE(unsafe.contains(xi.front()));
      }
      ++nonempty;
    } catch (const EmptyResult&) {
    }
    REQUIRE_MESSAGE(got == expected, to_string(f, five));
  }
  CHECK(nonempty > 300);
}
