#include <doctest.h>

#include <functional>
#include <random>

#include "ltl_oracle.hpp"
#include "ltlo/ltl.hpp"

using namespace ltlo;

namespace {

const Alphabet kAbc = Alphabet::letters(8);  // a..h

Formula P(const char* text) { return parse(text, kAbc); }

Formula F(const Formula& f) { return Formula::make_eventually(f); }
Formula Prop(char c) { return Formula::prop(static_cast<PropId>(c - 'a')); }

}  // namespace

TEST_CASE("parse maps the grammar onto the tree") {
  CHECK(P("F (a & F b)") == F(Formula::make_and(Prop('a'), F(Prop('b')))));
  CHECK(P("! e U b") == Formula::make_until(Formula::make_not(Prop('e')), Prop('b')));
  CHECK(P("a | b & c") == Formula::make_or(Prop('a'), Formula::make_and(Prop('b'), Prop('c'))));
  CHECK(P("a U b U c") == Formula::make_until(Prop('a'), Formula::make_until(Prop('b'), Prop('c'))));
  CHECK(P("a & b & c") == Formula::make_and(Formula::make_and(Prop('a'), Prop('b')), Prop('c')));
  CHECK(P("G !e") == Formula::make_always(Formula::make_not(Prop('e'))));
  CHECK(P("X true") == Formula::make_next(Formula::top()));
}

TEST_CASE("parse accepts multi-character proposition names") {
  const Alphabet craft({"wood", "diamond", "ax"});
  const Formula f = parse("F (wood & F diamond)", craft);
  CHECK(f == F(Formula::make_and(Formula::prop(0), F(Formula::prop(1)))));
  CHECK(to_string(f, craft) == "F (wood & F diamond)");
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    parse("F (a & zz)", kAbc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 7);
  }
  try {
    parse("a & ", kAbc);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse("a $ b", kAbc), ParseError);
  CHECK_THROWS_AS(parse("(a", kAbc), ParseError);
  CHECK_THROWS_AS(parse("a b", kAbc), ParseError);
}

TEST_CASE("pretty print round-trips random trees exactly") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Formula f = oracle::random_formula(rng, 5, 6);
    const std::string text = to_string(f, kAbc);
    CHECK_MESSAGE(parse(text, kAbc) == f, text);
  }
}

TEST_CASE("simplify identities") {
  CHECK(simplify(P("true & b")) == P("b"));
  CHECK(simplify(P("false | a U b")) == P("a U b"));
  CHECK(simplify(P("!!c")) == P("c"));
  CHECK(simplify(P("a & a")) == P("a"));
  CHECK(simplify(P("a & !a")) == P("false"));
  CHECK(simplify(P("a | !a")) == P("true"));
  CHECK(simplify(P("!(a & b)")) == P("!a | !b"));
  CHECK(simplify(P("F b | F (a & F b)")) == P("F b"));
}

TEST_CASE("simplify is idempotent and sound against the trace oracle") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3000; ++i) {
    const Formula f = oracle::random_formula(rng, 4, 5);
    const Formula s = simplify(f);
    CHECK(simplify(s) == s);
    for (int k = 0; k < 5; ++k) {
      const auto trace = oracle::random_trace(rng, 4, 0, 6);
      for (std::size_t pos = 0; pos <= trace.size(); ++pos) {
        REQUIRE_MESSAGE(oracle::holds(trace, pos, f) == oracle::holds(trace, pos, s), to_string(f, kAbc), " vs ",
                        to_string(s, kAbc));
      }
    }
  }
}

TEST_CASE("prog examples") {
  const Alphabet craft({"wood", "diamond"});
  const Formula task = parse("F (wood & F diamond)", craft);
  CHECK(prog(LabelSet::of(0), task) == parse("F diamond", craft));
  CHECK(prog(LabelSet{}, task) == task);
  CHECK(prog(LabelSet{}, Formula::top()).is_true());
  CHECK(prog(LabelSet::of(4), P("!e U b")).is_false());
  CHECK(prog(LabelSet::of(1), P("!e U b")).is_true());
  CHECK(prog(LabelSet::of(0), P("X a")) == P("a"));
  CHECK(prog(LabelSet::of(0), P("G !e")) == P("G !e"));
  CHECK(prog(LabelSet::of(4), P("G !e")).is_false());
}

TEST_CASE("the Until example cannot be rescued by any continuation") {
  const Formula f = P("!e U b");
  for (int p = -1; p < 8; ++p) {
    LabelSet next;
    if (p >= 0) next.insert(static_cast<PropId>(p));
    const std::vector<LabelSet> t{LabelSet::of(4), next};
    CHECK_FALSE(evaluate_trace(t, f));
  }
}

TEST_CASE("evaluate_trace examples") {
  const std::vector<LabelSet> ab{LabelSet::of(0), LabelSet::of(1)};
  CHECK(evaluate_trace(ab, P("F (a & F b)")));
  const std::vector<LabelSet> eb{LabelSet::of(4), LabelSet::of(1)};
  CHECK_FALSE(evaluate_trace(eb, P("!e U b")));

  const Alphabet lake({"lake"});
  const std::vector<LabelSet> quiet(20, LabelSet{});
  CHECK(evaluate_trace(quiet, parse("G !lake", lake)));
  std::vector<LabelSet> wet = quiet;
  wet[7] = LabelSet::of(0);
  CHECK_FALSE(evaluate_trace(wet, parse("G !lake", lake)));
}

TEST_CASE("evaluate_trace agrees with the direct trace semantics") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3000; ++i) {
    const Formula f = oracle::random_formula(rng, 5, 5);
    const auto trace = oracle::random_trace(rng, 5, 1, 8);
    REQUIRE_MESSAGE(evaluate_trace(trace, f) == oracle::holds(trace, 0, f), to_string(f, kAbc));
  }
}

TEST_CASE("prog true is final") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const Formula f = oracle::random_formula(rng, 4, 5);
    const auto head = oracle::random_trace(rng, 4, 1, 1);
    if (!prog(head[0], f).is_true()) continue;
    auto trace = oracle::random_trace(rng, 4, 0, 6);
    trace.insert(trace.begin(), head[0]);
    CHECK(evaluate_trace(trace, f));
  }
}

TEST_CASE("unsafe_set enumerates falsifying singletons") {
  CHECK(unsafe_set(P("!e U b"), kAbc) == LabelSet::of(4));
  CHECK(unsafe_set(P("F a"), kAbc).empty());
  CHECK(unsafe_set(P("F (a & F b) & G !e"), kAbc) == LabelSet::of(4));

  // Oracle: a singleton is unsafe iff every one-step continuation fails.
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    const Formula f = oracle::random_formula(rng, 4, 4);
    const LabelSet u = unsafe_set(f, Alphabet::letters(4));
    for (PropId q = 0; q < 4; ++q) CHECK(u.contains(q) == prog(LabelSet::of(q), f).is_false());
  }
}

TEST_CASE("simplified formulas keep negation on atoms and temporal nodes only") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Formula s = simplify(oracle::random_formula(rng, 4, 5));
    std::function<void(const Formula&)> walk = [&](const Formula& g) {
      switch (g.op()) {
        case Op::Not:
          CHECK(g.lhs().op() != Op::Not);
          CHECK(g.lhs().op() != Op::And);
          CHECK(g.lhs().op() != Op::Or);
          CHECK_FALSE(g.lhs().is_terminal());
          walk(g.lhs());
          break;
        case Op::And:
        case Op::Or:
          CHECK_FALSE(g.lhs().is_terminal());
          CHECK_FALSE(g.rhs().is_terminal());
          walk(g.lhs());
          walk(g.rhs());
          break;
        case Op::Until:
          walk(g.lhs());
          walk(g.rhs());
          break;
        case Op::Next:
        case Op::Eventually:
        case Op::Always: walk(g.lhs()); break;
        default: break;
      }
    };
    walk(s);
  }
}
