#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ltlo {

using PropId = std::uint8_t;

inline constexpr std::size_t kMaxProps = 64;

/// Finite proposition vocabulary. Ids are dense, in insertion order.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  /// Comma separated list, e.g. "a,b,c".
  static Alphabet from_csv(std::string_view csv);
  /// First `count` letters: a, b, c, ...
  static Alphabet letters(std::size_t count);

  PropId add(std::string name);
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(PropId id) const { return names_.at(id); }
  std::optional<PropId> find(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, PropId> index_;
};

bool is_valid_prop_name(std::string_view name);

/// Truth assignment: the propositions that hold; all others are false.
struct LabelSet {
  std::uint64_t bits = 0;

  static LabelSet of(PropId p) { return LabelSet{std::uint64_t{1} << p}; }
  bool contains(PropId p) const { return (bits >> p) & 1u; }
  bool empty() const { return bits == 0; }
  void insert(PropId p) { bits |= std::uint64_t{1} << p; }

  friend bool operator==(LabelSet, LabelSet) = default;
};

struct SimplifiedMarker;

enum class Op : std::uint8_t { True, False, Prop, Not, And, Or, Next, Until, Eventually, Always };

/// Immutable LTL syntax tree. Copies share nodes; equality is structural.
class Formula {
 public:
  struct Node;

  Formula();  // true

  static Formula top();
  static Formula bottom();
  static Formula prop(PropId p);
  // Raw constructors: build exactly the requested node, no rewriting.
  static Formula make_not(Formula f);
  static Formula make_and(Formula a, Formula b);
  static Formula make_or(Formula a, Formula b);
  static Formula make_next(Formula f);
  static Formula make_until(Formula a, Formula b);
  static Formula make_eventually(Formula f);
  static Formula make_always(Formula f);

  Op op() const;
  PropId prop_id() const;
  /// Operand of unary nodes, left operand of binary ones.
  const Formula& lhs() const;
  const Formula& rhs() const;

  bool is_true() const { return op() == Op::True; }
  bool is_false() const { return op() == Op::False; }
  bool is_terminal() const { return is_true() || is_false(); }

  std::size_t hash() const;
  std::size_t size() const;
  std::size_t depth() const;

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

 private:
  friend struct SimplifiedMarker;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula make(Op op, PropId p, const Formula* lhs, const Formula* rhs);

  std::shared_ptr<const Node> node_;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Operators: ! X F G U & | with precedence ! > X,F,G > U > & > |.
/// U is right associative, & and | are left associative.
Formula parse(std::string_view text, const Alphabet& alphabet);

/// Inverse of parse: parse(to_string(f)) == f for every tree.
std::string to_string(const Formula& f, const Alphabet& alphabet);

// Simplifying constructors. Given simplified operands they return a
// simplified formula.
Formula mk_not(const Formula& f);
Formula mk_and(const Formula& a, const Formula& b);
Formula mk_or(const Formula& a, const Formula& b);

/// Boolean simplification: constants, idempotence, double negation,
/// complementary literals, negation pushed through & and |, and absorption of
/// operands that syntactically entail their sibling.
Formula simplify(const Formula& f);

/// Sound, incomplete syntactic entailment check used by simplify.
bool entails(const Formula& premise, const Formula& conclusion);

/// Truth value on the empty remaining trace: eventualities, X and atoms are
/// unmet, G holds vacuously.
bool holds_at_end(const Formula& f);

/// One progression step followed by simplify.
Formula prog(LabelSet sigma, const Formula& phi);

/// Residual after folding prog over the trace (stops early at true/false).
Formula progress_trace(std::span<const LabelSet> trace, const Formula& phi);

/// Finite-trace satisfaction: a residual that is neither true nor false at the
/// end of the trace is judged by holds_at_end, which accepts leftover G
/// obligations that were never violated.
bool evaluate_trace(std::span<const LabelSet> trace, const Formula& phi);

/// Propositions whose singleton label falsifies phi in one step.
LabelSet unsafe_set(const Formula& phi, const Alphabet& alphabet);

/// Propositions referenced by the formula.
LabelSet props_of(const Formula& f);

}  // namespace ltlo
