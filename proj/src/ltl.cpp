#include "ltlo/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace ltlo {

// ---------------------------------------------------------------------------
// Alphabet

bool is_valid_prop_name(std::string_view name) {
  if (name.empty() || !(name[0] >= 'a' && name[0] <= 'z')) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return name != "true" && name != "false";
}

Alphabet::Alphabet(std::vector<std::string> names) {
  for (auto& n : names) add(std::move(n));
}

Alphabet Alphabet::from_csv(std::string_view csv) {
  Alphabet out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t end = csv.find(',', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string item(csv.substr(start, end - start));
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (!item.empty()) out.add(item);
    start = end + 1;
  }
  return out;
}

Alphabet Alphabet::letters(std::size_t count) {
  if (count > 26) throw std::invalid_argument("Alphabet::letters supports at most 26 letters");
  Alphabet out;
  for (std::size_t i = 0; i < count; ++i) out.add(std::string(1, static_cast<char>('a' + i)));
  return out;
}

PropId Alphabet::add(std::string name) {
  if (!is_valid_prop_name(name)) throw std::invalid_argument("invalid proposition name '" + name + "'");
  if (index_.count(name)) throw std::invalid_argument("duplicate proposition '" + name + "'");
  if (names_.size() >= kMaxProps) throw std::invalid_argument("too many propositions");
  const auto id = static_cast<PropId>(names_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  return id;
}

std::optional<PropId> Alphabet::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Formula nodes

struct Formula::Node {
  Op op;
  PropId prop = 0;
  Formula lhs;
  Formula rhs;
  std::size_t hash = 0;
  std::size_t size = 1;
  std::size_t depth = 1;
  mutable bool simplified = false;

  // Leaves must not default-construct Formula children (that recurses into
  // the shared `true` node), so children are only set for inner nodes.
  Node(Op o, PropId p) : op(o), prop(p), lhs(nullptr), rhs(nullptr) {}
  Node(Op o, PropId p, Formula l, Formula r) : op(o), prop(p), lhs(std::move(l)), rhs(std::move(r)) {}
};

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

bool is_unary(Op op) {
  return op == Op::Not || op == Op::Next || op == Op::Eventually || op == Op::Always;
}
bool is_binary(Op op) { return op == Op::And || op == Op::Or || op == Op::Until; }

}  // namespace

Formula Formula::make(Op op, PropId p, const Formula* lhs, const Formula* rhs) {
  std::shared_ptr<Node> n;
  if (lhs == nullptr) {
    n = std::make_shared<Node>(op, p);
  } else {
    n = std::make_shared<Node>(op, p, *lhs, rhs ? *rhs : Formula(nullptr));
  }
  std::size_t h = mix(static_cast<std::size_t>(op) * 1315423911u, p);
  if (lhs) {
    h = mix(h, lhs->hash());
    n->size += lhs->size();
    n->depth = std::max(n->depth, lhs->depth() + 1);
  }
  if (rhs) {
    h = mix(h, rhs->hash());
    n->size += rhs->size();
    n->depth = std::max(n->depth, rhs->depth() + 1);
  }
  n->hash = h;
  n->simplified = (lhs == nullptr);
  return Formula(std::move(n));
}

Formula Formula::top() {
  static const Formula t = make(Op::True, 0, nullptr, nullptr);
  return t;
}
Formula Formula::bottom() {
  static const Formula f = make(Op::False, 0, nullptr, nullptr);
  return f;
}
Formula::Formula() : Formula(top()) {}
Formula Formula::prop(PropId p) { return make(Op::Prop, p, nullptr, nullptr); }
Formula Formula::make_not(Formula f) { return make(Op::Not, 0, &f, nullptr); }
Formula Formula::make_and(Formula a, Formula b) { return make(Op::And, 0, &a, &b); }
Formula Formula::make_or(Formula a, Formula b) { return make(Op::Or, 0, &a, &b); }
Formula Formula::make_next(Formula f) { return make(Op::Next, 0, &f, nullptr); }
Formula Formula::make_until(Formula a, Formula b) { return make(Op::Until, 0, &a, &b); }
Formula Formula::make_eventually(Formula f) { return make(Op::Eventually, 0, &f, nullptr); }
Formula Formula::make_always(Formula f) { return make(Op::Always, 0, &f, nullptr); }

Op Formula::op() const { return node_->op; }
PropId Formula::prop_id() const { return node_->prop; }
const Formula& Formula::lhs() const { return node_->lhs; }
const Formula& Formula::rhs() const { return node_->rhs; }
std::size_t Formula::hash() const { return node_->hash; }
std::size_t Formula::size() const { return node_->size; }
std::size_t Formula::depth() const { return node_->depth; }

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.hash != y.hash || x.op != y.op || x.prop != y.prop || x.size != y.size) return false;
  if (is_unary(x.op)) return x.lhs == y.lhs;
  if (is_binary(x.op)) return x.lhs == y.lhs && x.rhs == y.rhs;
  return true;
}

// ---------------------------------------------------------------------------
// Parsing

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

enum class Tok { Ident, True, False, Not, Next, Eventually, Always, Until, And, Or, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c >= 'a' && c <= 'z') {
      std::size_t j = i;
      while (j < s.size() && ((s[j] >= 'a' && s[j] <= 'z') || (s[j] >= '0' && s[j] <= '9') || s[j] == '_')) ++j;
      auto word = s.substr(i, j - i);
      Tok kind = Tok::Ident;
      if (word == "true") kind = Tok::True;
      if (word == "false") kind = Tok::False;
      out.push_back({kind, i, word});
      i = j;
      continue;
    }
    Tok kind;
    switch (c) {
      case '!': kind = Tok::Not; break;
      case 'X': kind = Tok::Next; break;
      case 'F': kind = Tok::Eventually; break;
      case 'G': kind = Tok::Always; break;
      case 'U': kind = Tok::Until; break;
      case '&': kind = Tok::And; break;
      case '|': kind = Tok::Or; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      default: throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({kind, i, s.substr(i, 1)});
    ++i;
  }
  out.push_back({Tok::End, s.size(), {}});
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, const Alphabet& alphabet) : tokens_(tokenize(text)), alphabet_(alphabet) {}

  Formula run() {
    Formula f = disjunction();
    if (peek().kind != Tok::End) throw ParseError("unexpected token '" + std::string(peek().text) + "'", peek().offset);
    return f;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  Formula disjunction() {
    Formula f = conjunction();
    while (peek().kind == Tok::Or) {
      next();
      f = Formula::make_or(f, conjunction());
    }
    return f;
  }

  Formula conjunction() {
    Formula f = until();
    while (peek().kind == Tok::And) {
      next();
      f = Formula::make_and(f, until());
    }
    return f;
  }

  Formula until() {
    Formula lhs = unary();
    if (peek().kind == Tok::Until) {
      next();
      return Formula::make_until(lhs, until());
    }
    return lhs;
  }

  Formula unary() {
    switch (peek().kind) {
      case Tok::Not: next(); return Formula::make_not(unary());
      case Tok::Next: next(); return Formula::make_next(unary());
      case Tok::Eventually: next(); return Formula::make_eventually(unary());
      case Tok::Always: next(); return Formula::make_always(unary());
      default: return atom();
    }
  }

  Formula atom() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::True: return Formula::top();
      case Tok::False: return Formula::bottom();
      case Tok::Ident: {
        auto id = alphabet_.find(t.text);
        if (!id) throw ParseError("unknown proposition '" + std::string(t.text) + "'", t.offset);
        return Formula::prop(*id);
      }
      case Tok::LParen: {
        Formula f = disjunction();
        if (peek().kind != Tok::RParen) throw ParseError("expected ')'", peek().offset);
        next();
        return f;
      }
      case Tok::End: throw ParseError("unexpected end of input", t.offset);
      default: throw ParseError("unexpected token '" + std::string(t.text) + "'", t.offset);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const Alphabet& alphabet_;
};

// Binding strength used by the printer; higher binds tighter.
int precedence(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Until: return 3;
    case Op::Not:
    case Op::Next:
    case Op::Eventually:
    case Op::Always: return 4;
    default: return 5;
  }
}

void print(const Formula& f, const Alphabet& alphabet, int min_prec, std::string& out) {
  const bool wrap = precedence(f.op()) < min_prec;
  if (wrap) out += '(';
  switch (f.op()) {
    case Op::True: out += "true"; break;
    case Op::False: out += "false"; break;
    case Op::Prop: out += alphabet.name(f.prop_id()); break;
    case Op::Not:
      out += '!';
      print(f.lhs(), alphabet, 4, out);
      break;
    case Op::Next:
    case Op::Eventually:
    case Op::Always:
      out += f.op() == Op::Next ? "X " : f.op() == Op::Eventually ? "F " : "G ";
      print(f.lhs(), alphabet, 4, out);
      break;
    case Op::Until:
      print(f.lhs(), alphabet, 4, out);
      out += " U ";
      print(f.rhs(), alphabet, 3, out);
      break;
    case Op::And:
      print(f.lhs(), alphabet, 2, out);
      out += " & ";
      print(f.rhs(), alphabet, 3, out);
      break;
    case Op::Or:
      print(f.lhs(), alphabet, 1, out);
      out += " | ";
      print(f.rhs(), alphabet, 2, out);
      break;
  }
  if (wrap) out += ')';
}

}  // namespace

Formula parse(std::string_view text, const Alphabet& alphabet) { return Parser(text, alphabet).run(); }

std::string to_string(const Formula& f, const Alphabet& alphabet) {
  std::string out;
  print(f, alphabet, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Simplification

bool holds_at_end(const Formula& f) {
  switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Prop: return false;
    case Op::Not: return !holds_at_end(f.lhs());
    case Op::And: return holds_at_end(f.lhs()) && holds_at_end(f.rhs());
    case Op::Or: return holds_at_end(f.lhs()) || holds_at_end(f.rhs());
    case Op::Next:
    case Op::Until:
    case Op::Eventually: return false;
    case Op::Always: return true;
  }
  return false;
}

bool entails(const Formula& y, const Formula& x) {
  if (y == x || x.is_true() || y.is_false()) return true;
  if (y.is_true() || x.is_false()) return false;

  if (y.op() == Op::Or && entails(y.lhs(), x) && entails(y.rhs(), x)) return true;
  if (x.op() == Op::And && entails(y, x.lhs()) && entails(y, x.rhs())) return true;
  if (y.op() == Op::And && (entails(y.lhs(), x) || entails(y.rhs(), x))) return true;
  if (x.op() == Op::Or && (entails(y, x.lhs()) || entails(y, x.rhs()))) return true;

  switch (x.op()) {
    case Op::Eventually:
      // F y1 |= F x1 when y1 |= F x1; likewise for the goal of an until.
      if (y.op() == Op::Eventually && entails(y.lhs(), x)) return true;
      if (y.op() == Op::Until && entails(y.rhs(), x)) return true;
      // A premise that is false on the empty suffix only needs to entail x1.
      if (!holds_at_end(y) && entails(y, x.lhs())) return true;
      break;
    case Op::Always:
      if (y.op() == Op::Always && entails(y.lhs(), x.lhs())) return true;
      break;
    case Op::Until:
      if (y.op() == Op::Until && entails(y.lhs(), x.lhs()) && entails(y.rhs(), x.rhs())) return true;
      if (!holds_at_end(y) && entails(y, x.rhs())) return true;
      break;
    case Op::Next:
      if (y.op() == Op::Next && entails(y.lhs(), x.lhs())) return true;
      break;
    default: break;
  }
  return false;
}

namespace {

bool is_negation_of(const Formula& a, const Formula& b) { return a.op() == Op::Not && a.lhs() == b; }

Formula mark_simplified(Formula f);

}  // namespace

Formula mk_not(const Formula& f) {
  switch (f.op()) {
    case Op::True: return Formula::bottom();
    case Op::False: return Formula::top();
    case Op::Not: return f.lhs();
    case Op::And: return mk_or(mk_not(f.lhs()), mk_not(f.rhs()));
    case Op::Or: return mk_and(mk_not(f.lhs()), mk_not(f.rhs()));
    default: return mark_simplified(Formula::make_not(f));
  }
}

Formula mk_and(const Formula& a, const Formula& b) {
  if (a.is_false() || b.is_false()) return Formula::bottom();
  if (a.is_true()) return b;
  if (b.is_true()) return a;
  if (a == b) return a;
  if (is_negation_of(a, b) || is_negation_of(b, a)) return Formula::bottom();
  if (entails(a, b)) return a;
  if (entails(b, a)) return b;
  return mark_simplified(Formula::make_and(a, b));
}

Formula mk_or(const Formula& a, const Formula& b) {
  if (a.is_true() || b.is_true()) return Formula::top();
  if (a.is_false()) return b;
  if (b.is_false()) return a;
  if (a == b) return a;
  if (is_negation_of(a, b) || is_negation_of(b, a)) return Formula::top();
  if (entails(a, b)) return b;
  if (entails(b, a)) return a;
  return mark_simplified(Formula::make_or(a, b));
}

namespace {

// Temporal nodes only get rewrites that also hold on the empty suffix.
Formula mk_next(const Formula& f) {
  if (f.is_false()) return Formula::bottom();
  return mark_simplified(Formula::make_next(f));
}

Formula mk_until(const Formula& a, const Formula& b) {
  if (b.is_false()) return Formula::bottom();
  return mark_simplified(Formula::make_until(a, b));
}

Formula mk_eventually(const Formula& f) {
  if (f.is_false()) return Formula::bottom();
  if (f.op() == Op::Eventually) return f;
  return mark_simplified(Formula::make_eventually(f));
}

Formula mk_always(const Formula& f) {
  if (f.is_true()) return Formula::top();
  if (f.op() == Op::Always) return f;
  return mark_simplified(Formula::make_always(f));
}

}  // namespace

// The node flag lets simplify() skip subtrees that are already canonical.
struct SimplifiedMarker {
  static bool get(const Formula& f) { return f.node_->simplified; }
  static void set(const Formula& f) {
    const auto& n = *f.node_;
    bool children = true;
    if (is_unary(n.op) || is_binary(n.op)) children = n.lhs.node_->simplified;
    if (is_binary(n.op)) children = children && n.rhs.node_->simplified;
    n.simplified = children;
  }
};

namespace {
Formula mark_simplified(Formula f) {
  SimplifiedMarker::set(f);
  return f;
}
}  // namespace

Formula simplify(const Formula& f) {
  if (SimplifiedMarker::get(f)) return f;
  switch (f.op()) {
    case Op::True:
    case Op::False:
    case Op::Prop: return f;
    case Op::Not: return mk_not(simplify(f.lhs()));
    case Op::And: return mk_and(simplify(f.lhs()), simplify(f.rhs()));
    case Op::Or: return mk_or(simplify(f.lhs()), simplify(f.rhs()));
    case Op::Next: return mk_next(simplify(f.lhs()));
    case Op::Until: return mk_until(simplify(f.lhs()), simplify(f.rhs()));
    case Op::Eventually: return mk_eventually(simplify(f.lhs()));
    case Op::Always: return mk_always(simplify(f.lhs()));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Progression

namespace {

Formula prog_simplified(LabelSet sigma, const Formula& f) {
  switch (f.op()) {
    case Op::True:
    case Op::False: return f;
    case Op::Prop: return sigma.contains(f.prop_id()) ? Formula::top() : Formula::bottom();
    case Op::Not: return mk_not(prog_simplified(sigma, f.lhs()));
    case Op::And: return mk_and(prog_simplified(sigma, f.lhs()), prog_simplified(sigma, f.rhs()));
    case Op::Or: return mk_or(prog_simplified(sigma, f.lhs()), prog_simplified(sigma, f.rhs()));
    case Op::Next: return f.lhs();
    case Op::Until:
      return mk_or(prog_simplified(sigma, f.rhs()), mk_and(prog_simplified(sigma, f.lhs()), f));
    case Op::Eventually: return mk_or(prog_simplified(sigma, f.lhs()), f);
    case Op::Always: return mk_and(prog_simplified(sigma, f.lhs()), f);
  }
  return f;
}

}  // namespace

Formula prog(LabelSet sigma, const Formula& phi) {
  // Operands copied into the residual must already be canonical.
  return prog_simplified(sigma, simplify(phi));
}

Formula progress_trace(std::span<const LabelSet> trace, const Formula& phi) {
  Formula r = simplify(phi);
  for (LabelSet sigma : trace) {
    if (r.is_terminal()) break;
    r = prog_simplified(sigma, r);
  }
  return r;
}

bool evaluate_trace(std::span<const LabelSet> trace, const Formula& phi) {
  return holds_at_end(progress_trace(trace, phi));
}

LabelSet unsafe_set(const Formula& phi, const Alphabet& alphabet) {
  LabelSet out;
  const Formula s = simplify(phi);
  for (std::size_t q = 0; q < alphabet.size(); ++q) {
    const auto p = static_cast<PropId>(q);
    if (prog_simplified(LabelSet::of(p), s).is_false()) out.insert(p);
  }
  return out;
}

LabelSet props_of(const Formula& f) {
  LabelSet out;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (g.op() == Op::Prop) out.insert(g.prop_id());
    if (is_unary(g.op()) || is_binary(g.op())) walk(g.lhs());
    if (is_binary(g.op())) walk(g.rhs());
  };
  walk(f);
  return out;
}

}  // namespace ltlo
