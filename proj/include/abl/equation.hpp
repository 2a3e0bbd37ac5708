#pragma once

// Equation domain: the {0,1,+,=} alphabet, the X+Y=Z grammar, a bitwise
// calculator parameterized by an abducible rule table, entailment and
// consistency evaluation, and greedy consistency-maximizing abduction.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abl/logic.hpp"

namespace abl::eqn {

// ---------------------------------------------------------------------------
// Alphabet and sequences

enum class Sym : std::uint8_t { D0 = 0, D1 = 1, Plus = 2, Eq = 3 };
inline constexpr int kNumSymbols = 4;

inline char sym_char(Sym s) {
  switch (s) {
    case Sym::D0: return '0';
    case Sym::D1: return '1';
    case Sym::Plus: return '+';
    default: return '=';
  }
}

inline std::optional<Sym> sym_from_char(char c) {
  switch (c) {
    case '0': return Sym::D0;
    case '1': return Sym::D1;
    case '+': return Sym::Plus;
    case '=': return Sym::Eq;
    default: return std::nullopt;
  }
}

// A symbol sequence; a slot without a value is a blank to be abduced.
struct SymbolSeq {
  std::vector<std::optional<Sym>> slots;

  SymbolSeq() = default;
  explicit SymbolSeq(std::vector<std::optional<Sym>> s) : slots(std::move(s)) {}

  static SymbolSeq from_string(const std::string& text) {
    SymbolSeq seq;
    for (char c : text) {
      if (c == '_') {
        seq.slots.emplace_back(std::nullopt);
      } else {
        auto s = sym_from_char(c);
        if (!s) throw std::invalid_argument(std::string("bad symbol '") + c + "'");
        seq.slots.emplace_back(*s);
      }
    }
    return seq;
  }

  std::string to_string() const {
    std::string out;
    out.reserve(slots.size());
    for (const auto& s : slots) out.push_back(s ? sym_char(*s) : '_');
    return out;
  }

  std::size_t size() const { return slots.size(); }
  bool complete() const {
    for (const auto& s : slots)
      if (!s) return false;
    return true;
  }

  bool operator==(const SymbolSeq& o) const { return slots == o.slots; }
};

// Binary digit string, most significant first; no leading zero unless [0].
struct DigitList {
  std::vector<std::uint8_t> digits;

  DigitList() = default;
  DigitList(std::initializer_list<std::uint8_t> d) : digits(d) {}
  explicit DigitList(std::vector<std::uint8_t> d) : digits(std::move(d)) {}

  bool valid() const {
    if (digits.empty()) return false;
    for (auto d : digits)
      if (d > 1) return false;
    if (digits.size() > 1 && digits.front() == 0) return false;
    return true;
  }

  std::size_t size() const { return digits.size(); }
  bool operator==(const DigitList& o) const { return digits == o.digits; }
  bool operator<(const DigitList& o) const { return digits < o.digits; }

  std::string to_string() const {
    std::string s;
    for (auto d : digits) s.push_back(static_cast<char>('0' + d));
    return s;
  }

  unsigned long long value() const {
    unsigned long long v = 0;
    for (auto d : digits) v = (v << 1) | d;
    return v;
  }
};

inline DigitList strip_leading_zeros(std::vector<std::uint8_t> digits) {
  std::size_t i = 0;
  while (i + 1 < digits.size() && digits[i] == 0) ++i;
  return DigitList(std::vector<std::uint8_t>(digits.begin() + static_cast<long>(i), digits.end()));
}

struct ParsedEquation {
  DigitList x, y, z;
};

// ---------------------------------------------------------------------------
// Parsing (the fixed grammar: digits, '+', digits, '=', digits)

enum class ParseError { None, OperatorCountOrOrder, EmptySegment, LeadingZero };

struct ParseOutcome {
  bool ok = false;
  ParsedEquation eq;
  ParseError error = ParseError::None;
};

inline ParseOutcome parse_equation(const SymbolSeq& seq) {
  if (!seq.complete()) throw std::invalid_argument("parse_equation requires a blank-free sequence");
  ParseOutcome out;
  int plus_pos = -1, eq_pos = -1;
  for (std::size_t i = 0; i < seq.slots.size(); ++i) {
    Sym s = *seq.slots[i];
    if (s == Sym::Plus) {
      if (plus_pos >= 0 || eq_pos >= 0) {  // second '+' or '+' after '='
        out.error = ParseError::OperatorCountOrOrder;
        return out;
      }
      plus_pos = static_cast<int>(i);
    } else if (s == Sym::Eq) {
      if (eq_pos >= 0) {
        out.error = ParseError::OperatorCountOrOrder;
        return out;
      }
      eq_pos = static_cast<int>(i);
    }
  }
  if (plus_pos < 0 || eq_pos < 0 || eq_pos < plus_pos) {
    out.error = ParseError::OperatorCountOrOrder;
    return out;
  }
  auto segment = [&](int lo, int hi) {  // [lo, hi)
    std::vector<std::uint8_t> d;
    for (int i = lo; i < hi; ++i) d.push_back(static_cast<std::uint8_t>(*seq.slots[static_cast<std::size_t>(i)]));
    return DigitList(std::move(d));
  };
  DigitList x = segment(0, plus_pos);
  DigitList y = segment(plus_pos + 1, eq_pos);
  DigitList z = segment(eq_pos + 1, static_cast<int>(seq.slots.size()));
  for (const DigitList* d : {&x, &y, &z}) {
    if (d->digits.empty()) {
      out.error = ParseError::EmptySegment;
      return out;
    }
    if (d->digits.size() > 1 && d->digits.front() == 0) {
      out.error = ParseError::LeadingZero;
      return out;
    }
  }
  out.ok = true;
  out.eq = {std::move(x), std::move(y), std::move(z)};
  return out;
}

// ---------------------------------------------------------------------------
// Rule tables

inline constexpr std::array<std::pair<std::uint8_t, std::uint8_t>, 4> kDigitPairs = {
    {{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

// Candidate results in abduction preference order.
inline const std::vector<DigitList>& result_candidates() {
  static const std::vector<DigitList> c = {DigitList{0},    DigitList{1},    DigitList{1, 0},
                                           DigitList{1, 1}, DigitList{0, 1}, DigitList{0, 0}};
  return c;
}

// Partial map from digit pairs to digit lists of length 1 or 2: the abduced
// bitwise operation table. Functionality (one result per pair) is the
// integrity constraint.
class OpRuleSet {
 public:
  static int index(std::uint8_t d1, std::uint8_t d2) { return (d1 << 1) | d2; }

  const std::optional<DigitList>& get(std::uint8_t d1, std::uint8_t d2) const {
    return table_[static_cast<std::size_t>(index(d1, d2))];
  }

  bool contains(std::uint8_t d1, std::uint8_t d2) const { return get(d1, d2).has_value(); }

  void set(std::uint8_t d1, std::uint8_t d2, DigitList result) {
    if (d1 > 1 || d2 > 1) throw std::invalid_argument("rule operands must be binary digits");
    if (result.digits.empty() || result.digits.size() > 2)
      throw std::invalid_argument("rule result length must be 1 or 2");
    for (auto d : result.digits)
      if (d > 1) throw std::invalid_argument("rule result digits must be binary");
    auto& slot = table_[static_cast<std::size_t>(index(d1, d2))];
    if (slot && !(*slot == result))
      throw std::invalid_argument("conflicting rule for pair violates the integrity constraint");
    slot = std::move(result);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : table_)
      if (s) ++n;
    return n;
  }

  bool operator==(const OpRuleSet& o) const { return table_ == o.table_; }

  // canonical text form, one rule per line, sorted by (d1, d2)
  std::string to_text() const {
    std::ostringstream os;
    for (const auto& [d1, d2] : kDigitPairs) {
      const auto& r = get(d1, d2);
      if (!r) continue;
      os << "my_op(" << int(d1) << "," << int(d2) << ",[";
      for (std::size_t i = 0; i < r->digits.size(); ++i) {
        if (i) os << ',';
        os << int(r->digits[i]);
      }
      os << "])\n";
    }
    return os.str();
  }

  static OpRuleSet from_text(const std::string& text) {
    OpRuleSet rules;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      unsigned d1, d2;
      char buf[16];
      int consumed = 0;
      if (std::sscanf(line.c_str(), "my_op(%u,%u,[%15[01,]])%n", &d1, &d2, buf, &consumed) < 3)
        throw std::invalid_argument("bad rule line: " + line);
      std::vector<std::uint8_t> digits;
      for (const char* p = buf; *p; ++p)
        if (*p == '0' || *p == '1') digits.push_back(static_cast<std::uint8_t>(*p - '0'));
      rules.set(static_cast<std::uint8_t>(d1), static_cast<std::uint8_t>(d2), DigitList(std::move(digits)));
    }
    return rules;
  }

  // ground my_op/3 atoms for use with the logic engine
  std::vector<logic::TermPtr> to_atoms() const {
    std::vector<logic::TermPtr> out;
    for (const auto& [d1, d2] : kDigitPairs) {
      const auto& r = get(d1, d2);
      if (!r) continue;
      std::vector<logic::TermPtr> items;
      for (auto d : r->digits) items.push_back(logic::mk_int(d));
      out.push_back(logic::mk_compound(
          "my_op", {logic::mk_int(d1), logic::mk_int(d2), logic::mk_list(items)}));
    }
    return out;
  }

 private:
  std::array<std::optional<DigitList>, 4> table_;
};

inline OpRuleSet binary_add_table() {
  OpRuleSet r;
  r.set(0, 0, DigitList{0});
  r.set(0, 1, DigitList{1});
  r.set(1, 0, DigitList{1});
  r.set(1, 1, DigitList{1, 0});
  return r;
}

inline OpRuleSet xor_table() {
  OpRuleSet r;
  r.set(0, 0, DigitList{0});
  r.set(0, 1, DigitList{1});
  r.set(1, 0, DigitList{1});
  r.set(1, 1, DigitList{0});
  return r;
}

// ---------------------------------------------------------------------------
// Bitwise calculator

enum class CalcStatus { Value, Undefined, CarryOverflow };

struct CalcResult {
  CalcStatus status = CalcStatus::Value;
  DigitList value;
  std::pair<std::uint8_t, std::uint8_t> missing{0, 0};
};

// Column adder, little-endian, rule-table driven. The shorter operand is
// zero-padded; a column looks up (x_i, y_i), then on carry-in additionally
// looks up (digit, 1); carry-out bits come from result length. A trailing
// carry appends digit 1 without a lookup; the final string is stripped of
// leading zeros.
inline CalcResult bitwise_calc(const OpRuleSet& rules, const DigitList& x, const DigitList& y) {
  CalcResult out;
  const std::size_t n = std::max(x.size(), y.size());
  std::vector<std::uint8_t> little;
  little.reserve(n + 1);
  int carry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t xi = i < x.size() ? x.digits[x.size() - 1 - i] : 0;
    const std::uint8_t yi = i < y.size() ? y.digits[y.size() - 1 - i] : 0;
    const auto& L = rules.get(xi, yi);
    if (!L) {
      out.status = CalcStatus::Undefined;
      out.missing = {xi, yi};
      return out;
    }
    std::uint8_t digit = L->digits.back();
    int c1 = L->digits.size() == 2 ? 1 : 0;
    int c2 = 0;
    if (carry == 1) {
      const auto& L2 = rules.get(digit, 1);
      if (!L2) {
        out.status = CalcStatus::Undefined;
        out.missing = {digit, 1};
        return out;
      }
      digit = L2->digits.back();
      c2 = L2->digits.size() == 2 ? 1 : 0;
      if (c1 == 1 && c2 == 1) {
        out.status = CalcStatus::CarryOverflow;
        return out;
      }
    }
    carry = c1 + c2;
    little.push_back(digit);
  }
  if (carry == 1) little.push_back(1);
  std::vector<std::uint8_t> big(little.rbegin(), little.rend());
  out.value = strip_leading_zeros(std::move(big));
  return out;
}

// ---------------------------------------------------------------------------
// Entailment and consistency

enum class Entail { True, False, Unknown };

inline Entail entails(const OpRuleSet& rules, const SymbolSeq& seq) {
  ParseOutcome p = parse_equation(seq);
  if (!p.ok) return Entail::False;
  CalcResult c = bitwise_calc(rules, p.eq.x, p.eq.y);
  if (c.status != CalcStatus::Value) return Entail::Unknown;
  return c.value == p.eq.z ? Entail::True : Entail::False;
}

struct LabeledSeq {
  SymbolSeq seq;
  bool positive = true;
};

inline int consistency(const OpRuleSet& rules, const std::vector<LabeledSeq>& batch) {
  int n = 0;
  for (const auto& ex : batch) {
    Entail e = entails(rules, ex.seq);
    if ((ex.positive && e == Entail::True) || (!ex.positive && e == Entail::False)) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Abduction

// Per-position class probabilities (rows align with sequence slots).
using ProbRow = std::array<double, 4>;
using SeqProbs = std::vector<ProbRow>;

struct AbductionResult {
  OpRuleSet rules;
  std::vector<SymbolSeq> completed;
  std::vector<std::uint8_t> consistent;

  int consistency_count() const {
    int n = 0;
    for (auto c : consistent) n += c;
    return n;
  }
};

namespace detail {

// candidate symbols for one slot ordered by descending probability, ties by
// class index; alphabet order when no probabilities are given
inline std::array<Sym, 4> slot_candidates(const ProbRow* probs) {
  std::array<Sym, 4> order = {Sym::D0, Sym::D1, Sym::Plus, Sym::Eq};
  if (!probs) return order;
  std::stable_sort(order.begin(), order.end(), [&](Sym a, Sym b) {
    return (*probs)[static_cast<std::size_t>(a)] > (*probs)[static_cast<std::size_t>(b)];
  });
  return order;
}

// Lexicographic search over rule-table extensions: pairs in (d1,d2) order,
// options per free pair ordered [absent, [0], [1], [1,0], [1,1], [0,1],
// [0,0]]. Returns the first extension (applied on top of `base`) that makes
// the equation calculate to its z. Pruning: extending a table never changes
// an already-successful lookup, so a completed-but-wrong value, a carry
// overflow, and a missing pair that this branch already decided to leave
// absent all replay identically on every leaf of the subtree.
inline std::optional<OpRuleSet> extend_to_true(const OpRuleSet& base, const ParsedEquation& eq,
                                               int level, const OpRuleSet& working) {
  CalcResult c = bitwise_calc(working, eq.x, eq.y);
  if (c.status == CalcStatus::Value) return c.value == eq.z ? std::optional<OpRuleSet>(working)
                                                            : std::nullopt;
  if (c.status == CalcStatus::CarryOverflow) return std::nullopt;
  const int missing_idx = OpRuleSet::index(c.missing.first, c.missing.second);
  if (missing_idx < level || level == 4) return std::nullopt;

  const auto& [d1, d2] = kDigitPairs[static_cast<std::size_t>(level)];
  if (base.contains(d1, d2)) return extend_to_true(base, eq, level + 1, working);

  if (auto r = extend_to_true(base, eq, level + 1, working)) return r;  // absent first
  for (const DigitList& result : result_candidates()) {
    OpRuleSet w2 = working;
    w2.set(d1, d2, result);
    if (auto r = extend_to_true(base, eq, level + 1, w2)) return r;
  }
  return std::nullopt;
}

}  // namespace detail

// Greedy consistency-maximizing abduction. Examples are processed in input
// order over a growing rule set starting at base_rules. Positive examples
// may fill blanks and extend the table; negative examples may only fill
// blanks, committing the first filling the current rules make False. An
// example with no commitment keeps its most-preferred filling and is marked
// inconsistent.
inline AbductionResult abduce(const std::vector<LabeledSeq>& batch, const OpRuleSet& base_rules,
                              const std::vector<SeqProbs>* probs = nullptr) {
  if (probs && probs->size() != batch.size())
    throw std::invalid_argument("probability rows must align with the batch");
  AbductionResult out;
  out.rules = base_rules;
  out.completed.reserve(batch.size());
  out.consistent.assign(batch.size(), 0);

  for (std::size_t ei = 0; ei < batch.size(); ++ei) {
    const LabeledSeq& ex = batch[ei];
    const SeqProbs* sp = probs ? &(*probs)[ei] : nullptr;
    if (sp && sp->size() != ex.seq.size())
      throw std::invalid_argument("probability rows must align with sequence length");

    std::vector<std::size_t> blanks;
    for (std::size_t i = 0; i < ex.seq.size(); ++i)
      if (!ex.seq.slots[i]) blanks.push_back(i);
    std::vector<std::array<Sym, 4>> cands;
    cands.reserve(blanks.size());
    for (std::size_t b : blanks) cands.push_back(detail::slot_candidates(sp ? &(*sp)[b] : nullptr));

    SymbolSeq filled = ex.seq;
    for (std::size_t k = 0; k < blanks.size(); ++k) filled.slots[blanks[k]] = cands[k][0];

    bool committed = false;
    std::vector<std::size_t> odo(blanks.size(), 0);
    while (true) {
      for (std::size_t k = 0; k < blanks.size(); ++k) filled.slots[blanks[k]] = cands[k][odo[k]];
      if (ex.positive) {
        ParseOutcome p = parse_equation(filled);
        if (p.ok) {
          if (auto ext = detail::extend_to_true(out.rules, p.eq, 0, out.rules)) {
            out.rules = *ext;
            committed = true;
          }
        }
      } else {
        if (entails(out.rules, filled) == Entail::False) committed = true;
      }
      if (committed) break;
      std::size_t k = blanks.size();  // odometer, rightmost blank fastest
      while (k > 0) {
        if (++odo[k - 1] < 4) break;
        odo[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }

    if (!committed)  // keep the most probable filling
      for (std::size_t k = 0; k < blanks.size(); ++k) filled.slots[blanks[k]] = cands[k][0];
    out.completed.push_back(filled);
    out.consistent[ei] = committed ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// The same domain as a logic program. abduce() above follows exactly the
// enumeration order the engine produces on these clauses (blank fillings
// outermost, then rule choices per pair in (d1,d2) order with "none" first,
// candidate results in universe order); tests cross-check the two routes.

inline const char* kDomainProgram = R"PROLOG(
digits([0]).
digits([1|T]) :- bits(T).
bits([]).
bits([B|T]) :- bit(B), bits(T).
bit(0).
bit(1).

append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).

eq_parse(Seq, X, Y, Z) :-
    append(X, [+|R], Seq), append(Y, [=|Z], R),
    digits(X), digits(Y), digits(Z).

rev(L, R) :- rev_acc(L, [], R).
rev_acc([], A, A).
rev_acc([H|T], A, R) :- rev_acc(T, [H|A], R).

calc(Rs, X, Y, Z) :-
    rev(X, RX), rev(Y, RY), add_le(Rs, RX, RY, 0, RZ),
    rev(RZ, ZU), strip_zeros(ZU, Z).

add_le(_, [], [], 0, []).
add_le(_, [], [], 1, [1]).
add_le(Rs, [X|Xs], [], C, Z) :- add_le(Rs, [X|Xs], [0], C, Z).
add_le(Rs, [], [Y|Ys], C, Z) :- add_le(Rs, [0], [Y|Ys], C, Z).
add_le(Rs, [X|Xs], [Y|Ys], C, [D|Zs]) :-
    column(Rs, X, Y, C, D, C1), add_le(Rs, Xs, Ys, C1, Zs).

column(Rs, X, Y, 0, D, C) :-
    use_rule(Rs, X, Y, L), last_digit(L, D), carry_of(L, C).
column(Rs, X, Y, 1, D2, CO) :-
    use_rule(Rs, X, Y, L1), last_digit(L1, D1), carry_of(L1, C1),
    use_rule(Rs, D1, 1, L2), last_digit(L2, D2), carry_of(L2, C2),
    carry_sum(C1, C2, CO).

use_rule(rules(R, _, _, _), 0, 0, L) :- list_val(R, L).
use_rule(rules(_, R, _, _), 0, 1, L) :- list_val(R, L).
use_rule(rules(_, _, R, _), 1, 0, L) :- list_val(R, L).
use_rule(rules(_, _, _, R), 1, 1, L) :- list_val(R, L).
list_val([H|T], [H|T]).

last_digit([D], D).
last_digit([_|T], D) :- last_digit(T, D).
carry_of([_], 0).
carry_of([_,_], 1).
carry_sum(0, 0, 0).
carry_sum(0, 1, 1).
carry_sum(1, 0, 1).

strip_zeros([0], [0]).
strip_zeros([1|T], [1|T]).
strip_zeros([0,H|T], Z) :- strip_zeros([H|T], Z).

maybe_rule(_, _, none).
maybe_rule(A, B, L) :- my_op(A, B, L).

member(X, [X|_]).
member(X, [_|T]) :- member(X, T).

dlist_neq([], [_|_]).
dlist_neq([_|_], []).
dlist_neq([A|_], [B|_]) :- bit_neq(A, B).
dlist_neq([H|T1], [H|T2]) :- dlist_neq(T1, T2).
bit_neq(0, 1).
bit_neq(1, 0).

false :- my_op(A, B, L1), my_op(A, B, L2), dlist_neq(L1, L2).
)PROLOG";

inline logic::TermPtr sym_term(Sym s) {
  switch (s) {
    case Sym::D0: return logic::mk_int(0);
    case Sym::D1: return logic::mk_int(1);
    case Sym::Plus: return logic::mk_atom("+");
    default: return logic::mk_atom("=");
  }
}

// Constant universe: candidate rule results first (in preference order),
// then the digit and operator constants.
inline std::vector<logic::TermPtr> domain_universe() {
  std::vector<logic::TermPtr> u;
  for (const DigitList& r : result_candidates()) {
    std::vector<logic::TermPtr> items;
    for (auto d : r.digits) items.push_back(logic::mk_int(d));
    u.push_back(logic::mk_list(items));
  }
  u.push_back(logic::mk_int(0));
  u.push_back(logic::mk_int(1));
  u.push_back(logic::mk_atom("+"));
  u.push_back(logic::mk_atom("="));
  return u;
}

inline logic::Theory domain_theory(int depth_limit = logic::kDefaultDepthLimit) {
  return logic::Theory(logic::parse_program(kDomainProgram), {logic::sig("my_op", 3)},
                       domain_universe(), depth_limit);
}

// Builds the goal list whose first engine answer mirrors abduce() on one
// positive example. Out parameters receive the blank variables (for reading
// committed fillings from the answer binding).
inline std::vector<logic::TermPtr> positive_example_goals(
    const SymbolSeq& seq, const SeqProbs* probs, std::vector<std::string>* blank_var_names) {
  using namespace abl::logic;
  std::vector<TermPtr> goals;
  std::vector<TermPtr> slot_terms;
  int next_var = 0;
  auto fresh = [&](const std::string& name) { return mk_var(next_var++, intern(name)); };

  std::vector<TermPtr> fill_goals;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.slots[i]) {
      slot_terms.push_back(sym_term(*seq.slots[i]));
      continue;
    }
    std::string name = "S" + std::to_string(i);
    TermPtr v = fresh(name);
    if (blank_var_names) blank_var_names->push_back(name);
    slot_terms.push_back(v);
    auto order = detail::slot_candidates(probs ? &(*probs)[i] : nullptr);
    std::vector<TermPtr> cands;
    for (Sym s : order) cands.push_back(sym_term(s));
    fill_goals.push_back(mk_compound("member", {v, mk_list(cands)}));
  }

  TermPtr seq_term = mk_list(slot_terms);
  TermPtr X = fresh("X"), Y = fresh("Y"), Z = fresh("Z");
  TermPtr r00 = fresh("R00"), r01 = fresh("R01"), r10 = fresh("R10"), r11 = fresh("R11");

  goals = std::move(fill_goals);
  goals.push_back(mk_compound("eq_parse", {seq_term, X, Y, Z}));
  goals.push_back(mk_compound("maybe_rule", {mk_int(0), mk_int(0), r00}));
  goals.push_back(mk_compound("maybe_rule", {mk_int(0), mk_int(1), r01}));
  goals.push_back(mk_compound("maybe_rule", {mk_int(1), mk_int(0), r10}));
  goals.push_back(mk_compound("maybe_rule", {mk_int(1), mk_int(1), r11}));
  goals.push_back(mk_compound("calc", {mk_compound("rules", {r00, r01, r10, r11}), X, Y, Z}));
  return goals;
}

}  // namespace abl::eqn
