#pragma once

// First-order terms, unification with occurs check, and a depth-limited SLD
// resolution engine extended with abduction: goals over declared abducible
// predicates may be assumed as ground facts, subject to integrity
// constraints. No cut, no negation as failure, no arithmetic builtins.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace abl::logic {

// ---------------------------------------------------------------------------
// Symbols

class SymbolTable {
 public:
  static SymbolTable& instance() {
    static SymbolTable t;
    return t;
  }

  int intern(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = ids_.find(s);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(s);
    ids_.emplace(s, id);
    return id;
  }

  std::string name(int id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return names_.at(static_cast<std::size_t>(id));
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

inline int intern(const std::string& s) { return SymbolTable::instance().intern(s); }
inline std::string symbol_name(int id) { return SymbolTable::instance().name(id); }

// ---------------------------------------------------------------------------
// Terms

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum class Kind { Var, Atom, Int, Compound, Nil, Cell };

  Kind kind;
  int var = -1;       // Var: id
  int name = -1;      // Var (optional display name), Atom, Compound functor
  long long ival = 0; // Int
  std::vector<TermPtr> args;  // Compound args; Cell: {head, tail}

  bool is_var() const { return kind == Kind::Var; }
  bool is_compound() const { return kind == Kind::Compound; }
  bool is_callable() const { return kind == Kind::Compound || kind == Kind::Atom; }
};

inline TermPtr mk_var(int id, int name = -1) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Var;
  t->var = id;
  t->name = name;
  return t;
}

inline TermPtr mk_atom(const std::string& s) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Atom;
  t->name = intern(s);
  return t;
}

inline TermPtr mk_int(long long v) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Int;
  t->ival = v;
  return t;
}

inline TermPtr mk_compound(const std::string& f, std::vector<TermPtr> args) {
  if (f.empty()) throw std::invalid_argument("functor name must be nonempty");
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Compound;
  t->name = intern(f);
  t->args = std::move(args);
  return t;
}

inline TermPtr mk_nil() {
  static const TermPtr nil = [] {
    auto t = std::make_shared<Term>();
    t->kind = Term::Kind::Nil;
    return TermPtr(t);
  }();
  return nil;
}

inline TermPtr mk_cell(TermPtr head, TermPtr tail) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Cell;
  t->args = {std::move(head), std::move(tail)};
  return t;
}

inline TermPtr mk_list(const std::vector<TermPtr>& items, TermPtr tail = nullptr) {
  TermPtr t = tail ? tail : mk_nil();
  for (auto it = items.rbegin(); it != items.rend(); ++it) t = mk_cell(*it, t);
  return t;
}

// Predicate signature: functor id / arity. Atoms used as propositions have
// arity 0.
using Sig = std::pair<int, int>;

inline std::optional<Sig> signature_of(const TermPtr& t) {
  if (t->kind == Term::Kind::Atom) return Sig{t->name, 0};
  if (t->kind == Term::Kind::Compound) return Sig{t->name, static_cast<int>(t->args.size())};
  return std::nullopt;
}

inline Sig sig(const std::string& functor, int arity) { return {intern(functor), arity}; }

// ---------------------------------------------------------------------------
// Structural helpers

inline bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Term::Kind::Var: return a->var == b->var;
    case Term::Kind::Atom: return a->name == b->name;
    case Term::Kind::Int: return a->ival == b->ival;
    case Term::Kind::Nil: return true;
    case Term::Kind::Cell:
      return term_equal(a->args[0], b->args[0]) && term_equal(a->args[1], b->args[1]);
    case Term::Kind::Compound:
      if (a->name != b->name || a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!term_equal(a->args[i], b->args[i])) return false;
      return true;
  }
  return false;
}

inline bool is_ground(const TermPtr& t) {
  if (t->kind == Term::Kind::Var) return false;
  for (const auto& a : t->args)
    if (!is_ground(a)) return false;
  return true;
}

inline void write_term(std::ostream& os, const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Var:
      if (t->name >= 0)
        os << symbol_name(t->name) << '_' << t->var;
      else
        os << "_G" << t->var;
      break;
    case Term::Kind::Atom: os << symbol_name(t->name); break;
    case Term::Kind::Int: os << t->ival; break;
    case Term::Kind::Nil: os << "[]"; break;
    case Term::Kind::Cell: {
      os << '[';
      TermPtr cur = t;
      bool first = true;
      while (cur->kind == Term::Kind::Cell) {
        if (!first) os << ',';
        write_term(os, cur->args[0]);
        first = false;
        cur = cur->args[1];
      }
      if (cur->kind != Term::Kind::Nil) {
        os << '|';
        write_term(os, cur);
      }
      os << ']';
      break;
    }
    case Term::Kind::Compound: {
      os << symbol_name(t->name);
      os << '(';
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        if (i) os << ',';
        write_term(os, t->args[i]);
      }
      os << ')';
      break;
    }
  }
}

inline std::string to_string(const TermPtr& t) {
  std::ostringstream os;
  write_term(os, t);
  return os.str();
}

// ---------------------------------------------------------------------------
// Bindings

// Variable store with a trail for backtracking. Variable ids index into a
// growable slot vector.
class Bindings {
 public:
  TermPtr walk(TermPtr t) const {
    while (t->kind == Term::Kind::Var) {
      const std::size_t id = static_cast<std::size_t>(t->var);
      if (id >= slots_.size() || !slots_[id]) return t;
      t = slots_[id];
    }
    return t;
  }

  bool occurs(int var, const TermPtr& t) const {
    TermPtr w = walk(t);
    if (w->kind == Term::Kind::Var) return w->var == var;
    for (const auto& a : w->args)
      if (occurs(var, a)) return true;
    return false;
  }

  void bind(int var, TermPtr t) {
    const std::size_t id = static_cast<std::size_t>(var);
    if (id >= slots_.size()) slots_.resize(id + 1);
    slots_[id] = std::move(t);
    trail_.push_back(var);
  }

  std::size_t mark() const { return trail_.size(); }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      slots_[static_cast<std::size_t>(trail_.back())] = nullptr;
      trail_.pop_back();
    }
  }

  // Substitute bindings all the way down; unbound variables remain.
  TermPtr resolve(const TermPtr& t) const {
    TermPtr w = walk(t);
    switch (w->kind) {
      case Term::Kind::Var:
      case Term::Kind::Atom:
      case Term::Kind::Int:
      case Term::Kind::Nil: return w;
      case Term::Kind::Cell: {
        TermPtr h = resolve(w->args[0]);
        TermPtr tl = resolve(w->args[1]);
        if (h.get() == w->args[0].get() && tl.get() == w->args[1].get()) return w;
        return mk_cell(std::move(h), std::move(tl));
      }
      case Term::Kind::Compound: {
        std::vector<TermPtr> args;
        args.reserve(w->args.size());
        bool changed = false;
        for (const auto& a : w->args) {
          TermPtr r = resolve(a);
          changed = changed || r.get() != a.get();
          args.push_back(std::move(r));
        }
        if (!changed) return w;
        auto t2 = std::make_shared<Term>();
        t2->kind = Term::Kind::Compound;
        t2->name = w->name;
        t2->args = std::move(args);
        return t2;
      }
    }
    return w;
  }

 private:
  std::vector<TermPtr> slots_;
  std::vector<int> trail_;
};

// Most general unification with occurs check. Extends b in place; returns
// false (with b unchanged up to the caller's mark) on failure.
inline bool unify(const TermPtr& a, const TermPtr& b, Bindings& binds) {
  TermPtr x = binds.walk(a);
  TermPtr y = binds.walk(b);
  if (x->kind == Term::Kind::Var && y->kind == Term::Kind::Var && x->var == y->var) return true;
  if (x->kind == Term::Kind::Var) {
    if (binds.occurs(x->var, y)) return false;
    binds.bind(x->var, y);
    return true;
  }
  if (y->kind == Term::Kind::Var) {
    if (binds.occurs(y->var, x)) return false;
    binds.bind(y->var, x);
    return true;
  }
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case Term::Kind::Atom: return x->name == y->name;
    case Term::Kind::Int: return x->ival == y->ival;
    case Term::Kind::Nil: return true;
    case Term::Kind::Cell:
      return unify(x->args[0], y->args[0], binds) && unify(x->args[1], y->args[1], binds);
    case Term::Kind::Compound: {
      if (x->name != y->name || x->args.size() != y->args.size()) return false;
      for (std::size_t i = 0; i < x->args.size(); ++i)
        if (!unify(x->args[i], y->args[i], binds)) return false;
      return true;
    }
    default: return false;
  }
}

// ---------------------------------------------------------------------------
// Clauses and theories

struct Clause {
  TermPtr head;
  std::vector<TermPtr> body;
  int nvars = 0;  // clause-local variable count, ids 0..nvars-1
};

inline int max_var_id(const TermPtr& t, int acc = -1) {
  if (t->kind == Term::Kind::Var) return t->var > acc ? t->var : acc;
  for (const auto& a : t->args) acc = max_var_id(a, acc);
  return acc;
}

inline int clause_nvars(const Clause& c) {
  int m = max_var_id(c.head);
  for (const auto& g : c.body) m = max_var_id(g, m);
  return m + 1;
}

inline TermPtr offset_vars(const TermPtr& t, int offset) {
  switch (t->kind) {
    case Term::Kind::Var: return mk_var(t->var + offset, t->name);
    case Term::Kind::Atom:
    case Term::Kind::Int:
    case Term::Kind::Nil: return t;
    case Term::Kind::Cell:
      return mk_cell(offset_vars(t->args[0], offset), offset_vars(t->args[1], offset));
    case Term::Kind::Compound: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(offset_vars(a, offset));
      auto t2 = std::make_shared<Term>();
      t2->kind = Term::Kind::Compound;
      t2->name = t->name;
      t2->args = std::move(args);
      return t2;
    }
  }
  return t;
}

inline constexpr int kDefaultDepthLimit = 10000;
inline const char* kFalsityAtom = "false";

// Abductive logic theory: knowledge base, abducible signatures, integrity
// constraints (denials), and the constant universe used to ground
// non-ground abducible goals before assumption.
class Theory {
 public:
  Theory() = default;

  Theory(std::vector<Clause> clauses, std::set<Sig> abducibles,
         std::vector<TermPtr> universe, int depth_limit = kDefaultDepthLimit)
      : abducibles_(std::move(abducibles)),
        universe_(std::move(universe)),
        depth_limit_(depth_limit) {
    if (depth_limit_ < 1) throw std::invalid_argument("depth_limit must be >= 1");
    const int falsity = intern(kFalsityAtom);
    for (auto& c : clauses) {
      if (!c.head || !c.head->is_callable())
        throw std::invalid_argument("clause head must be an atom or compound");
      c.nvars = clause_nvars(c);
      auto s = signature_of(c.head);
      if (s->first == falsity && s->second == 0) {
        ics_.push_back(std::move(c));
      } else {
        if (abducibles_.count(*s))
          throw std::invalid_argument("abducible predicate " + symbol_name(s->first) +
                                      "/" + std::to_string(s->second) +
                                      " must not have defining clauses");
        index_[*s].push_back(kb_.size());
        kb_.push_back(std::move(c));
      }
    }
    for (const auto& u : universe_)
      if (!is_ground(u)) throw std::invalid_argument("universe terms must be ground");
  }

  const std::vector<Clause>& kb() const { return kb_; }
  const std::vector<Clause>& ics() const { return ics_; }
  const std::set<Sig>& abducibles() const { return abducibles_; }
  const std::vector<TermPtr>& universe() const { return universe_; }
  int depth_limit() const { return depth_limit_; }

  bool is_abducible(const Sig& s) const { return abducibles_.count(s) != 0; }

  const std::vector<std::size_t>* clauses_for(const Sig& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? nullptr : &it->second;
  }

 private:
  std::vector<Clause> kb_;
  std::vector<Clause> ics_;
  std::set<Sig> abducibles_;
  std::vector<TermPtr> universe_;
  std::map<Sig, std::vector<std::size_t>> index_;
  int depth_limit_ = kDefaultDepthLimit;
};

// ---------------------------------------------------------------------------
// Solving

struct Answer {
  std::map<std::string, TermPtr> binding;  // goal variables only, fully resolved
  std::vector<TermPtr> delta;              // ground abducible atoms, includes base
  std::vector<TermPtr> goals;              // the query goals instantiated by binding
};

struct SolveOptions {
  int depth_limit = 0;          // 0: use the theory's limit
  bool dedup = true;            // suppress repeated (binding, delta) answers
  bool allow_assumptions = true;
};

struct SolveResult {
  std::size_t answer_count = 0;
  bool depth_exceeded = false;  // some branch was cut by the depth limit
  bool stopped = false;         // the callback asked to stop
};

enum class IcStatus { Satisfied, Violated, DepthExceeded };

using AnswerFn = std::function<bool(const Answer&)>;

namespace detail {

struct GoalNode {
  TermPtr goal;
  const GoalNode* next;
};

class Solver {
 public:
  Solver(const Theory& th, int depth_limit, bool allow_assumptions)
      : th_(th),
        depth_limit_(depth_limit > 0 ? depth_limit : th.depth_limit()),
        allow_assumptions_(allow_assumptions) {}

  SolveResult run(const std::vector<TermPtr>& goals, const std::vector<TermPtr>& base_delta,
                  bool dedup, const AnswerFn& yield) {
    dedup_ = dedup;
    yield_ = &yield;
    query_goals_ = &goals;
    for (const auto& a : base_delta) {
      if (!is_ground(a)) throw std::invalid_argument("base_delta atoms must be ground");
      auto s = signature_of(a);
      if (!s || !th_.is_abducible(*s))
        throw std::invalid_argument("base_delta atom is not over an abducible signature: " +
                                    to_string(a));
      if (!in_delta(a)) delta_.push_back(a);
    }
    int maxv = -1;
    for (const auto& g : goals) maxv = max_var_id(g, maxv);
    fresh_ = maxv + 1;
    collect_goal_vars(goals);

    // a base delta that already violates the constraints yields nothing
    IcStatus base = ic_status();
    if (base == IcStatus::Violated) return result_;
    if (base == IcStatus::DepthExceeded) {
      result_.depth_exceeded = true;
      return result_;
    }

    const GoalNode* list = nullptr;
    std::vector<GoalNode> nodes(goals.size());
    for (std::size_t i = goals.size(); i > 0; --i) {
      nodes[i - 1] = GoalNode{goals[i - 1], list};
      list = &nodes[i - 1];
    }
    prove(list, 0);
    return result_;
  }

  IcStatus public_ic_check(const std::vector<TermPtr>& delta) {
    for (const auto& a : delta) {
      if (!is_ground(a)) throw std::invalid_argument("delta atoms must be ground");
      if (!in_delta(a)) delta_.push_back(a);
    }
    return ic_status();
  }

 private:
  bool in_delta(const TermPtr& t) const {
    for (const auto& d : delta_)
      if (term_equal(d, t)) return true;
    return false;
  }

  void collect_goal_vars(const std::vector<TermPtr>& goals) {
    std::set<int> seen;
    std::function<void(const TermPtr&)> rec = [&](const TermPtr& t) {
      if (t->kind == Term::Kind::Var) {
        if (seen.insert(t->var).second) goal_vars_.push_back(t);
        return;
      }
      for (const auto& a : t->args) rec(a);
    };
    for (const auto& g : goals) rec(g);
  }

  // Proves one integrity-constraint body from kb plus the current delta,
  // with assumptions disabled. Conservative on truncation.
  IcStatus ic_status() {
    bool truncated = false;
    for (const auto& ic : th_.ics()) {
      Solver sub(th_, depth_limit_, /*allow_assumptions=*/false);
      sub.delta_ = delta_;
      sub.dedup_ = false;
      bool provable = false;
      AnswerFn first = [&](const Answer&) {
        provable = true;
        return false;
      };
      sub.yield_ = &first;
      static const std::vector<TermPtr> kNoGoals;
      sub.query_goals_ = &kNoGoals;
      const int off = sub.fresh_;
      sub.fresh_ += ic.nvars;
      std::vector<GoalNode> nodes(ic.body.size());
      const GoalNode* list = nullptr;
      for (std::size_t i = ic.body.size(); i > 0; --i) {
        nodes[i - 1] = GoalNode{offset_vars(ic.body[i - 1], off), list};
        list = &nodes[i - 1];
      }
      sub.prove(list, 0);
      if (provable) return IcStatus::Violated;
      if (sub.result_.depth_exceeded) truncated = true;
    }
    return truncated ? IcStatus::DepthExceeded : IcStatus::Satisfied;
  }

  // Depth-first proof over the goal list. Returns false to abort the whole
  // search (callback said stop).
  bool prove(const GoalNode* goals, int depth) {
    if (!goals) return emit();
    if (depth >= depth_limit_) {
      result_.depth_exceeded = true;
      return true;
    }
    TermPtr g = binds_.walk(goals->goal);
    auto s = signature_of(g);
    if (!s) {
      // a bare variable or non-callable term cannot be proven
      return true;
    }

    if (th_.is_abducible(*s)) return prove_abducible(g, goals, depth);

    const auto* idx = th_.clauses_for(*s);
    if (!idx) return true;  // no clauses: plain failure
    for (std::size_t ci : *idx) {
      const Clause& c = th_.kb()[ci];
      const int off = fresh_;
      fresh_ += c.nvars;
      const std::size_t m = binds_.mark();
      if (unify(g, offset_vars(c.head, off), binds_)) {
        std::vector<GoalNode> nodes(c.body.size());
        const GoalNode* list = goals->next;
        for (std::size_t i = c.body.size(); i > 0; --i) {
          nodes[i - 1] = GoalNode{offset_vars(c.body[i - 1], off), list};
          list = &nodes[i - 1];
        }
        if (!prove(list, depth + 1)) return false;
      }
      binds_.undo(m);
      fresh_ = off;
    }
    return true;
  }

  bool prove_abducible(const TermPtr& g, const GoalNode* goals, int depth) {
    // reuse facts already assumed (also covers base delta)
    for (std::size_t i = 0; i < delta_.size(); ++i) {
      const std::size_t m = binds_.mark();
      if (unify(g, delta_[i], binds_)) {
        if (!prove(goals->next, depth + 1)) return false;
      }
      binds_.undo(m);
    }
    if (!allow_assumptions_) return true;

    // assume a new ground instance; non-ground goals are grounded by
    // enumerating the theory's constant universe
    std::vector<TermPtr> vars;
    collect_free_vars(g, vars);
    if (vars.empty()) {
      TermPtr atom = binds_.resolve(g);
      if (in_delta(atom)) return true;  // already handled by the reuse loop
      return try_assume(atom, goals, depth);
    }
    const auto& uni = th_.universe();
    if (uni.empty()) return true;
    std::vector<std::size_t> odo(vars.size(), 0);
    while (true) {
      const std::size_t m = binds_.mark();
      bool ok = true;
      for (std::size_t i = 0; i < vars.size() && ok; ++i)
        ok = unify(vars[i], uni[odo[i]], binds_);
      if (ok) {
        TermPtr atom = binds_.resolve(g);
        if (!in_delta(atom)) {
          if (!try_assume(atom, goals, depth)) return false;
        }
      }
      binds_.undo(m);
      // odometer, last variable fastest
      std::size_t i = vars.size();
      while (i > 0) {
        if (++odo[i - 1] < uni.size()) break;
        odo[i - 1] = 0;
        --i;
      }
      if (i == 0) break;
    }
    return true;
  }

  // atom is the fully grounded instance of the current goal
  bool try_assume(const TermPtr& atom, const GoalNode* goals, int depth) {
    bool cont = true;
    delta_.push_back(atom);
    IcStatus ic = ic_status();
    if (ic == IcStatus::DepthExceeded) result_.depth_exceeded = true;
    if (ic == IcStatus::Satisfied) cont = prove(goals->next, depth + 1);
    delta_.pop_back();
    return cont;
  }

  void collect_free_vars(const TermPtr& t, std::vector<TermPtr>& out) {
    TermPtr w = binds_.walk(t);
    if (w->kind == Term::Kind::Var) {
      for (const auto& v : out)
        if (v->var == w->var) return;
      out.push_back(w);
      return;
    }
    for (const auto& a : w->args) collect_free_vars(a, out);
  }

  bool emit() {
    Answer ans;
    for (const auto& v : goal_vars_) {
      std::string key = v->name >= 0 ? symbol_name(v->name) : std::string("_");
      if (key == "_") key = "_G" + std::to_string(v->var);  // anonymous vars stay distinct
      ans.binding[key] = binds_.resolve(v);
    }
    ans.delta = delta_;
    ans.goals.reserve(query_goals_->size());
    for (const auto& g : *query_goals_) ans.goals.push_back(binds_.resolve(g));
    if (dedup_) {
      std::ostringstream key;
      for (const auto& [k, t] : ans.binding) key << k << '=' << to_string(t) << ';';
      std::vector<std::string> ds;
      ds.reserve(ans.delta.size());
      for (const auto& d : ans.delta) ds.push_back(to_string(d));
      std::sort(ds.begin(), ds.end());
      for (const auto& d : ds) key << d << '&';
      if (!seen_.insert(key.str()).second) return true;
    }
    ++result_.answer_count;
    return (*yield_)(ans);
  }

  const Theory& th_;
  int depth_limit_;
  bool allow_assumptions_;
  bool dedup_ = true;
  Bindings binds_;
  std::vector<TermPtr> delta_;
  std::vector<TermPtr> goal_vars_;
  const std::vector<TermPtr>* query_goals_ = nullptr;
  const AnswerFn* yield_ = nullptr;
  std::set<std::string> seen_;
  int fresh_ = 0;
  SolveResult result_;
};

}  // namespace detail

// Enumerates abductive answers depth-first in clause order, invoking `yield`
// for each; return false from the callback to stop early. The result's
// depth_exceeded flag distinguishes "stream exhausted" from "search
// truncated somewhere".
inline SolveResult solve(const Theory& th, const std::vector<TermPtr>& goals,
                         const std::vector<TermPtr>& base_delta, const SolveOptions& opt,
                         const AnswerFn& yield) {
  detail::Solver s(th, opt.depth_limit, opt.allow_assumptions);
  SolveResult r = s.run(goals, base_delta, opt.dedup, yield);
  return r;
}

inline std::vector<Answer> solve_all(const Theory& th, const std::vector<TermPtr>& goals,
                                     const std::vector<TermPtr>& base_delta = {},
                                     const SolveOptions& opt = {},
                                     SolveResult* result_out = nullptr) {
  std::vector<Answer> out;
  SolveResult r = solve(th, goals, base_delta, opt, [&](const Answer& a) {
    out.push_back(a);
    return true;
  });
  if (result_out) *result_out = r;
  return out;
}

inline std::optional<Answer> solve_first(const Theory& th, const std::vector<TermPtr>& goals,
                                         const std::vector<TermPtr>& base_delta = {},
                                         const SolveOptions& opt = {},
                                         SolveResult* result_out = nullptr) {
  std::optional<Answer> out;
  SolveResult r = solve(th, goals, base_delta, opt, [&](const Answer& a) {
    out = a;
    return false;
  });
  if (result_out) *result_out = r;
  return out;
}

// True iff no integrity-constraint body is provable from kb plus delta.
inline IcStatus check_ic(const Theory& th, const std::vector<TermPtr>& delta,
                         int depth_limit = 0) {
  detail::Solver s(th, depth_limit, /*allow_assumptions=*/false);
  return s.public_ic_check(delta);
}

// ---------------------------------------------------------------------------
// Clause text syntax
//
//   parent(A, B) :- father(A, B).
//   father(adam, bob).
//   false :- rain_last_night, sprinkler_was_on.
//   eq([1,+|T]).          % lists, symbolic atoms + and =
//
// Variables start with an uppercase letter or underscore; `_` alone is
// anonymous. `%` starts a line comment.

namespace detail {

class ClauseParser {
 public:
  explicit ClauseParser(std::string text) : text_(std::move(text)) {}

  std::vector<Clause> parse_program() {
    std::vector<Clause> out;
    skip_ws();
    while (pos_ < text_.size()) {
      out.push_back(parse_clause());
      skip_ws();
    }
    return out;
  }

  std::vector<TermPtr> parse_goal_list() {
    auto goals = parse_term_list();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '.') ++pos_;
    skip_ws();
    if (pos_ < text_.size()) fail("trailing input after goals");
    return goals;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("clause syntax error at offset " + std::to_string(pos_) + ": " +
                                msg);
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool eat(const std::string& s) {
    skip_ws();
    if (text_.compare(pos_, s.size(), s) == 0) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Clause parse_clause() {
    vars_.clear();
    next_var_ = 0;
    Clause c;
    c.head = parse_term();
    if (eat(":-")) {
      c.body = parse_term_list();
    }
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '.') fail("expected '.' at end of clause");
    ++pos_;
    c.nvars = next_var_;
    return c;
  }

  std::vector<TermPtr> parse_term_list() {
    std::vector<TermPtr> ts;
    ts.push_back(parse_term());
    while (eat(",")) ts.push_back(parse_term());
    return ts;
  }

  static bool sym_char(char c) {
    return c == '+' || c == '=' || c == '*' || c == '/' || c == '<' || c == '>' || c == '?' ||
           c == '&' || c == '@' || c == '~' || c == '^';
  }

  TermPtr parse_term() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '[') return parse_list();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return mk_int(std::stoll(text_.substr(start, pos_ - start)));
    }
    if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name = text_.substr(start, pos_ - start);
      if (name == "_") return mk_var(next_var_++, intern("_"));
      auto it = vars_.find(name);
      if (it == vars_.end()) it = vars_.emplace(name, next_var_++).first;
      return mk_var(it->second, intern(name));
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name = text_.substr(start, pos_ - start);
      if (peek() == '(') {
        ++pos_;
        auto args = parse_term_list();
        if (!eat(")")) fail("expected ')'");
        return mk_compound(name, std::move(args));
      }
      return mk_atom(name);
    }
    if (sym_char(c)) {
      std::size_t start = pos_;
      // ":-" is handled by the clause rule; a lone symbolic char is an atom
      while (pos_ < text_.size() && sym_char(text_[pos_])) ++pos_;
      std::string name = text_.substr(start, pos_ - start);
      if (peek() == '(') {
        ++pos_;
        auto args = parse_term_list();
        if (!eat(")")) fail("expected ')'");
        return mk_compound(name, std::move(args));
      }
      return mk_atom(name);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  TermPtr parse_list() {
    ++pos_;  // '['
    if (eat("]")) return mk_nil();
    std::vector<TermPtr> items;
    items.push_back(parse_term());
    while (eat(",")) items.push_back(parse_term());
    TermPtr tail = nullptr;
    if (eat("|")) tail = parse_term();
    if (!eat("]")) fail("expected ']'");
    return mk_list(items, tail);
  }

  std::string text_;
  std::size_t pos_ = 0;
  std::map<std::string, int> vars_;
  int next_var_ = 0;
};

}  // namespace detail

inline std::vector<Clause> parse_program(const std::string& text) {
  return detail::ClauseParser(text).parse_program();
}

// Parses a comma-separated goal conjunction such as "parent(X, bob)".
// Variables are scoped to this call, with ids starting at 0.
inline std::vector<TermPtr> parse_goals(const std::string& text) {
  return detail::ClauseParser(text).parse_goal_list();
}

inline TermPtr parse_term(const std::string& text) {
  auto gs = parse_goals(text);
  if (gs.size() != 1) throw std::invalid_argument("expected exactly one term");
  return gs[0];
}

}  // namespace abl::logic
