#include <catch2/catch_amalgamated.hpp>

#include <abl/logic.hpp>
#include <abl/rng.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace abl::logic;

namespace {

Theory wet_grass_theory(bool exclude_rain = false) {
  std::string kb =
      "wet_grass :- rain_last_night.\n"
      "wet_grass :- sprinkler_was_on.\n"
      "wet_shoes :- wet_grass.\n"
      "false :- rain_last_night, sprinkler_was_on.\n";
  if (exclude_rain) kb += "false :- rain_last_night.\n";
  return Theory(parse_program(kb), {sig("rain_last_night", 0), sig("sprinkler_was_on", 0)}, {});
}

std::set<std::string> delta_strings(const Answer& a) {
  std::set<std::string> out;
  for (const auto& d : a.delta) out.insert(to_string(d));
  return out;
}

}  // namespace

TEST_CASE("unification on the family example") {
  Bindings b;
  auto goals = parse_goals("parent(X, bob), parent(adam, bob)");
  REQUIRE(unify(goals[0], goals[1], b));
  auto x = parse_term("X");  // fresh scope: id 0, same as X above
  REQUIRE(to_string(b.resolve(goals[0])) == "parent(adam,bob)");
  REQUIRE(to_string(b.resolve(x)) == "adam");
}

TEST_CASE("unification identity adds no bindings") {
  Bindings b;
  auto t = parse_term("f(X)");
  std::size_t before = b.mark();
  REQUIRE(unify(t, t, b));
  REQUIRE(b.mark() == before);
}

TEST_CASE("occurs check rejects X = f(X)") {
  Bindings b;
  auto gs = parse_goals("p(X), p(f(X))");
  REQUIRE_FALSE(unify(gs[0]->args[0], gs[1]->args[0], b));
}

namespace {

// brute-force oracle machinery for the most-general-unifier property
using GroundMap = std::map<int, TermPtr>;

TermPtr ground_apply(const TermPtr& t, const GroundMap& g) {
  switch (t->kind) {
    case Term::Kind::Var: return g.at(t->var);
    case Term::Kind::Atom:
    case Term::Kind::Int:
    case Term::Kind::Nil: return t;
    case Term::Kind::Cell:
      return mk_cell(ground_apply(t->args[0], g), ground_apply(t->args[1], g));
    case Term::Kind::Compound: {
      std::vector<TermPtr> args;
      for (const auto& a : t->args) args.push_back(ground_apply(a, g));
      return mk_compound(symbol_name(t->name), args);
    }
  }
  return t;
}

void collect_vars(const TermPtr& t, std::set<int>& out) {
  if (t->kind == Term::Kind::Var) {
    out.insert(t->var);
    return;
  }
  for (const auto& a : t->args) collect_vars(a, out);
}

TermPtr random_term(abl::Rng& rng, int depth) {
  const int pick = static_cast<int>(rng.below(depth > 0 ? 6 : 4));
  switch (pick) {
    case 0: return mk_var(static_cast<int>(rng.below(3)), intern("V"));
    case 1: return mk_atom("a");
    case 2: return mk_atom("b");
    case 3: return mk_atom("c");
    case 4: return mk_compound("f", {random_term(rng, depth - 1)});
    default:
      return mk_compound("g", {random_term(rng, depth - 1), random_term(rng, depth - 1)});
  }
}

}  // namespace

TEST_CASE("unify produces a most general unifier (ground-enumeration oracle)") {
  abl::Rng rng(20240811);
  const std::vector<TermPtr> consts = {mk_atom("a"), mk_atom("b"), mk_atom("c")};
  int checked_pairs = 0;
  for (int trial = 0; trial < 300; ++trial) {
    TermPtr t1 = random_term(rng, 2);
    TermPtr t2 = random_term(rng, 2);
    std::set<int> vars;
    collect_vars(t1, vars);
    collect_vars(t2, vars);

    Bindings fwd, rev;
    const bool ok_fwd = unify(t1, t2, fwd);
    const bool ok_rev = unify(t2, t1, rev);
    REQUIRE(ok_fwd == ok_rev);  // symmetry of success

    if (ok_fwd) {
      REQUIRE(term_equal(fwd.resolve(t1), fwd.resolve(t2)));
      REQUIRE(term_equal(rev.resolve(t1), rev.resolve(t2)));
    }

    // enumerate all ground instantiations over the 3-constant universe
    std::vector<int> vlist(vars.begin(), vars.end());
    std::vector<std::size_t> odo(vlist.size(), 0);
    while (true) {
      GroundMap g;
      for (std::size_t i = 0; i < vlist.size(); ++i) g[vlist[i]] = consts[odo[i]];
      const bool ground_unifies =
          term_equal(ground_apply(t1, g), ground_apply(t2, g));
      if (!ok_fwd) {
        REQUIRE_FALSE(ground_unifies);
      } else {
        // gamma unifies iff gamma factors through the mgu (both directions)
        for (const Bindings* b : {&fwd, &rev}) {
          bool factors = true;
          for (int v : vlist) {
            TermPtr image = b->resolve(mk_var(v, intern("V")));
            if (!term_equal(ground_apply(image, g), g.at(v))) {
              factors = false;
              break;
            }
          }
          REQUIRE(ground_unifies == factors);
        }
      }
      ++checked_pairs;
      std::size_t i = vlist.size();
      while (i > 0) {
        if (++odo[i - 1] < consts.size()) break;
        odo[i - 1] = 0;
        --i;
      }
      if (i == 0 || vlist.empty()) break;
    }
  }
  REQUIRE(checked_pairs > 300);
}

TEST_CASE("wet grass: rain excluded leaves the sprinkler as sole explanation") {
  Theory th = wet_grass_theory(/*exclude_rain=*/true);
  auto answers = solve_all(th, parse_goals("wet_shoes"));
  REQUIRE(answers.size() == 1);
  REQUIRE(delta_strings(answers[0]) == std::set<std::string>{"sprinkler_was_on"});
}

TEST_CASE("wet grass: both singleton explanations, never the violating pair") {
  Theory th = wet_grass_theory();
  auto answers = solve_all(th, parse_goals("wet_shoes"));
  REQUIRE(answers.size() == 2);
  REQUIRE(delta_strings(answers[0]) == std::set<std::string>{"rain_last_night"});
  REQUIRE(delta_strings(answers[1]) == std::set<std::string>{"sprinkler_was_on"});
  for (const auto& a : answers) REQUIRE(a.delta.size() == 1);
}

TEST_CASE("unprovable goals give an empty stream") {
  Theory th(parse_program("father(adam, bob).\n"
                          "parent(A, B) :- father(A, B).\n"),
            {}, {});
  SolveResult res;
  auto answers = solve_all(th, parse_goals("parent(eve, bob)"), {}, {}, &res);
  REQUIRE(answers.empty());
  REQUIRE_FALSE(res.depth_exceeded);
}

TEST_CASE("answers follow clause order") {
  Theory th(parse_program("father(adam, bob).\n"
                          "father(carl, bob).\n"
                          "parent(A, B) :- father(A, B).\n"),
            {}, {});
  auto answers = solve_all(th, parse_goals("parent(X, bob)"));
  REQUIRE(answers.size() == 2);
  REQUIRE(to_string(answers[0].binding.at("X")) == "adam");
  REQUIRE(to_string(answers[1].binding.at("X")) == "carl");
}

TEST_CASE("empty goal list yields one answer with the base delta") {
  Theory th = wet_grass_theory();
  auto base = parse_goals("rain_last_night");
  auto answers = solve_all(th, {}, base);
  REQUIRE(answers.size() == 1);
  REQUIRE(answers[0].binding.empty());
  REQUIRE(delta_strings(answers[0]) == std::set<std::string>{"rain_last_night"});
}

TEST_CASE("check_ic on the wet grass theory") {
  Theory th = wet_grass_theory();
  auto rain = parse_term("rain_last_night");
  auto sprinkler = parse_term("sprinkler_was_on");
  REQUIRE(check_ic(th, {rain, sprinkler}) == IcStatus::Violated);
  REQUIRE(check_ic(th, {}) == IcStatus::Satisfied);
  REQUIRE(check_ic(th, {rain}) == IcStatus::Satisfied);
}

TEST_CASE("ic violation is monotone in delta") {
  Theory th(parse_program("false :- a, b.\n"
                          "false :- c, a.\n"),
            {sig("a", 0), sig("b", 0), sig("c", 0)}, {});
  const std::vector<TermPtr> atoms = {mk_atom("a"), mk_atom("b"), mk_atom("c")};
  auto status = [&](unsigned mask) {
    std::vector<TermPtr> delta;
    for (unsigned i = 0; i < 3; ++i)
      if (mask & (1u << i)) delta.push_back(atoms[i]);
    return check_ic(th, delta);
  };
  for (unsigned m1 = 0; m1 < 8; ++m1)
    for (unsigned m2 = 0; m2 < 8; ++m2)
      if ((m1 & m2) == m1 && status(m1) == IcStatus::Violated)
        REQUIRE(status(m2) == IcStatus::Violated);
}

TEST_CASE("soundness: answers replay with assumptions disabled") {
  Theory th = wet_grass_theory();
  auto answers = solve_all(th, parse_goals("wet_shoes"));
  REQUIRE_FALSE(answers.empty());
  for (const auto& a : answers) {
    SolveOptions opt;
    opt.allow_assumptions = false;
    auto replay = solve_all(th, a.goals, a.delta, opt);
    REQUIRE_FALSE(replay.empty());
  }
}

TEST_CASE("monotonicity: re-solving from an answer's delta adds nothing") {
  Theory th = wet_grass_theory();
  auto goals = parse_goals("wet_shoes");
  for (const auto& a : solve_all(th, goals)) {
    auto again = solve_all(th, goals, a.delta);
    bool found = false;
    for (const auto& b : again) {
      if (delta_strings(b) == delta_strings(a) && b.binding == a.binding) found = true;
    }
    REQUIRE(found);
  }
}

TEST_CASE("depth limit is reported distinctly from failure") {
  Theory th(parse_program("p :- p.\n"), {}, {});
  SolveOptions opt;
  opt.depth_limit = 50;
  SolveResult res;
  auto answers = solve_all(th, parse_goals("p"), {}, opt, &res);
  REQUIRE(answers.empty());
  REQUIRE(res.depth_exceeded);

  // plain failure: no flag
  SolveResult res2;
  auto none = solve_all(th, parse_goals("q"), {}, opt, &res2);
  REQUIRE(none.empty());
  REQUIRE_FALSE(res2.depth_exceeded);
}

TEST_CASE("non-ground abducible goals are grounded from the universe in order") {
  Theory th(parse_program("want(X) :- val(X).\n"), {sig("val", 1)},
            {mk_int(0), mk_int(1), mk_atom("+")});
  auto answers = solve_all(th, parse_goals("want(X)"));
  REQUIRE(answers.size() == 3);
  REQUIRE(to_string(answers[0].binding.at("X")) == "0");
  REQUIRE(to_string(answers[1].binding.at("X")) == "1");
  REQUIRE(to_string(answers[2].binding.at("X")) == "+");
  for (const auto& a : answers) {
    REQUIRE(a.delta.size() == 1);
    REQUIRE(is_ground(a.delta[0]));
  }
}

TEST_CASE("duplicate answers are suppressed") {
  Theory th(parse_program("p :- q.\n"
                          "p :- r.\n"
                          "q.\n"
                          "r.\n"),
            {}, {});
  auto answers = solve_all(th, parse_goals("p"));
  REQUIRE(answers.size() == 1);
}

TEST_CASE("list syntax parses into cells") {
  auto t = parse_term("f([a, b | T])");
  REQUIRE(t->kind == Term::Kind::Compound);
  const auto& lst = t->args[0];
  REQUIRE(lst->kind == Term::Kind::Cell);
  REQUIRE(to_string(lst) == "[a,b|T_0]");
  REQUIRE(to_string(parse_term("[1,+,1,=,1]")) == "[1,+,1,=,1]");
  REQUIRE(to_string(parse_term("[]")) == "[]");
}

TEST_CASE("append works over parsed lists") {
  Theory th(parse_program("append([], L, L).\n"
                          "append([H|T], L, [H|R]) :- append(T, L, R).\n"),
            {}, {});
  auto answers = solve_all(th, parse_goals("append(X, Y, [a,b,c])"));
  REQUIRE(answers.size() == 4);
  REQUIRE(to_string(answers[0].binding.at("X")) == "[]");
  REQUIRE(to_string(answers[3].binding.at("Y")) == "[]");
}

TEST_CASE("theory validation rejects defined abducibles and bad clauses") {
  REQUIRE_THROWS_AS(Theory(parse_program("a.\n"), {sig("a", 0)}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(Theory({}, {}, {mk_var(0)}), std::invalid_argument);
  REQUIRE_THROWS_AS(Theory({}, {}, {}, 0), std::invalid_argument);
}

TEST_CASE("base delta must be ground and abducible") {
  Theory th = wet_grass_theory();
  REQUIRE_THROWS_AS(solve_all(th, parse_goals("wet_shoes"), parse_goals("wet_grass")),
                    std::invalid_argument);
}
