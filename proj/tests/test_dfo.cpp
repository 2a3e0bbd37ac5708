#include <catch2/catch_amalgamated.hpp>

#include <abl/dfo.hpp>

#include <sstream>

using namespace abl::dfo;

namespace {

double popcount(const BinaryVector& v) {
  double n = 0;
  for (auto b : v) n += b;
  return n;
}

}  // namespace

TEST_CASE("popcount under a cardinality cap reaches the forced optimum") {
  auto c = SparsityConstraint::single_block(10, 2);
  DfoConfig cfg;
  cfg.budget = 200;
  cfg.seed = 1;
  auto r = optimize(popcount, 10, c, cfg);
  REQUIRE(r.best_value == 2.0);
  REQUIRE(r.trace.size() == 200);
}

TEST_CASE("every evaluated point satisfies the constraint") {
  SparsityConstraint c;
  c.k = 2;
  c.blocks = {{0, 5}, {5, 12}, {12, 20}};
  c.validate(20);
  DfoConfig cfg;
  cfg.budget = 150;
  cfg.seed = 2;
  auto r = optimize(popcount, 20, c, cfg);
  for (const auto& e : r.trace) REQUIRE(c.feasible(e.point));
}

TEST_CASE("the zero vector is feasible and retained as incumbent once sampled") {
  auto c = SparsityConstraint::single_block(3, 2);
  REQUIRE(c.feasible(BinaryVector{0, 0, 0}));
  DfoConfig cfg;
  cfg.budget = 100;
  cfg.seed = 3;
  auto zero_indicator = [](const BinaryVector& v) { return popcount(v) == 0 ? 1.0 : 0.0; };
  auto r = optimize(zero_indicator, 3, c, cfg);
  REQUIRE(r.best_value == 1.0);
  REQUIRE(r.best == BinaryVector{0, 0, 0});

  // incumbent value is non-decreasing along the trace
  double best = r.trace[0].value;
  bool seen_zero = false;
  for (const auto& e : r.trace) {
    best = std::max(best, e.value);
    if (e.value == 1.0) seen_zero = true;
    REQUIRE(best >= e.value);
  }
  REQUIRE(seen_zero);
}

TEST_CASE("optimizer beats or ties random search on a penalized onemax") {
  // ones in the first half score +1, ones in the second half score -1
  auto objective = [](const BinaryVector& v) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i < v.size() / 2 ? 1.0 : -1.0) * v[i];
    return s;
  };
  SparsityConstraint c;
  c.k = 4;
  c.blocks = {{0, 20}};
  c.validate(20);

  int wins_or_ties = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DfoConfig cfg;
    cfg.budget = 500;
    cfg.seed = seed;
    auto a = optimize(objective, 20, c, cfg);
    auto b = random_search(objective, 20, c, 500, seed + 1000);
    if (a.best_value >= b.best_value) ++wins_or_ties;
  }
  REQUIRE(wins_or_ties >= 15);
}

TEST_CASE("optimization is deterministic and respects its budget") {
  auto c = SparsityConstraint::single_block(12, 3);
  DfoConfig cfg;
  cfg.budget = 64;
  cfg.seed = 77;
  auto a = optimize(popcount, 12, c, cfg);
  auto b = optimize(popcount, 12, c, cfg);
  REQUIRE(a.trace.size() == 64);
  REQUIRE(a.best == b.best);
  REQUIRE(a.best_value == b.best_value);
  for (std::size_t i = 0; i < a.trace.size(); ++i) REQUIRE(a.trace[i].point == b.trace[i].point);
}

TEST_CASE("random search basics") {
  auto c = SparsityConstraint::single_block(6, 2);
  auto one = random_search(popcount, 6, c, 1, 5);
  REQUIRE(one.trace.size() == 1);
  REQUIRE(one.best == one.trace[0].point);

  auto constant = random_search([](const BinaryVector&) { return 3.5; }, 6, c, 10, 6);
  REQUIRE(constant.best_value == 3.5);
  REQUIRE(c.feasible(constant.best));
}

TEST_CASE("random search finds the popcount cap over 20 seeds") {
  auto c = SparsityConstraint::single_block(10, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = random_search(popcount, 10, c, 300, seed);
    REQUIRE(r.best_value == 2.0);
  }
}

TEST_CASE("constraint validation") {
  SparsityConstraint c;
  c.k = 1;
  c.blocks = {{0, 4}};
  REQUIRE_THROWS_AS(c.validate(4), std::invalid_argument);

  c.k = 2;
  c.blocks = {{0, 2}, {3, 4}};  // gap
  REQUIRE_THROWS_AS(c.validate(4), std::invalid_argument);

  c.blocks = {{0, 2}, {2, 3}};  // short
  REQUIRE_THROWS_AS(c.validate(4), std::invalid_argument);

  DfoConfig cfg;
  cfg.budget = 2;
  cfg.positive_set_size = 2;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = DfoConfig{};
  cfg.lambda = 1.5;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("trace exports as csv with hex-packed bits") {
  std::vector<Evaluation> trace = {{0, 1.5, {1, 0, 1, 0, 1}}, {1, -2.0, {0, 0, 0, 0, 0}}};
  std::ostringstream os;
  write_trace_csv(trace, os);
  REQUIRE(os.str() == "eval_index,value,bits_hex\n0,1.5,a8\n1,-2,00\n");
}
