#include <functional>
#include <random>

#include "doctest.h"
#include "vdc/value.hpp"

using namespace vdc;

namespace {

Program test_program() {
  Program p;
  p.events.push_back({"Ev", 1, {}});
  return p;
}

}  // namespace

TEST_CASE("arithmetic and modulo") {
  Program p = test_program();
  Store s{{"x", Value(7)}};
  auto e = mk::binary(BinOp::Mod, mk::var("x"), mk::int_lit(2));
  CHECK(eval_expr(s, e, p.lattice).as_int() == 1);

  // Euclidean division: remainder is nonnegative.
  CHECK(div_euclid(7, 2) == 3);
  CHECK(div_euclid(-7, 2) == -4);
  CHECK(mod_euclid(-7, 2) == 1);
  CHECK(div_euclid(7, -2) == -3);
  CHECK(mod_euclid(7, -2) == 1);
  for (long long a = -9; a <= 9; ++a)
    for (long long b : {-3, -2, -1, 1, 2, 3}) {
      long long q = div_euclid(a, b), r = mod_euclid(a, b);
      CHECK(a == q * b + r);
      CHECK(r >= 0);
      CHECK(r < (b > 0 ? b : -b));
    }
}

TEST_CASE("trace builtins compute structurally") {
  Program p = test_program();
  Store s;
  auto t = mk::snoc(mk::snoc(mk::nil(), mk::event("Ev", {mk::int_lit(3)})),
                    mk::event("Ev", {mk::int_lit(4)}));
  CHECK(eval_expr(s, mk::len(t), p.lattice).as_int() == 2);
  CHECK(eval_expr(s, mk::sum(t), p.lattice).as_int() == 7);
  CHECK(eval_expr(s, mk::contains(t, mk::event("Ev", {mk::int_lit(3)})), p.lattice)
            .truthy());
  CHECK_FALSE(
      eval_expr(s, mk::contains(t, mk::event("Ev", {mk::int_lit(9)})), p.lattice)
          .truthy());
  auto u = mk::cat(t, t);
  CHECK(eval_expr(s, mk::len(u), p.lattice).as_int() == 4);
}

TEST_CASE("conditional labels evaluate into the carrier") {
  Program p = test_program();
  Store s{{"d", Value(1)}};
  auto e = mk::ite(mk::binary(BinOp::Ne, mk::var("d"), mk::int_lit(0)),
                   mk::label("high"), mk::label("low"));
  CHECK(eval_expr(s, e, p.lattice).as_level() == p.lattice.level("high"));
  s["d"] = Value(0);
  CHECK(eval_expr(s, e, p.lattice).as_level() == p.lattice.level("low"));
}

TEST_CASE("evaluation faults") {
  Program p = test_program();
  Store s;
  CHECK_THROWS_AS(eval_expr(s, mk::var("missing"), p.lattice), DefinitionError);
  CHECK_THROWS_AS(
      eval_expr(s, mk::binary(BinOp::Div, mk::int_lit(1), mk::int_lit(0)), p.lattice),
      EvalFault);
}

TEST_CASE("substitution leaves bound occurrences untouched") {
  auto body = mk::pure(mk::binary(BinOp::Eq, mk::var("x"), mk::int_lit(0)));
  auto a = mk::exists("x", Sort::Int, body);
  auto r = subst(a, "x", mk::int_lit(5));
  CHECK(assertion_equal(a, r));
}

TEST_CASE("substitution is capture avoiding") {
  // (exists y. y == x)[x := y + 1] must rename the binder.
  auto a = mk::exists("y", Sort::Int,
                      mk::pure(mk::binary(BinOp::Eq, mk::var("y"), mk::var("x"))));
  auto r = subst(a, "x", mk::binary(BinOp::Add, mk::var("y"), mk::int_lit(1)));
  REQUIRE(r->kind == AssertKind::Exists);
  CHECK(r->name != "y");
  std::set<std::string> fv = free_vars(r);
  CHECK(fv.count("y"));  // the substituted y stays free
}

TEST_CASE("substitution through History and star") {
  auto a = mk::star(mk::history(mk::var("t")),
                    mk::pure(mk::binary(BinOp::Eq, mk::var("x"),
                                        mk::len(mk::var("t")))));
  auto r = subst(a, "x", mk::var("n"));
  CHECK(assertion_equal(
      r, mk::star(mk::history(mk::var("t")),
                  mk::pure(mk::binary(BinOp::Eq, mk::var("n"),
                                      mk::len(mk::var("t")))))));
}

TEST_CASE("pure and relational flags") {
  auto cls = mk::classify(mk::var("x"), mk::label("low"));
  CHECK(is_pure(cls));
  CHECK(is_relational(cls));
  auto pt = mk::points_to(mk::int_lit(1), mk::var("v"));
  CHECK_FALSE(is_pure(pt));
  CHECK_FALSE(is_relational(pt));
  CHECK_FALSE(is_pure(mk::history(mk::var("t"))));
  CHECK(is_pure(mk::star(cls, mk::pure(mk::bool_lit(true)))));
}

TEST_CASE("randomized: substitution commutes with store update") {
  Program p = test_program();
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> val(0, 9), pick(0, 2);
  for (int iter = 0; iter < 500; ++iter) {
    // Random arithmetic expression over x, y.
    std::function<ExprPtr(int)> gen = [&](int depth) -> ExprPtr {
      if (depth == 0 || pick(rng) == 0) {
        switch (pick(rng)) {
          case 0: return mk::int_lit(val(rng));
          case 1: return mk::var("x");
          default: return mk::var("y");
        }
      }
      BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul};
      return mk::binary(ops[pick(rng)], gen(depth - 1), gen(depth - 1));
    };
    ExprPtr body = gen(3);
    ExprPtr replacement = gen(2);
    Store s{{"x", Value(val(rng))}, {"y", Value(val(rng))}};

    ExprPtr substituted = subst_expr(body, {{"x", replacement}});
    long long lhs = eval_expr(s, substituted, p.lattice).as_int();
    Store s2 = s;
    s2["x"] = eval_expr(s, replacement, p.lattice);
    long long rhs = eval_expr(s2, body, p.lattice).as_int();
    CHECK(lhs == rhs);
  }
}

TEST_CASE("eval is deterministic") {
  Program p = test_program();
  Store s{{"x", Value(3)}};
  auto e = mk::binary(BinOp::Mul, mk::var("x"), mk::var("x"));
  CHECK(eval_expr(s, e, p.lattice) == eval_expr(s, e, p.lattice));
}

TEST_CASE("heap union obeys the partial-monoid laws") {
  Heap a{{1, 5}, {2, 6}};
  Heap b{{3, 7}};
  Heap c{{4, 8}};
  CHECK(heaps_disjoint(a, b));
  CHECK_FALSE(heaps_disjoint(a, Heap{{2, 0}}));
  CHECK(heap_union(a, b) == heap_union(b, a));
  CHECK(heap_union(heap_union(a, b), c) == heap_union(a, heap_union(b, c)));
  CHECK_THROWS_AS(heap_union(a, Heap{{1, 9}}), UsageError);
  CHECK(heap_union(a, Heap{}) == a);
}
