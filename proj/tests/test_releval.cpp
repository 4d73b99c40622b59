#include <random>

#include "doctest.h"
#include "vdc/releval.hpp"

using namespace vdc;

namespace {

struct Fixture {
  Lattice lat;
  std::vector<EventDecl> events{{"Ev", 1, {}}};
  RelEvalCtx ctx;

  Fixture() {
    ctx.lattice = &lat;
    ctx.events = &events;
    ctx.domains = WitnessDomains{0, 3, 2};
  }

  Level low() const { return lat.level("low"); }
  Level high() const { return lat.level("high"); }
};

StatePair pair_of(Store s, Heap h, Store s2, Heap h2, Level att) {
  StatePair p;
  p.major = {std::move(s), std::move(h), {}};
  p.minor = {std::move(s2), std::move(h2), {}};
  p.attacker = att;
  return p;
}

}  // namespace

TEST_CASE("classification against the attacker level") {
  Fixture f;
  auto xlow = mk::classify(mk::var("x"), mk::label("low"));
  auto xhigh = mk::classify(mk::var("x"), mk::label("high"));
  CHECK(holds_pure(f.ctx, f.low(), {{"x", Value(1)}}, {{"x", Value(1)}}, xlow));
  CHECK_FALSE(holds_pure(f.ctx, f.low(), {{"x", Value(1)}}, {{"x", Value(2)}}, xlow));
  // e :: high is just true for a low attacker.
  CHECK(holds_pure(f.ctx, f.low(), {{"x", Value(1)}}, {{"x", Value(2)}}, xhigh));
  CHECK_FALSE(holds_pure(f.ctx, f.high(), {{"x", Value(1)}}, {{"x", Value(2)}}, xhigh));
}

TEST_CASE("conditional labels follow the store") {
  Fixture f;
  auto label = mk::ite(mk::binary(BinOp::Ne, mk::var("d"), mk::int_lit(0)),
                       mk::label("high"), mk::label("low"));
  auto cls = mk::classify(mk::var("x"), label);
  // d=1 on both sides: the label is high, the antecedent fails, holds.
  CHECK(holds_pure(f.ctx, f.low(), {{"d", Value(1)}, {"x", Value(5)}},
                   {{"d", Value(1)}, {"x", Value(9)}}, cls));
  // d=0: label low, values must agree.
  CHECK_FALSE(holds_pure(f.ctx, f.low(), {{"d", Value(0)}, {"x", Value(5)}},
                         {{"d", Value(0)}, {"x", Value(9)}}, cls));
}

TEST_CASE("pure assertions impose an empty heap") {
  Fixture f;
  auto phi = mk::pure(mk::binary(BinOp::Eq, mk::var("x"), mk::int_lit(1)));
  CHECK(holds(f.ctx, pair_of({{"x", Value(1)}}, {}, {{"x", Value(1)}}, {}, f.low()),
              phi));
  CHECK_FALSE(holds(
      f.ctx, pair_of({{"x", Value(1)}}, {{4, 7}}, {{"x", Value(1)}}, {}, f.low()),
      phi));
  CHECK(holds(f.ctx, pair_of({}, {}, {}, {}, f.low()), mk::emp()));
  CHECK_FALSE(holds(f.ctx, pair_of({}, {{1, 1}}, {}, {}, f.low()), mk::emp()));
}

TEST_CASE("points-to requires exactly the singleton heaps") {
  Fixture f;
  auto pt = mk::points_to(mk::int_lit(4), mk::int_lit(7));
  CHECK(holds(f.ctx, pair_of({}, {{4, 7}}, {}, {{4, 7}}, f.low()), pt));
  CHECK_FALSE(holds(f.ctx, pair_of({}, {{4, 7}, {5, 1}}, {}, {{4, 7}}, f.low()), pt));
  // No disjoint split can satisfy p |-> v twice.
  auto dup = mk::star(pt, pt);
  CHECK_FALSE(holds(f.ctx, pair_of({}, {{4, 7}}, {}, {{4, 7}}, f.low()), dup));
}

TEST_CASE("star searches disjoint splittings") {
  Fixture f;
  auto both = mk::star(mk::points_to(mk::int_lit(1), mk::int_lit(5)),
                       mk::points_to(mk::int_lit(2), mk::int_lit(6)));
  Heap h{{1, 5}, {2, 6}};
  CHECK(holds(f.ctx, pair_of({}, h, {}, h, f.low()), both));
  auto swapped = mk::star(mk::points_to(mk::int_lit(2), mk::int_lit(6)),
                          mk::points_to(mk::int_lit(1), mk::int_lit(5)));
  CHECK(holds(f.ctx, pair_of({}, h, {}, h, f.low()), swapped));
}

TEST_CASE("History ties the expression to the ghost trace") {
  Fixture f;
  TraceVal ghost{EventVal{"Ev", {2}}};
  StatePair p;
  p.major = {{{"t", Value::of_trace(ghost)}}, {}, ghost};
  p.minor = {{{"t", Value::of_trace(ghost)}}, {}, ghost};
  p.attacker = f.low();
  CHECK(holds(f.ctx, p, mk::history(mk::var("t"))));
  p.minor.ghost.push_back(EventVal{"Ev", {3}});
  CHECK_FALSE(holds(f.ctx, p, mk::history(mk::var("t"))));
}

TEST_CASE("existentials bind the two sides independently") {
  Fixture f;
  // exists v. x == v holds even when the sides disagree on x.
  auto ex = mk::exists("v", Sort::Int,
                       mk::pure(mk::binary(BinOp::Eq, mk::var("x"), mk::var("v"))));
  CHECK(holds_pure(f.ctx, f.low(), {{"x", Value(1)}}, {{"x", Value(2)}}, ex));
  // Without domains the search is a capability error.
  RelEvalCtx bare = f.ctx;
  bare.domains.reset();
  CHECK_THROWS_AS(holds_pure(bare, f.low(), {{"x", Value(1)}}, {{"x", Value(1)}}, ex),
                  CapabilityError);
}

TEST_CASE("abstract predicates unfold registered definitions") {
  Fixture f;
  std::map<std::string, AssertionPtr> defs;
  defs["cell"] = mk::points_to(mk::int_lit(4), mk::int_lit(7));
  f.ctx.predicates = &defs;
  CHECK(holds(f.ctx, pair_of({}, {{4, 7}}, {}, {{4, 7}}, f.low()),
              mk::pred("cell", {})));
  CHECK_THROWS_AS(
      holds(f.ctx, pair_of({}, {}, {}, {}, f.low()), mk::pred("nodef", {})),
      DefinitionError);
  defs["loop"] = mk::pred("loop", {});
  CHECK_THROWS_AS(holds(f.ctx, pair_of({}, {}, {}, {}, f.low()), mk::pred("loop", {})),
                  DefinitionError);
}

TEST_CASE("classification is monotone along the lattice order") {
  // If el <= el' pointwise then e::el implies e::el', for every attacker.
  Lattice lat({"low", "alice", "bob", "high"},
              {{"low", "alice"}, {"low", "bob"}, {"alice", "high"}, {"bob", "high"}});
  std::vector<EventDecl> events;
  RelEvalCtx ctx;
  ctx.lattice = &lat;
  ctx.events = &events;
  ctx.domains = WitnessDomains{0, 3, 2};
  for (Level a = 0; a < lat.size(); ++a)
    for (Level b = 0; b < lat.size(); ++b) {
      if (!lat.leq(a, b)) continue;
      auto strong = mk::classify(mk::var("x"), mk::label(lat.name(a)));
      auto weak = mk::classify(mk::var("x"), mk::label(lat.name(b)));
      for (Level att = 0; att < lat.size(); ++att)
        for (long long x1 = 0; x1 <= 2; ++x1)
          for (long long x2 = 0; x2 <= 2; ++x2) {
            Store s1{{"x", Value(x1)}}, s2{{"x", Value(x2)}};
            if (holds_pure(ctx, att, s1, s2, strong))
              CHECK(holds_pure(ctx, att, s1, s2, weak));
          }
    }
}

TEST_CASE("e :: low holds exactly when the values agree") {
  Fixture f;
  auto e = mk::binary(BinOp::Add, mk::var("x"), mk::var("y"));
  auto cls = mk::classify(e, mk::label("low"));
  for (long long x1 = 0; x1 <= 3; ++x1)
    for (long long y1 = 0; y1 <= 3; ++y1)
      for (long long x2 = 0; x2 <= 3; ++x2)
        for (long long y2 = 0; y2 <= 3; ++y2) {
          Store s1{{"x", Value(x1)}, {"y", Value(y1)}};
          Store s2{{"x", Value(x2)}, {"y", Value(y2)}};
          CHECK(holds_pure(f.ctx, f.low(), s1, s2, cls) == (x1 + y1 == x2 + y2));
        }
}

TEST_CASE("star is commutative and associative under holds") {
  Fixture f;
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> nv(0, 3), addr(1, 4);
  for (int iter = 0; iter < 200; ++iter) {
    // Random heap of up to 4 cells, mirrored on both sides.
    Heap h;
    int cells = nv(rng) + 1;
    for (int i = 0; i < cells; ++i) h[addr(rng)] = nv(rng);
    std::vector<AssertionPtr> parts;
    for (const auto& [a, v] : h)
      parts.push_back(mk::points_to(mk::int_lit(a), mk::int_lit(v)));
    while (parts.size() < 3) parts.push_back(mk::emp());
    auto p = pair_of({}, h, {}, h, f.low());
    auto abc = mk::star(parts[0], mk::star(parts[1], parts[2]));
    auto cba = mk::star(mk::star(parts[2], parts[1]), parts[0]);
    CHECK(holds(f.ctx, p, abc) == holds(f.ctx, p, cba));
  }
}

TEST_CASE("non-relational pure formulas reduce to two evaluations") {
  Fixture f;
  std::mt19937 rng(23);
  std::uniform_int_distribution<long long> nv(0, 5);
  auto phi = mk::binary(BinOp::Lt, mk::var("x"),
                        mk::binary(BinOp::Add, mk::var("y"), mk::int_lit(2)));
  for (int iter = 0; iter < 200; ++iter) {
    Store s1{{"x", Value(nv(rng))}, {"y", Value(nv(rng))}};
    Store s2{{"x", Value(nv(rng))}, {"y", Value(nv(rng))}};
    bool expect = eval_expr(s1, phi, f.lat).truthy() && eval_expr(s2, phi, f.lat).truthy();
    CHECK(holds_pure(f.ctx, f.low(), s1, s2, mk::pure(phi)) == expect);
  }
}

TEST_CASE("derived: star of two cells over a two-cell heap") {
  Fixture f;
  // Enumerating the 4 subheap splittings of each side by hand shows exactly
  // one split works; holds must agree.
  Heap h{{1, 5}, {2, 6}};
  auto p = pair_of({}, h, {}, h, f.low());
  auto a = mk::star(mk::points_to(mk::int_lit(1), mk::int_lit(5)),
                    mk::points_to(mk::int_lit(2), mk::int_lit(6)));
  CHECK(holds(f.ctx, p, a));
  auto wrong = mk::star(mk::points_to(mk::int_lit(1), mk::int_lit(5)),
                        mk::points_to(mk::int_lit(2), mk::int_lit(7)));
  CHECK_FALSE(holds(f.ctx, p, wrong));
}
