#include <random>

#include "doctest.h"
#include "vdc/oracle.hpp"
#include "vdc/parser.hpp"

using namespace vdc;

namespace {

Program parse_src(const std::string& src) {
  auto r = parse_program(src);
  if (!r.ok())
    for (const auto& d : r.diagnostics) MESSAGE(d.str());
  REQUIRE(r.ok());
  return *r.program;
}

Lattice default_lat;

Level low() { return default_lat.level("low"); }
Level high() { return default_lat.level("high"); }

RelEvalCtx bare_ctx() {
  static std::vector<EventDecl> events{{"Ev", 1, {}}};
  RelEvalCtx ctx;
  ctx.lattice = &default_lat;
  ctx.events = &events;
  ctx.domains = WitnessDomains{0, 3, 2};
  return ctx;
}

// Complete (stopped) runs of the space's entry from a given state.
std::vector<Schedule> complete_runs(const StateSpace& space, const RelState& s,
                                    int bound) {
  std::vector<Schedule> out;
  for (auto& e : runs_from(space, s, bound).entries)
    if (e.config.is_stop()) out.push_back(e.schedule);
  return out;
}

const RelState* state_with(const StateSpace& space, const std::string& var,
                           long long val) {
  for (const auto& s : space.states)
    if (s.store.at(var) == Value(val)) return &s;
  return nullptr;
}

}  // namespace

TEST_CASE("visibility erases assumptions and traces") {
  Action a = Action::assume({{"x", Value(1)}}, {}, mk::classify(mk::var("x"),
                                                                mk::label("low")));
  CHECK(visible(default_lat, low(), a).kind == ActionKind::Tau);
  CHECK(visible(default_lat, low(), Action::trace(EventVal{"Ev", {1}})).kind ==
        ActionKind::Tau);
  Action l = Action::load(3);
  CHECK(action_equal(visible(default_lat, low(), l), l));
  Action s = Action::store_(5);
  CHECK(action_equal(visible(default_lat, high(), s), s));
}

TEST_CASE("output visibility follows the decided direction") {
  Action out_high = Action::out(high(), 9);
  Action out_low = Action::out(low(), 9);
  // Sound default: the attacker sees channels at or below their level.
  CHECK(visible(default_lat, low(), out_high).kind == ActionKind::Tau);
  CHECK(action_equal(visible(default_lat, high(), out_low), out_low));
  CHECK(action_equal(visible(default_lat, high(), out_high), out_high));
  // Paper reading: the literal direction from the definition.
  CHECK(action_equal(
      visible(default_lat, low(), out_high, VisibilityDirection::Paper), out_high));
  CHECK(visible(default_lat, high(), out_low, VisibilityDirection::Paper).kind ==
        ActionKind::Tau);
}

TEST_CASE("observational equivalence compares projections pointwise") {
  Schedule a{Action::tau(), Action::out(low(), 1)};
  Schedule b{Action::tau(), Action::out(low(), 1)};
  CHECK(obs_equiv(default_lat, low(), a, b));
  Schedule c{Action::out(low(), 1)};
  Schedule d{Action::out(low(), 2)};
  CHECK_FALSE(obs_equiv(default_lat, low(), c, d));
  // Assumptions project to tau on both sides.
  Schedule e{Action::assume({{"x", Value(1)}}, {},
                            mk::classify(mk::var("x"), mk::label("low")))};
  Schedule f{Action::tau()};
  CHECK(obs_equiv(default_lat, low(), e, f));
  // Different lengths are never equivalent.
  CHECK_FALSE(obs_equiv(default_lat, low(), a, c));
}

TEST_CASE("alignment is stricter than observational equivalence") {
  auto rho = mk::classify(mk::var("x"), mk::label("low"));
  Schedule a{Action::assume({{"x", Value(1)}}, {}, rho)};
  Schedule b{Action::assume({{"x", Value(2)}}, {}, rho)};
  CHECK(aligned(default_lat, low(), a, b));  // stores are free

  Schedule t1{Action::trace(EventVal{"Ev", {1}})};
  Schedule t2{Action::trace(EventVal{"Ev", {2}})};
  CHECK(aligned(default_lat, low(), t1, t2));  // payloads are free

  // assume vs tau: observably equivalent but not aligned.
  Schedule tau{Action::tau()};
  CHECK(obs_equiv(default_lat, low(), a, tau));
  CHECK_FALSE(aligned(default_lat, low(), a, tau));

  // Outputs align only when the visible values agree and levels match.
  CHECK(aligned(default_lat, low(), {Action::out(high(), 1)},
                {Action::out(high(), 2)}));
  CHECK_FALSE(aligned(default_lat, low(), {Action::out(low(), 1)},
                      {Action::out(low(), 2)}));
  CHECK_FALSE(aligned(default_lat, low(), {Action::out(low(), 1)},
                      {Action::out(high(), 1)}));
}

TEST_CASE("randomized: aligned schedules are observably equivalent") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> kind(0, 6), val(0, 3), coin(0, 1);
  auto rho = mk::classify(mk::var("x"), mk::label("low"));
  auto rnd_action = [&]() {
    switch (kind(rng)) {
      case 0: return Action::tau();
      case 1: return Action::sched_l();
      case 2: return Action::sched_r();
      case 3: return Action::load(val(rng));
      case 4: return Action::out(coin(rng) ? low() : high(), val(rng));
      case 5: return Action::trace(EventVal{"Ev", {val(rng)}});
      default:
        return Action::assume({{"x", Value(val(rng))}}, {}, rho);
    }
  };
  for (int iter = 0; iter < 500; ++iter) {
    Schedule a, b;
    int n = val(rng) + 1;
    for (int i = 0; i < n; ++i) {
      Action x = rnd_action();
      a.push_back(x);
      // Mutate within the alignment relation half the time.
      Action y = x;
      if (coin(rng)) {
        if (x.kind == ActionKind::Trace) y.event.fields[0] = val(rng);
        if (x.kind == ActionKind::Assume) y.store["x"] = Value(val(rng));
        if (x.kind == ActionKind::Out && !default_lat.leq(x.out_level, low()))
          y.out_value = val(rng);
      }
      b.push_back(y);
    }
    if (aligned(default_lat, low(), a, b)) CHECK(obs_equiv(default_lat, low(), a, b));
  }
}

TEST_CASE("assumption failure between recorded stores") {
  auto rho = mk::classify(mk::var("x"), mk::label("low"));
  RelEvalCtx ctx = bare_ctx();
  Schedule a{Action::assume({{"x", Value(1)}}, {}, rho)};
  Schedule b{Action::assume({{"x", Value(2)}}, {}, rho)};
  CHECK(assumption_failed(ctx, low(), 0, a, b));
  Schedule b_same{Action::assume({{"x", Value(1)}}, {}, rho)};
  CHECK_FALSE(assumption_failed(ctx, low(), 0, a, b_same));
  Schedule tau{Action::tau()};
  CHECK_FALSE(assumption_failed(ctx, low(), 0, a, tau));  // shape mismatch
  CHECK_THROWS_AS(assumption_failed(ctx, low(), 1, a, b), UsageError);
}

TEST_CASE("uncertainty of a parity output") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { out[low](x % 2); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  REQUIRE(space.states.size() == 4);

  const RelState* major = state_with(space, "x", 2);
  REQUIRE(major);
  auto full = complete_runs(space, *major, 2);
  REQUIRE(full.size() == 1);
  auto u = uncertainty(space, *major, full[0], 2);
  std::set<long long> seen;
  for (int i : u) seen.insert(space.states[i].store.at("x").as_int());
  CHECK(seen == std::set<long long>{0, 2});

  // The empty observation keeps the whole filtered space.
  auto u0 = uncertainty(space, *major, {}, 2);
  CHECK(u0.size() == 4);
  // Reflexivity: the major explains its own observations.
  CHECK(seen.count(2) == 1);
}

TEST_CASE("outputs above the attacker level are invisible") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { out[high](x); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  const RelState* major = state_with(space, "x", 1);
  auto full = complete_runs(space, *major, 2);
  REQUIRE(full.size() == 1);
  auto u = uncertainty(space, *major, full[0], 2);
  CHECK(u.size() == 4);  // all projections are tau
}

TEST_CASE("release by assumption keeps exactly the failing minors") {
  Program p = parse_src(
      "proc main() requires: x :: high &*& History(nil) "
      "ensures: History(nil) { assume(x :: low); out[low](x); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  const RelState* major = state_with(space, "x", 1);
  auto full = complete_runs(space, *major, 3);
  REQUIRE(full.size() == 1);
  REQUIRE(full[0].size() == 2);

  // Through the assume step: every minor disagreeing on x can fail it.
  Schedule prefix(full[0].begin(), full[0].begin() + 1);
  auto rel = assumed_release(space, *major, prefix, 3);
  std::set<long long> released;
  for (int i : rel) released.insert(space.states[i].store.at("x").as_int());
  CHECK(released == std::set<long long>{0, 2, 3});  // everyone but x = 1

  // Release is a subset of uncertainty for the same prefix.
  auto unc = uncertainty(space, *major, prefix, 3);
  for (int i : rel) CHECK(std::find(unc.begin(), unc.end(), i) != unc.end());

  // Over the full schedule the visible output already pins the minors, so no
  // observationally equivalent minor run with a failure remains.
  CHECK(assumed_release(space, *major, full[0], 3).empty());
}

TEST_CASE("programs without assume release nothing") {
  Program p = parse_src(
      "proc main() requires: x :: low ensures: emp { y := x + 1; out[low](y); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  const RelState* major = state_with(space, "x", 0);
  for (const auto& sched : complete_runs(space, *major, 3)) {
    CHECK(assumed_release(space, *major, sched, 3).empty());
    Schedule prefix(sched.begin(), sched.begin() + 1);
    CHECK(assumed_release(space, *major, prefix, 3).empty());
  }
}

TEST_CASE("anti-monotonicity: longer observations never add minors") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { out[low](x % 2); "
      "out[low](x / 2); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  for (const auto& major : space.states) {
    if (!pair_admissible(space, major, major)) continue;
    for (const auto& sched : complete_runs(space, major, 3)) {
      for (size_t n = 0; n + 1 <= sched.size(); ++n) {
        Schedule shorter(sched.begin(), sched.begin() + static_cast<long>(n));
        Schedule longer(sched.begin(), sched.begin() + static_cast<long>(n + 1));
        auto u1 = uncertainty(space, major, shorter, 3);
        auto u2 = uncertainty(space, major, longer, 3);
        for (int i : u2) CHECK(std::find(u1.begin(), u1.end(), i) != u1.end());
      }
    }
  }
}

TEST_CASE("policy exclusion on the running-average policy") {
  Program p = parse_src(
      "event In(int);"
      "policy avg6(t) { when: len(t) >= 6; release: sum(t) / len(t) :: low; }"
      "proc main() requires: emp ensures: emp { skip; }");
  StateSpace space = make_state_space(p, 0, 3, low());
  const PolicyDecl& policy = p.policies[0];

  auto mk_sched = [&](std::vector<long long> vals) {
    Schedule s;
    for (long long v : vals) s.push_back(Action::trace(EventVal{"In", {v}}));
    s.push_back(Action::tau());
    return s;
  };
  // Six events with sums 12 vs 18: averages 2 vs 3 differ, condition met.
  Schedule a = mk_sched({2, 2, 2, 2, 2, 2});
  Schedule b = mk_sched({3, 3, 3, 3, 3, 3});
  CHECK(policy_excludes(space, policy, 6, a, b));
  // Three events: the when-condition is unmet.
  Schedule c = mk_sched({1, 1, 1});
  Schedule d = mk_sched({2, 2, 2});
  CHECK_FALSE(policy_excludes(space, policy, 3, c, d));
  // Equal traces: the release formula holds trivially.
  CHECK_FALSE(policy_excludes(space, policy, 6, a, a));
}

TEST_CASE("theorem 1 passes on a verified assume-out program") {
  Program p = parse_src(
      "proc main() requires: x :: high &*& History(nil) "
      "ensures: History(nil) { assume(x :: low); out[low](x); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  auto report = check_policy_agnostic(space, 6);
  CHECK(report.status == OracleReport::Status::Pass);
  CHECK(report.states_checked == 4);
  CHECK(report.violations.empty());
}

TEST_CASE("theorem 1 catches the unverifiable direct leak") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { out[low](x); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  auto report = check_policy_agnostic(space, 4);
  REQUIRE(report.status == OracleReport::Status::Violation);
  REQUIRE(!report.violations.empty());
  // Witness: a minor with a different secret than the major.
  const Violation& v = report.violations[0];
  CHECK(v.major.store.at("x") != v.minor.store.at("x"));
}

TEST_CASE("theorem 1 passes trivially on public straight-line code") {
  Program p = parse_src(
      "proc main() requires: x :: low ensures: emp { y := x * 2; out[low](y); }");
  StateSpace space = make_state_space(p, 0, 3, low());
  auto report = check_policy_agnostic(space, 4);
  CHECK(report.status == OracleReport::Status::Pass);
}

TEST_CASE("secret-dependent branching leaks through the schedule") {
  // Branch bodies of different lengths: the attacker counts actions.
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp {"
      "  if (x > 0) { y := 1; y := 2; } else { y := 1; }"
      "}");
  StateSpace space = make_state_space(p, 0, 3, low());
  auto report = check_policy_agnostic(space, 6);
  CHECK(report.status == OracleReport::Status::Violation);
}

TEST_CASE("secret-dependent load addresses leak through the schedule") {
  Program p = parse_src(
      "proc main() requires: x :: high &*& 8 <= x &*& x <= 9 &*& 8 |-> 0 &*& "
      "9 |-> 0 ensures: emp { load y <- [x]; }");
  StateSpace space = make_state_space(p, 8, 9, low());
  auto report = check_policy_agnostic(space, 4);
  CHECK(report.status == OracleReport::Status::Violation);
}

TEST_CASE("theorem 2 on a coinciding policy and assumption") {
  Program p = parse_src(
      "event In(int);"
      "policy reveal(t) { when: true; release: sum(t) :: low; }"
      "proc main() requires: x :: high &*& History(nil) "
      "ensures: exists t: trace. History(t) {"
      "  trace(In(x));"
      "  assume(x :: low);"
      "  out[low](x);"
      "}");
  StateSpace space = make_state_space(p, 0, 2, low());
  auto report = check_policy_specific(space, p.policies[0], 6);
  CHECK(report.status == OracleReport::Status::Pass);
}

TEST_CASE("theorem 2 flags a declassification the policy never allows") {
  Program p = parse_src(
      "event In(int);"
      "policy never(t) { when: false; release: true; }"
      "proc main() requires: x :: high &*& History(nil) "
      "ensures: exists t: trace. History(t) {"
      "  trace(In(x));"
      "  assume(x :: low);"
      "  out[low](x);"
      "}");
  StateSpace space = make_state_space(p, 0, 2, low());
  auto report = check_policy_specific(space, p.policies[0], 6);
  CHECK(report.status == OracleReport::Status::Violation);
}

TEST_CASE("the empty policy excludes nothing and the permissive one everything") {
  Program p = parse_src(
      "event In(int);"
      "policy never(t) { when: false; release: true; }"
      "policy always(t) { when: true; release: false; }"
      "proc main() requires: x :: low ensures: emp { out[low](x); }");
  StateSpace space = make_state_space(p, 0, 2, low());
  const RelState* major = state_with(space, "x", 1);
  auto full = complete_runs(space, *major, 2);
  REQUIRE(full.size() == 1);
  auto none = policy_release_set(space, p.policies[0], *major, full[0], 2);
  CHECK(none.empty());
  auto all = policy_release_set(space, p.policies[1], *major, full[0], 2);
  auto unc = uncertainty(space, *major, full[0], 2);
  CHECK(all == unc);
}

TEST_CASE("budget exhaustion is reported distinctly") {
  Program p = parse_src(
      "proc main() requires: emp ensures: emp {"
      "  while (true) invariant (emp) { skip; }"
      "}");
  StateSpace space = make_state_space(p, 0, 1, low());
  auto report = check_policy_agnostic(space, 4);
  CHECK(report.status == OracleReport::Status::Budget);
  CHECK(report.budget_exceeded);
  CHECK(report.violations.empty());
}
