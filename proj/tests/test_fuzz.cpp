// Whole-pipeline soundness fuzzing: every program the symbolic verifier
// accepts must satisfy the policy-agnostic guarantee on a finite box, and
// every pair that passes the audit must satisfy the policy-specific one.

#include <random>
#include <sstream>

#include "doctest.h"
#include "vdc/oracle.hpp"
#include "vdc/parser.hpp"
#include "vdc/symer.hpp"

using namespace vdc;

namespace {

struct Gen {
  std::mt19937 rng;
  std::uniform_int_distribution<int> small{0, 2};
  int stmts_left = 0;

  explicit Gen(unsigned seed) : rng(seed) {}

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  std::string expr(int depth) {
    if (depth == 0 || pick(3) == 0) {
      switch (pick(3)) {
        case 0: return "x";
        case 1: return "y";
        default: return std::to_string(small(rng));
      }
    }
    const char* ops[] = {"+", "-", "*"};
    return "(" + expr(depth - 1) + " " + ops[pick(3)] + " " + expr(depth - 1) + ")";
  }

  std::string guard() {
    const char* cmps[] = {"==", "!=", "<", "<=", ">"};
    return expr(1) + " " + cmps[pick(5)] + " " + expr(1);
  }

  std::string stmt(int depth) {
    if (stmts_left <= 0) return "skip;\n";
    --stmts_left;
    switch (pick(depth > 0 ? 7 : 5)) {
      case 0: {
        const char* targets[] = {"x", "y", "z"};
        return std::string(targets[pick(3)]) + " := " + expr(2) + ";\n";
      }
      case 1: {
        const char* channels[] = {"low", "alice", "bob", "high"};
        return "out[" + std::string(channels[pick(4)]) + "](" + expr(1) + ");\n";
      }
      case 2:
        return "assume(" + expr(1) + " :: low);\n";
      case 3:
        return "trace(Ev(" + expr(1) + "));\n";
      case 4:
        return "skip;\n";
      case 5:
        return "if (" + guard() + ") {\n" + stmt(depth - 1) + "} else {\n" +
               stmt(depth - 1) + "}\n";
      default:
        return "split(" + guard() + ");\n" + stmt(depth - 1);
    }
  }

  // A lock-protected critical section over the shared cell [16].
  std::string critical_section() {
    std::ostringstream os;
    os << "lock m;\n";
    os << "load c <- [16];\n";
    if (pick(2)) os << "store [16] <- c + " << small(rng) << ";\n";
    if (pick(2)) os << "out[" << (pick(2) ? "low" : "high") << "](c);\n";
    os << "unlock m;\n";
    return os.str();
  }

  std::string program() {
    stmts_left = 4;
    std::ostringstream os;
    os << "lattice { low, alice, bob, high; order: low < alice, low < bob, "
          "alice < high, bob < high }\n";
    os << "event Ev(int);\n";
    os << "lock m invariant (exists c. 16 |-> c &*& c :: low);\n";
    os << "policy open(t) { when: true; release: true; }\n";
    os << "policy silent(t) { when: len(t) >= 1; release: sum(t) :: low; }\n";
    const char* classes[] = {"low", "alice", "bob", "high"};
    os << "proc main()\n";
    os << "  requires: x :: " << classes[pick(4)] << " &*& y :: "
       << classes[pick(4)] << " &*& History(nil)\n";
    os << "  ensures: exists t: trace. History(t)\n";
    os << "{\n";
    int n = 1 + pick(3);
    for (int i = 0; i < n; ++i) {
      if (pick(4) == 0)
        os << critical_section();
      else
        os << stmt(2);
    }
    os << "}\n";
    return os.str();
  }
};

}  // namespace

TEST_CASE("fuzz: accepted programs satisfy the policy-agnostic guarantee") {
  int accepted = 0, refuted = 0, audited = 0;
  for (unsigned seed = 0; seed < 250; ++seed) {
    Gen gen(seed);
    std::string src = gen.program();
    CAPTURE(src);
    auto parsed = parse_program(src);
    REQUIRE(parsed.ok());  // the generator only emits well-formed programs
    Program p = *parsed.program;

    VerifyOptions opt;
    SymbolicVerifier verifier(p, opt);
    VerdictBundle bundle = verifier.verify();
    if (bundle.status != Verdict::Verified) {
      ++refuted;
      continue;
    }
    ++accepted;

    bool broken = false;
    for (const char* att : {"low", "alice"}) {
      StateSpace space = make_state_space(p, 0, 2, p.lattice.level(att));
      OracleReport r = check_policy_agnostic(space, 10);
      CHECK(r.violations.empty());
      broken |= !r.violations.empty();
    }
    if (broken) break;
    StateSpace space = make_state_space(p, 0, 2, p.lattice.level("low"));

    // Audited pairs must satisfy the policy-specific guarantee too.
    for (const auto& policy : p.policies) {
      if (verifier.audit(bundle.triples, policy).status != Verdict::Verified)
        continue;
      ++audited;
      OracleReport s = check_policy_specific(space, policy, 10);
      CHECK(s.violations.empty());
      if (!s.violations.empty()) {
        CAPTURE(policy.name);
        break;
      }
    }
  }
  // The generator must exercise both outcomes to mean anything.
  CHECK(accepted > 30);
  CHECK(refuted > 30);
  CHECK(audited > 10);
  MESSAGE("accepted=", accepted, " refuted=", refuted, " audited pairs=", audited);
}
