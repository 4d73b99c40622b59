#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vdc/parser.hpp"
#include "vdc/symer.hpp"

using namespace vdc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Program load(const std::string& name) {
  auto r = parse_program(read_file(std::string(VDC_CORPUS_DIR) + "/" + name));
  if (!r.ok())
    for (const auto& d : r.diagnostics) MESSAGE(d.str());
  REQUIRE(r.ok());
  return *r.program;
}

Program parse_src(const std::string& src) {
  auto r = parse_program(src);
  if (!r.ok())
    for (const auto& d : r.diagnostics) MESSAGE(d.str());
  REQUIRE(r.ok());
  return *r.program;
}

VerdictBundle verify_program(const Program& p,
                             std::optional<std::string> attacker = std::nullopt) {
  VerifyOptions opt;
  if (attacker) opt.attacker = p.lattice.level(*attacker);
  SymbolicVerifier v(p, opt);
  return v.verify();
}

const VerificationCondition* find_invalid(const VerdictBundle& b) {
  for (const auto& vc : b.vcs)
    if (vc.status == VcStatus::Invalid) return &vc;
  return nullptr;
}

bool has_invalid_kind(const VerdictBundle& b, VcKind k) {
  for (const auto& vc : b.vcs)
    if (vc.status == VcStatus::Invalid && vc.kind == k) return true;
  return false;
}

}  // namespace

TEST_CASE("assignment transforms the path condition by substitution") {
  Program p = parse_src(
      "proc main() requires: y == x + 1 ensures: emp { x := 0; assert(y == x + 1); }");
  // After x := 0 the asserted formula speaks about the new x; the proof
  // context still knows y = old(x) + 1, so the assert must fail unless the
  // old value was 0... refuted in general.
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);

  Program q = parse_src(
      "proc main() requires: y == x + 1 ensures: emp { z := y; x := y; "
      "assert(x == z); }");
  CHECK(verify_program(q).status == Verdict::Verified);
}

TEST_CASE("the running-average program verifies with one audit triple") {
  Program p = load("avg.vdc");
  auto b = verify_program(p);
  for (const auto& e : b.errors) MESSAGE(e);
  if (auto* vc = find_invalid(b))
    MESSAGE(vc_kind_name(vc->kind), ": ", format_assertion(vc->goal), " @ ",
            vc->note);
  CHECK(b.status == Verdict::Verified);
  REQUIRE(b.triples.size() == 1);

  const AuditTriple& t = b.triples[0];
  CHECK(is_pure(t.rho));
  CHECK(is_relational(t.rho));
  CHECK(t.trace != nullptr);

  // The recorded context carries the lock invariant equalities syntactically.
  bool has_count_eq = false, has_sum_eq = false, has_avg_def = false;
  for (const auto& a : t.context) {
    if (a->kind != AssertKind::Pure) continue;
    const ExprPtr& e = a->e1;
    if (e->kind != ExprKind::Binary || e->bin_op != BinOp::Eq) continue;
    if (e->args[1]->kind == ExprKind::Len) has_count_eq = true;
    if (e->args[1]->kind == ExprKind::Sum) has_sum_eq = true;
    if (e->args[1]->kind == ExprKind::Binary && e->args[1]->bin_op == BinOp::Div)
      has_avg_def = true;
  }
  CHECK(has_count_eq);
  CHECK(has_sum_eq);
  CHECK(has_avg_def);
}

TEST_CASE("avg audit triple entails the policy facts") {
  Program p = load("avg.vdc");
  VerifyOptions opt;
  SymbolicVerifier v(p, opt);
  auto b = v.verify();
  REQUIRE(b.triples.size() == 1);
  auto report = v.audit(b.triples, *p.find_policy("avg6"));
  CHECK(report.status == Verdict::Verified);
  REQUIRE(report.obligations.size() == 1);
  CHECK(report.obligations[0].when.status == VcStatus::Valid);
  CHECK(report.obligations[0].release.status == VcStatus::Valid);
}

TEST_CASE("audit against a stricter policy fails at audit-when") {
  Program p = load("avg.vdc");
  PolicyDecl strict = *p.find_policy("avg6");
  // Raise the threshold to 7: the context only knows len(t) >= 6.
  strict.when = mk::binary(BinOp::Ge, mk::len(mk::var("t", Sort::Trace)),
                           mk::int_lit(7));
  VerifyOptions opt;
  SymbolicVerifier v(p, opt);
  auto b = v.verify();
  REQUIRE(b.triples.size() == 1);
  auto report = v.audit(b.triples, strict);
  CHECK(report.status == Verdict::Refuted);
  CHECK(report.obligations[0].when.status == VcStatus::Invalid);
  REQUIRE(report.obligations[0].when.countermodel.has_value());
  CHECK(report.obligations[0].release.status == VcStatus::Valid);
}

TEST_CASE("branching on a secret is refuted at branch-low") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { if (x > 0) { skip; } }");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::BranchLow));
}

TEST_CASE("loading through a secret address is refuted at load-address-low") {
  Program p = parse_src(
      "proc main() requires: x :: high &*& x |-> v ensures: x |-> v "
      "{ load y <- [x]; }");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::LoadAddressLow));
  CHECK_FALSE(has_invalid_kind(b, VcKind::Postcondition));
}

TEST_CASE("output of a secret is refuted at output-value") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { out[low](x); }");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::OutputValue));
  CHECK_FALSE(has_invalid_kind(b, VcKind::OutputLevel));
}

TEST_CASE("assume makes the output provable and leaves a triple") {
  Program p = parse_src(
      "proc main() requires: x :: high &*& History(nil) "
      "ensures: History(nil) { assume(x :: low); out[low](x); }");
  VerifyOptions opt;
  SymbolicVerifier v(p, opt);
  auto b = v.verify();
  CHECK(b.status == Verdict::Verified);
  REQUIRE(b.triples.size() == 1);
}

TEST_CASE("assume without History is a definition error") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp { assume(x :: low); }");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  REQUIRE(!b.errors.empty());
  CHECK(b.errors[0].find("History") != std::string::npos);
}

TEST_CASE("memory access without a chunk is memory-unproven") {
  Program p = parse_src(
      "proc main() requires: emp ensures: emp { load y <- [8]; }");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  const VerificationCondition* vc = find_invalid(b);
  REQUIRE(vc != nullptr);
  CHECK(vc->note.find("memory unproven") != std::string::npos);
}

TEST_CASE("stores update the chunk value") {
  Program p = parse_src(
      "proc main() requires: 8 |-> 0 ensures: 8 |-> 7 { store [8] <- 7; }");
  CHECK(verify_program(p).status == Verdict::Verified);
  Program q = parse_src(
      "proc main() requires: 8 |-> 0 ensures: 8 |-> 9 { store [8] <- 7; }");
  CHECK(verify_program(q).status == Verdict::Refuted);
}

TEST_CASE("conditional label example verifies") {
  Program p = parse_src(
      "proc main() requires: d :: low &*& x :: (d != 0 ? high : low) "
      "ensures: emp { if (d == 0) { out[low](x); } }");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Verified);
}

TEST_CASE("while loops need their invariant to hold inductively") {
  Program p = parse_src(
      "proc main() requires: n :: low ensures: emp {"
      "  j := 0;"
      "  while (j < n) invariant (j :: low &*& n :: low) { j := j + 1; }"
      "}");
  CHECK(verify_program(p).status == Verdict::Verified);

  // A secret step amount breaks the invariant restoration.
  Program q = parse_src(
      "proc main() requires: n :: low &*& k :: high ensures: emp {"
      "  j := 0;"
      "  while (j < n) invariant (j :: low &*& n :: low) { j := j + k; }"
      "}");
  auto b = verify_program(q);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::InvariantRestore));
}

TEST_CASE("loop invariants must be established on entry") {
  Program p = parse_src(
      "proc main() requires: x :: high ensures: emp {"
      "  j := x;"
      "  while (j > 0) invariant (j :: low) { j := j - 1; }"
      "}");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::InvariantEstablish));
}

TEST_CASE("parallel composition checks the variable side condition") {
  Program p = parse_src(
      "proc main() requires: emp ensures: emp {"
      "  par { requires: emp; ensures: emp; x := 1; }"
      "      { requires: emp; ensures: emp; x := 2; }"
      "}");
  auto b = verify_program(p);
  CHECK(b.status == Verdict::Refuted);
  REQUIRE(!b.errors.empty());
  CHECK(b.errors[0].find("race") != std::string::npos);
}

TEST_CASE("parallel composition splits and rejoins footprints") {
  Program p = parse_src(
      "proc main() requires: 8 |-> 1 &*& 9 |-> 2 ensures: 8 |-> 3 &*& 9 |-> 4 {"
      "  par { requires: 8 |-> 1; ensures: 8 |-> 3; store [8] <- 3; }"
      "      { requires: 9 |-> 2; ensures: 9 |-> 4; store [9] <- 4; }"
      "}");
  CHECK(verify_program(p).status == Verdict::Verified);

  // A branch that touches the other branch's cell fails its footprint.
  Program q = parse_src(
      "proc main() requires: 8 |-> 1 &*& 9 |-> 2 ensures: 8 |-> 3 &*& 9 |-> 2 {"
      "  par { requires: 8 |-> 1; ensures: 8 |-> 3; store [9] <- 5; store [8] <- 3; }"
      "      { requires: 9 |-> 2; ensures: 9 |-> 2; skip; }"
      "}");
  CHECK(verify_program(q).status == Verdict::Refuted);
}

TEST_CASE("lock invariants transfer ownership") {
  Program p = parse_src(
      "lock m invariant (exists c. 16 |-> c &*& c :: low);"
      "proc main() requires: emp ensures: emp {"
      "  lock m; load c <- [16]; store [16] <- c + 1; unlock m;"
      "}");
  CHECK(verify_program(p).status == Verdict::Verified);

  // Writing a secret into the protected cell cannot restore the invariant.
  Program q = parse_src(
      "lock m invariant (exists c. 16 |-> c &*& c :: low);"
      "proc main() requires: x :: high ensures: emp {"
      "  lock m; store [16] <- x; unlock m;"
      "}");
  auto b = verify_program(q);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::InvariantRestore));
}

TEST_CASE("split forks the proof on a public case distinction") {
  Program p = parse_src(
      "proc main() requires: x :: low ensures: emp {"
      "  split(x > 0);"
      "  out[low](x > 0 ? 1 : 0);"
      "}");
  CHECK(verify_program(p).status == Verdict::Verified);

  Program q = parse_src(
      "proc main() requires: x :: high ensures: emp { split(x > 0); }");
  auto b = verify_program(q);
  CHECK(b.status == Verdict::Refuted);
  CHECK(has_invalid_kind(b, VcKind::BranchLow));
}

TEST_CASE("frame: an unused cell never changes verdicts") {
  const char* base =
      "proc main() requires: x :: high %s ensures: emp %s "
      "{ if (x > 0) { skip; } }";
  char with_frame[256], without_frame[256];
  snprintf(without_frame, sizeof without_frame, base, "", "");
  snprintf(with_frame, sizeof with_frame, base, "&*& 40 |-> 5", "&*& 40 |-> 5");
  auto b1 = verify_program(parse_src(without_frame));
  auto b2 = verify_program(parse_src(with_frame));
  CHECK(b1.status == b2.status);
  REQUIRE(b1.vcs.size() <= b2.vcs.size());
  // Matching kinds and statuses for the shared part of the proof.
  size_t j = 0;
  for (size_t i = 0; i < b1.vcs.size() && j < b2.vcs.size(); ++i, ++j) {
    while (j < b2.vcs.size() && b2.vcs[j].kind != b1.vcs[i].kind) ++j;
    REQUIRE(j < b2.vcs.size());
    CHECK(b1.vcs[i].status == b2.vcs[j].status);
  }
}

TEST_CASE("every accepted assume contributes exactly one triple") {
  Program q = parse_src(
      "event In(int);"
      "proc main() requires: x :: high &*& y :: high &*& History(nil) "
      "ensures: exists t: trace. History(t) {"
      "  assume(x :: low);"
      "  trace(In(x));"
      "  assume(y :: low);"
      "  out[low](x + y);"
      "}");
  VerifyOptions opt;
  SymbolicVerifier v(q, opt);
  auto b = v.verify();
  CHECK(b.status == Verdict::Verified);
  CHECK(b.triples.size() == 2);
  // The second triple's history reflects the emitted event.
  CHECK(b.triples[1].trace->kind == ExprKind::Snoc);
}

TEST_CASE("inline audit is the identity on assume-free programs") {
  Program p = parse_src(
      "policy open(t) { when: true; release: true; }"
      "proc main() requires: x :: low ensures: emp { out[low](x); }");
  Program q = SymbolicVerifier::inline_audit(p, *p.find_policy("open"));
  CHECK(command_equal(p.procs[0].body, q.procs[0].body));
}

TEST_CASE("inline audit mirrors the audit obligations") {
  Program p = load("avg.vdc");
  const PolicyDecl& policy = *p.find_policy("avg6");
  Program inlined = SymbolicVerifier::inline_audit(p, policy);

  // The inlined form verifies and leaves no residual triples.
  VerifyOptions opt;
  SymbolicVerifier v(inlined, opt);
  auto b = v.verify();
  for (const auto& e : b.errors) MESSAGE(e);
  if (auto* vc = find_invalid(b))
    MESSAGE(vc_kind_name(vc->kind), ": ", format_assertion(vc->goal), " @ ", vc->note);
  CHECK(b.status == Verdict::Verified);
  CHECK(b.triples.empty());

  // The inlined program still round-trips through the printer.
  auto r = parse_program(format_program(inlined));
  REQUIRE(r.ok());
}

TEST_CASE("attacker pinning changes the verdict where levels differ") {
  // Outputs on the alice channel verify for an alice attacker but the branch
  // on bob-classified data must still fail.
  Program p = parse_src(
      "lattice { low, alice, bob, high; order: low < alice, low < bob, "
      "alice < high, bob < high }"
      "proc main() requires: x :: alice ensures: emp { out[alice](x); }");
  CHECK(verify_program(p).status == Verdict::Verified);
  CHECK(verify_program(p, "alice").status == Verdict::Verified);

  Program q = parse_src(
      "lattice { low, alice, bob, high; order: low < alice, low < bob, "
      "alice < high, bob < high }"
      "proc main() requires: x :: bob ensures: emp { if (x > 0) { skip; } }");
  CHECK(verify_program(q, "alice").status == Verdict::Refuted);
  CHECK(verify_program(q, "high").status == Verdict::Verified);
}

TEST_CASE("policies with several parameters desugar with nested quantifiers") {
  Program p = parse_src(
      "event Pair(int, int);"
      "policy keyed(t, k, w) { when: contains(t, Pair(k, w)); release: w :: low; }"
      "proc main() requires: k0 :: low &*& x :: high &*& History(nil) "
      "ensures: exists t: trace. History(t) {"
      "  trace(Pair(k0, x));"
      "  assume(x :: low);"
      "  out[low](x);"
      "}");
  VerifyOptions opt;
  SymbolicVerifier v(p, opt);
  auto b = v.verify();
  REQUIRE(b.status == Verdict::Verified);
  REQUIRE(b.triples.size() == 1);
  auto report = v.audit(b.triples, p.policies[0]);
  CHECK(report.status == Verdict::Verified);

  // The desugared release formula round-trips through the printer.
  Program inlined = SymbolicVerifier::inline_audit(p, p.policies[0]);
  auto reparsed = parse_program(format_program(inlined));
  REQUIRE(reparsed.ok());
  VerifyOptions opt2;
  SymbolicVerifier v2(*reparsed.program, opt2);
  CHECK(v2.verify().status == Verdict::Verified);
}
