#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdc/ast.hpp"
#include "vdc/entail.hpp"

namespace vdc {

enum class VcKind {
  BranchLow,
  LoadAddressLow,
  StoreAddressLow,
  OutputValue,
  OutputLevel,
  Entailment,
  InvariantEstablish,
  InvariantRestore,
  ParSplit,
  Postcondition,
  AuditWhen,
  AuditRelease,
};

const char* vc_kind_name(VcKind k);

struct VerificationCondition {
  int id = 0;
  SourceSpan span;
  VcKind kind = VcKind::Entailment;
  std::vector<AssertionPtr> hypothesis;  // pure relational
  AssertionPtr goal;                     // pure relational
  VcStatus status = VcStatus::Unknown;
  std::optional<Countermodel> countermodel;
  std::string note;  // extra context (procedure, failure reason)
};

struct AuditTriple {
  std::vector<AssertionPtr> context;  // pure residue of the path condition
  ExprPtr trace;                      // trace expression of the History chunk
  AssertionPtr rho;                   // the assumed formula
  SourceSpan span;
  std::string proc;
};

// Spatial ownership tracked during symbolic execution.
struct Chunk {
  enum class Kind { PointsTo, History, Pred } kind = Kind::PointsTo;
  ExprPtr addr, val;            // PointsTo
  ExprPtr trace;                // History
  std::string name;             // Pred
  std::vector<ExprPtr> args;
};

struct SymState {
  std::vector<AssertionPtr> path;      // pure relational conjuncts
  std::vector<Chunk> chunks;
  std::map<std::string, ExprPtr> env;  // program variable -> symbolic value
  std::vector<std::string> held;       // locks whose invariant is open
};

enum class Verdict { Verified, Refuted, Unknown };

const char* verdict_name(Verdict v);

struct VerdictBundle {
  Verdict status = Verdict::Unknown;
  std::vector<VerificationCondition> vcs;
  std::vector<AuditTriple> triples;
  std::vector<std::string> errors;  // annotation / chunk-matching failures
};

struct AuditObligation {
  const AuditTriple* triple = nullptr;
  VerificationCondition when;
  VerificationCondition release;
};

struct AuditReport {
  Verdict status = Verdict::Unknown;
  std::vector<AuditObligation> obligations;
  std::vector<std::string> errors;
};

struct VerifyOptions {
  std::optional<Level> attacker;  // fixed level or symbolic (all levels)
  BackendConfig backend;
};

class SymbolicVerifier {
 public:
  SymbolicVerifier(const Program& program, VerifyOptions options);

  // Runs every procedure from its precondition and discharges all emitted
  // verification conditions.
  VerdictBundle verify();

  // Policy audit of collected triples: context ==> when-condition,
  // and context * release-formula ==> assumed formula.
  AuditReport audit(const std::vector<AuditTriple>& triples, const PolicyDecl& policy);

  // Symbolically executes one command from the given state; exposed for unit
  // tests. Emitted VCs/triples accumulate in the bundle.
  std::vector<SymState> exec_symbolic(const SymState& st, const CommandPtr& c,
                                      VerdictBundle& out);

  // Rewrites each assume(rho) into the three-line audit check against the
  // policy, using __tr for the current history.
  static Program inline_audit(const Program& p, const PolicyDecl& policy);

  const std::map<std::string, Sort>& symbol_sorts() const { return sorts_; }

 private:
  friend struct ConsumeMatcher;

  std::string fresh(const std::string& base, Sort sort);
  ExprPtr sym_eval(const SymState& st, const ExprPtr& e);
  AssertionPtr sym_eval_assertion(const SymState& st, const AssertionPtr& a);

  // Adds the assertion's content to the state: pure conjuncts to the path,
  // spatial atoms as chunks, existentials skolemized.
  void produce(SymState& st, const AssertionPtr& a);

  // Consumes the assertion from the state (chunk matching with unification);
  // pure residue becomes a single VC of the given kind. Returns false when a
  // required chunk cannot be matched (a hard verification error).
  bool consume(SymState& st, const AssertionPtr& a, VcKind kind, SourceSpan span,
               VerdictBundle& out, const std::string& note);

  void emit_vc(VerdictBundle& out, VcKind kind, SourceSpan span,
               std::vector<AssertionPtr> hyp, AssertionPtr goal,
               const std::string& note);
  ExprPtr attacker_term() const;
  const ExprPtr& history_expr(const SymState& st, SourceSpan span) const;

  std::vector<AssertionPtr> pure_path(const SymState& st) const;

  const Program& program_;
  VerifyOptions options_;
  std::map<std::string, Sort> sorts_;
  int counter_ = 0;
  std::string current_proc_;
};

// The two policy formulas with the trace variable substituted and auxiliary
// parameters desugared per their quantifier reading.
AssertionPtr policy_when(const PolicyDecl& policy, const ExprPtr& trace);
AssertionPtr policy_release(const PolicyDecl& policy, const ExprPtr& trace);

}  // namespace vdc
