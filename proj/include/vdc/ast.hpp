#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "vdc/diagnostics.hpp"
#include "vdc/lattice.hpp"

namespace vdc {

enum class Sort { Int, Bool, Label, Trace, Event };

const char* sort_name(Sort s);

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class UnOp { Neg, Not };

enum class BinOp {
  Add, Sub, Mul, Div, Mod,
  Eq, Ne, Lt, Le, Gt, Ge,
  And, Or, Imp,
};

enum class ExprKind {
  IntLit,     // int_val
  BoolLit,    // int_val 0/1
  Var,        // name
  LabelLit,   // name (resolved against the lattice)
  Unary,      // un_op, args[0]
  Binary,     // bin_op, args[0..1]
  Ite,        // args[0] ? args[1] : args[2]; Bool/Int/Label/Trace result
  Nil,        // empty trace
  Snoc,       // args[0] trace, args[1] event
  Cat,        // trace concatenation
  EventApp,   // name, args = integer fields
  Len,        // args[0] trace
  Sum,        // args[0] trace
  Contains,   // args[0] trace, args[1] event
  CurrentTrace,  // `__tr`: the program's history so far (ghost)
  Attacker,      // the attacker's security level (verification-internal)
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;
  Sort sort = Sort::Int;  // assigned by the sort checker (or smart ctor)
  long long int_val = 0;
  std::string name;
  UnOp un_op = UnOp::Neg;
  BinOp bin_op = BinOp::Add;
  std::vector<ExprPtr> args;
  SourceSpan span;
};

// Smart constructors. Sorts of compound nodes are computed when the children
// already carry sorts; the parser re-runs the checker after name resolution.
namespace mk {
ExprPtr int_lit(long long v);
ExprPtr bool_lit(bool b);
ExprPtr var(const std::string& name, Sort sort = Sort::Int);
ExprPtr label(const std::string& name);
ExprPtr unary(UnOp op, ExprPtr a);
ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b);
ExprPtr ite(ExprPtr c, ExprPtr t, ExprPtr e);
ExprPtr nil();
ExprPtr snoc(ExprPtr t, ExprPtr ev);
ExprPtr cat(ExprPtr a, ExprPtr b);
ExprPtr event(const std::string& ctor, std::vector<ExprPtr> fields);
ExprPtr len(ExprPtr t);
ExprPtr sum(ExprPtr t);
ExprPtr contains(ExprPtr t, ExprPtr ev);
ExprPtr current_trace();
ExprPtr attacker();
}  // namespace mk

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
size_t expr_hash(const ExprPtr& e);
void free_vars(const ExprPtr& e, std::set<std::string>& out);
std::set<std::string> free_vars(const ExprPtr& e);

// Capture-avoiding substitution of variables by expressions.
ExprPtr subst_expr(const ExprPtr& e, const std::map<std::string, ExprPtr>& sub);

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

enum class AssertKind {
  Pure,      // expr (Bool)
  Classify,  // expr :: label_expr
  Emp,
  PointsTo,  // expr |-> expr
  Star,
  Imp,
  Exists,    // binder, binder_sort, body
  Forall,    // binder, binder_sort, body (pure only; policy desugaring)
  History,   // History(trace expr)
  PredApp,   // name(args): registered abstract predicate
};

struct Assertion;
using AssertionPtr = std::shared_ptr<const Assertion>;

struct Assertion {
  AssertKind kind;
  ExprPtr e1, e2;
  AssertionPtr a1, a2;
  std::string name;  // Exists/Forall binder or PredApp name
  Sort binder_sort = Sort::Int;
  std::vector<ExprPtr> args;
  SourceSpan span;
};

namespace mk {
AssertionPtr pure(ExprPtr e);
AssertionPtr classify(ExprPtr e, ExprPtr label);
AssertionPtr emp();
AssertionPtr points_to(ExprPtr addr, ExprPtr val);
AssertionPtr star(AssertionPtr a, AssertionPtr b);
AssertionPtr impl(AssertionPtr a, AssertionPtr b);
AssertionPtr exists(const std::string& x, Sort s, AssertionPtr body);
AssertionPtr forall(const std::string& x, Sort s, AssertionPtr body);
AssertionPtr history(ExprPtr tr);
AssertionPtr pred(const std::string& name, std::vector<ExprPtr> args);
}  // namespace mk

// `pure` iff the assertion contains no points-to, no History and no
// abstract predicate application.
bool is_pure(const AssertionPtr& a);
// `relational` iff the assertion contains a classification `::`.
bool is_relational(const AssertionPtr& a);

bool assertion_equal(const AssertionPtr& a, const AssertionPtr& b);
void free_vars(const AssertionPtr& a, std::set<std::string>& out);
std::set<std::string> free_vars(const AssertionPtr& a);
AssertionPtr subst_assertion(const AssertionPtr& a,
                             const std::map<std::string, ExprPtr>& sub);
AssertionPtr subst(const AssertionPtr& a, const std::string& x, const ExprPtr& e);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

enum class CmdKind {
  Skip,
  Assign,   // var := e1
  Load,     // load var <- [e1]
  Store,    // store [e1] <- e2
  LockCmd,    // lock name
  UnlockCmd,  // unlock name
  Seq,      // c1; c2
  Par,      // c1 || c2 with per-side pre/post annotations
  If,       // e1 cond, c1 then, c2 else
  While,    // e1 cond, inv invariant, c1 body
  Assume,   // inv = assumed formula (pure); policy_justified skips the triple
  Output,   // out[e1](e2)
  TraceEmit,  // trace(e1)
  AssertCmd,  // assert(inv)
  SplitCmd,   // split(e1)
};

struct Command;
using CommandPtr = std::shared_ptr<const Command>;

struct Command {
  CmdKind kind;
  std::string var;  // Assign/Load target, Lock/Unlock name
  ExprPtr e1, e2;
  CommandPtr c1, c2;
  AssertionPtr inv;  // While invariant, Assume/Assert body
  AssertionPtr pre1, post1, pre2, post2;  // Par annotations
  bool policy_justified = false;          // Assume inserted by audit inlining
  SourceSpan span;
};

namespace mk {
CommandPtr skip();
CommandPtr assign(const std::string& x, ExprPtr e);
CommandPtr load(const std::string& x, ExprPtr addr);
CommandPtr store(ExprPtr addr, ExprPtr val);
CommandPtr lock(const std::string& l);
CommandPtr unlock(const std::string& l);
CommandPtr seq(CommandPtr a, CommandPtr b);
CommandPtr par(CommandPtr a, CommandPtr b, AssertionPtr pre1, AssertionPtr post1,
               AssertionPtr pre2, AssertionPtr post2);
CommandPtr if_(ExprPtr cond, CommandPtr t, CommandPtr e);
CommandPtr while_(ExprPtr cond, AssertionPtr inv, CommandPtr body);
CommandPtr assume(AssertionPtr rho, bool policy_justified = false);
CommandPtr output(ExprPtr level, ExprPtr value);
CommandPtr trace_emit(ExprPtr ev);
CommandPtr assert_(AssertionPtr a);
CommandPtr split(ExprPtr cond);
}  // namespace mk

bool command_equal(const CommandPtr& a, const CommandPtr& b);
// Program variables assigned by the command (assign/load targets).
std::set<std::string> modified_vars(const CommandPtr& c);
// All variables read or written, including annotation formulas.
std::set<std::string> command_vars(const CommandPtr& c);

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

struct EventDecl {
  std::string name;
  int arity = 0;
  SourceSpan span;
};

struct LockDecl {
  std::string name;
  AssertionPtr invariant;
  SourceSpan span;
};

struct PolicyDecl {
  std::string name;
  std::string trace_var;
  std::vector<std::string> params;  // auxiliary parameters (Int sorted)
  ExprPtr when;                     // pure, non-relational, over trace_var+params
  AssertionPtr release;             // pure relational, over trace_var+params
  SourceSpan span;
};

struct ProcDecl {
  std::string name;
  AssertionPtr requires_;
  AssertionPtr ensures_;
  CommandPtr body;
  SourceSpan span;
};

struct Program {
  Lattice lattice;
  std::vector<EventDecl> events;
  std::vector<LockDecl> locks;
  std::vector<PolicyDecl> policies;
  std::vector<ProcDecl> procs;

  const EventDecl* find_event(const std::string& name) const;
  const LockDecl* find_lock(const std::string& name) const;
  const PolicyDecl* find_policy(const std::string& name) const;
  const ProcDecl* find_proc(const std::string& name) const;

  // Conjunction of the invariants of the locks in `ls`.
  AssertionPtr invs(const std::set<std::string>& ls) const;
};

// ---------------------------------------------------------------------------
// Sort checking
// ---------------------------------------------------------------------------

// Sort-checks an expression in place (fills the `sort` fields) against a
// variable environment. Throws DefinitionError on failure. Variables absent
// from `env` default to Int and are added.
class SortChecker {
 public:
  SortChecker(const Program& program) : program_(program) {}

  Sort check(const ExprPtr& e, std::map<std::string, Sort>& env) const;
  void check(const AssertionPtr& a, std::map<std::string, Sort>& env) const;
  void check_command(const CommandPtr& c, std::map<std::string, Sort>& env) const;
  // Whole-program check: resolves every procedure, lock invariant and policy.
  void check_program() const;

 private:
  const Program& program_;
};

}  // namespace vdc
