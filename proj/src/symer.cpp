#include "vdc/symer.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "vdc/parser.hpp"

namespace vdc {

const char* vc_kind_name(VcKind k) {
  switch (k) {
    case VcKind::BranchLow: return "branch-low";
    case VcKind::LoadAddressLow: return "load-address-low";
    case VcKind::StoreAddressLow: return "store-address-low";
    case VcKind::OutputValue: return "output-value";
    case VcKind::OutputLevel: return "output-level";
    case VcKind::Entailment: return "entailment";
    case VcKind::InvariantEstablish: return "invariant-establish";
    case VcKind::InvariantRestore: return "invariant-restore";
    case VcKind::ParSplit: return "par-split";
    case VcKind::Postcondition: return "postcondition";
    case VcKind::AuditWhen: return "audit-when";
    case VcKind::AuditRelease: return "audit-release";
  }
  return "?";
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Verified: return "verified";
    case Verdict::Refuted: return "refuted";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

namespace {

// Hard verification failure (missing chunks, missing annotations); aborts the
// current procedure and refutes the program.
class VerifyError : public std::runtime_error {
 public:
  VerifyError(std::string msg, SourceSpan span)
      : std::runtime_error(std::move(msg)), span(span) {}
  SourceSpan span;
};

bool is_hole(const ExprPtr& e) {
  return e->kind == ExprKind::Var && e->name.rfind("?", 0) == 0;
}

// One-way syntactic unification: holes occur only in the pattern.
bool unify_expr(const ExprPtr& pat, const ExprPtr& tgt,
                std::map<std::string, ExprPtr>& unifier) {
  if (is_hole(pat)) {
    auto it = unifier.find(pat->name);
    if (it != unifier.end()) return expr_equal(it->second, tgt);
    unifier[pat->name] = tgt;
    return true;
  }
  if (pat->kind != tgt->kind) return false;
  switch (pat->kind) {
    case ExprKind::IntLit:
    case ExprKind::BoolLit:
      if (pat->int_val != tgt->int_val) return false;
      break;
    case ExprKind::Var:
    case ExprKind::LabelLit:
    case ExprKind::EventApp:
      if (pat->name != tgt->name) return false;
      break;
    case ExprKind::Unary:
      if (pat->un_op != tgt->un_op) return false;
      break;
    case ExprKind::Binary:
      if (pat->bin_op != tgt->bin_op) return false;
      break;
    default:
      break;
  }
  if (pat->args.size() != tgt->args.size()) return false;
  for (size_t i = 0; i < pat->args.size(); ++i)
    if (!unify_expr(pat->args[i], tgt->args[i], unifier)) return false;
  return true;
}

ExprPtr apply_unifier(const ExprPtr& e, const std::map<std::string, ExprPtr>& u) {
  return subst_expr(e, u);
}

struct FlatAtom {
  AssertionPtr a;
};

// Flattens star/exists into a list of atoms, renaming binders to holes.
void flatten(const AssertionPtr& a, std::vector<FlatAtom>& out,
             std::map<std::string, Sort>& hole_sorts, int& hole_counter) {
  switch (a->kind) {
    case AssertKind::Star:
      flatten(a->a1, out, hole_sorts, hole_counter);
      flatten(a->a2, out, hole_sorts, hole_counter);
      break;
    case AssertKind::Exists: {
      std::string hole = "?" + a->name + "!" + std::to_string(hole_counter++);
      hole_sorts[hole] = a->binder_sort;
      flatten(subst(a->a1, a->name, mk::var(hole, a->binder_sort)), out, hole_sorts,
              hole_counter);
      break;
    }
    case AssertKind::Emp:
      break;
    default:
      out.push_back({a});
      break;
  }
}

}  // namespace

AssertionPtr policy_when(const PolicyDecl& policy, const ExprPtr& trace) {
  AssertionPtr body =
      mk::pure(subst_expr(policy.when, {{policy.trace_var, trace}}));
  for (auto it = policy.params.rbegin(); it != policy.params.rend(); ++it)
    body = mk::exists(*it, Sort::Int, body);
  return body;
}

AssertionPtr policy_release(const PolicyDecl& policy, const ExprPtr& trace) {
  std::map<std::string, ExprPtr> sub{{policy.trace_var, trace}};
  AssertionPtr rel = subst_assertion(policy.release, sub);
  if (policy.params.empty()) return rel;
  AssertionPtr body =
      mk::impl(mk::pure(subst_expr(policy.when, sub)), rel);
  for (auto it = policy.params.rbegin(); it != policy.params.rend(); ++it)
    body = mk::forall(*it, Sort::Int, body);
  return body;
}

SymbolicVerifier::SymbolicVerifier(const Program& program, VerifyOptions options)
    : program_(program), options_(std::move(options)) {
  options_.backend.lattice = &program_.lattice;
  options_.backend.events = &program_.events;
}

std::string SymbolicVerifier::fresh(const std::string& base, Sort sort) {
  std::string name = base + "!" + std::to_string(++counter_);
  sorts_[name] = sort;
  return name;
}

ExprPtr SymbolicVerifier::attacker_term() const {
  if (options_.attacker) return mk::label(program_.lattice.name(*options_.attacker));
  return mk::attacker();
}

namespace {

// Guards may be integers; the semantics casts nonzero to true.
ExprPtr as_formula(const ExprPtr& g) {
  if (g->sort == Sort::Bool) return g;
  return mk::binary(BinOp::Ne, g, mk::int_lit(0));
}

}  // namespace

const ExprPtr& SymbolicVerifier::history_expr(const SymState& st,
                                              SourceSpan span) const {
  for (const auto& c : st.chunks)
    if (c.kind == Chunk::Kind::History) return c.trace;
  throw VerifyError("no History is held at this point", span);
}

ExprPtr SymbolicVerifier::sym_eval(const SymState& st, const ExprPtr& e) {
  if (!e) return e;
  if (e->kind == ExprKind::Var) {
    auto it = st.env.find(e->name);
    return it == st.env.end() ? e : it->second;
  }
  if (e->kind == ExprKind::CurrentTrace) return history_expr(st, e->span);
  bool changed = false;
  std::vector<ExprPtr> args;
  for (const auto& a : e->args) {
    auto a2 = sym_eval(st, a);
    changed |= (a2 != a);
    args.push_back(a2);
  }
  if (!changed) return e;
  auto n = std::make_shared<Expr>(*e);
  n->args = std::move(args);
  return n;
}

AssertionPtr SymbolicVerifier::sym_eval_assertion(const SymState& st,
                                                  const AssertionPtr& a) {
  if (!a) return a;
  if (a->kind == AssertKind::Exists || a->kind == AssertKind::Forall) {
    // Binders shadow the environment; program variables never collide with
    // generated symbol names.
    SymState inner = st;
    inner.env.erase(a->name);
    auto n = std::make_shared<Assertion>(*a);
    n->a1 = sym_eval_assertion(inner, a->a1);
    return n;
  }
  auto n = std::make_shared<Assertion>(*a);
  n->e1 = sym_eval(st, a->e1);
  n->e2 = sym_eval(st, a->e2);
  n->a1 = sym_eval_assertion(st, a->a1);
  n->a2 = sym_eval_assertion(st, a->a2);
  for (auto& e : n->args) e = sym_eval(st, e);
  return n;
}

std::vector<AssertionPtr> SymbolicVerifier::pure_path(const SymState& st) const {
  return st.path;
}

void SymbolicVerifier::emit_vc(VerdictBundle& out, VcKind kind, SourceSpan span,
                               std::vector<AssertionPtr> hyp, AssertionPtr goal,
                               const std::string& note) {
  VerificationCondition vc;
  vc.id = static_cast<int>(out.vcs.size());
  vc.kind = kind;
  vc.span = span;
  vc.hypothesis = std::move(hyp);
  vc.goal = std::move(goal);
  vc.note = note.empty() ? current_proc_ : current_proc_ + ": " + note;
  out.vcs.push_back(std::move(vc));
}

void SymbolicVerifier::produce(SymState& st, const AssertionPtr& a) {
  switch (a->kind) {
    case AssertKind::Emp:
      return;
    case AssertKind::Star:
      produce(st, a->a1);
      produce(st, a->a2);
      return;
    case AssertKind::Exists: {
      std::string name = fresh(a->name, a->binder_sort);
      produce(st, subst(a->a1, a->name, mk::var(name, a->binder_sort)));
      return;
    }
    case AssertKind::PointsTo: {
      Chunk c;
      c.kind = Chunk::Kind::PointsTo;
      c.addr = sym_eval(st, a->e1);
      c.val = sym_eval(st, a->e2);
      st.chunks.push_back(std::move(c));
      return;
    }
    case AssertKind::History: {
      for (const auto& c : st.chunks)
        if (c.kind == Chunk::Kind::History)
          throw VerifyError("History is already held; at most one history chunk",
                            a->span);
      Chunk c;
      c.kind = Chunk::Kind::History;
      c.trace = sym_eval(st, a->e1);
      st.chunks.push_back(std::move(c));
      return;
    }
    case AssertKind::PredApp: {
      Chunk c;
      c.kind = Chunk::Kind::Pred;
      c.name = a->name;
      for (const auto& e : a->args) c.args.push_back(sym_eval(st, e));
      st.chunks.push_back(std::move(c));
      return;
    }
    default:
      if (!is_pure(a))
        throw VerifyError("unsupported spatial structure in precondition", a->span);
      st.path.push_back(sym_eval_assertion(st, a));
      return;
  }
}

struct ConsumeMatcher {
  SymbolicVerifier& ver;
  SymState& st;
  std::map<std::string, ExprPtr> unifier;
  std::map<std::string, Sort> hole_sorts;
  std::vector<Chunk> consumed;
  std::vector<AssertionPtr> residual;
  std::string failure;

  bool provably_equal(const ExprPtr& a, const ExprPtr& b) {
    Entailment e;
    e.hyp = ver.pure_path(st);
    e.goal = mk::pure(mk::binary(BinOp::Eq, a, b));
    e.sorts = ver.symbol_sorts();
    e.attacker = ver.options_.attacker;
    return check_entailment(e, ver.options_.backend).status == VcStatus::Valid;
  }

  bool match_points_to(const AssertionPtr& a) {
    ExprPtr pa = apply_unifier(a->e1, unifier);
    ExprPtr pv = apply_unifier(a->e2, unifier);
    // Syntactic matching first.
    for (size_t i = 0; i < st.chunks.size(); ++i) {
      const Chunk& c = st.chunks[i];
      if (c.kind != Chunk::Kind::PointsTo) continue;
      auto saved = unifier;
      if (unify_expr(pa, c.addr, unifier)) {
        if (unify_expr(pv, c.val, unifier)) {
          consumed.push_back(c);
          st.chunks.erase(st.chunks.begin() + static_cast<long>(i));
          return true;
        }
        // Address matches syntactically but the value is constrained: keep
        // the binding and emit a pure residue for the value.
        if (free_vars(pv).empty() || !is_hole(pv)) {
          consumed.push_back(c);
          ExprPtr val = c.val;
          st.chunks.erase(st.chunks.begin() + static_cast<long>(i));
          residual.push_back(mk::pure(
              mk::binary(BinOp::Eq, apply_unifier(pv, unifier), val)));
          return true;
        }
      }
      unifier = saved;
    }
    // Semantic address match, demanding a unique provably-equal candidate.
    if (free_vars(pa).empty() ||
        std::none_of(pa->args.begin(), pa->args.end(), [](const ExprPtr&) {
          return false;
        })) {
      std::vector<size_t> hits;
      for (size_t i = 0; i < st.chunks.size(); ++i) {
        const Chunk& c = st.chunks[i];
        if (c.kind != Chunk::Kind::PointsTo) continue;
        bool has_hole = false;
        for (const auto& fv : free_vars(pa))
          if (fv.rfind("?", 0) == 0) has_hole = true;
        if (has_hole) continue;
        if (provably_equal(pa, c.addr)) hits.push_back(i);
      }
      if (hits.size() > 1) {
        failure = "ambiguous points-to match for address " + format_expr(pa) +
                  "; add a disequality annotation";
        return false;
      }
      if (hits.size() == 1) {
        const Chunk c = st.chunks[hits[0]];
        st.chunks.erase(st.chunks.begin() + static_cast<long>(hits[0]));
        consumed.push_back(c);
        if (is_hole(pv) && !unifier.count(pv->name)) {
          unifier[pv->name] = c.val;
        } else {
          residual.push_back(
              mk::pure(mk::binary(BinOp::Eq, apply_unifier(pv, unifier), c.val)));
        }
        return true;
      }
    }
    failure = "memory unproven: no points-to chunk matches address " +
              format_expr(pa);
    return false;
  }

  bool match_history(const AssertionPtr& a) {
    ExprPtr pat = apply_unifier(a->e1, unifier);
    for (size_t i = 0; i < st.chunks.size(); ++i) {
      const Chunk& c = st.chunks[i];
      if (c.kind != Chunk::Kind::History) continue;
      if (is_hole(pat) && !unifier.count(pat->name)) {
        unifier[pat->name] = c.trace;
      } else if (!expr_equal(apply_unifier(pat, unifier), c.trace)) {
        residual.push_back(
            mk::pure(mk::binary(BinOp::Eq, apply_unifier(pat, unifier), c.trace)));
      }
      consumed.push_back(c);
      st.chunks.erase(st.chunks.begin() + static_cast<long>(i));
      return true;
    }
    failure = "no History chunk to consume";
    return false;
  }

  bool match_pred(const AssertionPtr& a) {
    for (size_t i = 0; i < st.chunks.size(); ++i) {
      const Chunk& c = st.chunks[i];
      if (c.kind != Chunk::Kind::Pred || c.name != a->name ||
          c.args.size() != a->args.size())
        continue;
      auto saved = unifier;
      bool ok = true;
      for (size_t j = 0; j < c.args.size(); ++j)
        if (!unify_expr(apply_unifier(a->args[j], unifier), c.args[j], unifier))
          ok = false;
      if (!ok) {
        unifier = saved;
        continue;
      }
      consumed.push_back(c);
      st.chunks.erase(st.chunks.begin() + static_cast<long>(i));
      return true;
    }
    failure = "no matching predicate chunk '" + a->name + "'";
    return false;
  }

  bool run(const AssertionPtr& a) {
    int hole_counter = 0;
    std::vector<FlatAtom> atoms;
    flatten(a, atoms, hole_sorts, hole_counter);
    // Spatial atoms first, in order; pure residue afterwards.
    for (const auto& [atom] : atoms) {
      switch (atom->kind) {
        case AssertKind::PointsTo:
          if (!match_points_to(atom)) return false;
          break;
        case AssertKind::History:
          if (!match_history(atom)) return false;
          break;
        case AssertKind::PredApp:
          if (!match_pred(atom)) return false;
          break;
        default:
          if (!is_pure(atom)) return false;
          residual.push_back(atom);
          break;
      }
    }
    return true;
  }

  // The residual pure obligation with unifier applied and any unresolved
  // holes re-quantified.
  AssertionPtr residual_goal() {
    AssertionPtr goal;
    for (const auto& r : residual) {
      AssertionPtr inst = subst_assertion(r, unifier);
      goal = goal ? mk::star(goal, inst) : inst;
    }
    if (!goal) return nullptr;
    std::set<std::string> fv = free_vars(goal);
    for (const auto& [hole, sort] : hole_sorts)
      if (fv.count(hole) && !unifier.count(hole))
        goal = mk::exists(hole, sort, subst(goal, hole, mk::var(hole, sort)));
    return goal;
  }
};

bool SymbolicVerifier::consume(SymState& st, const AssertionPtr& a, VcKind kind,
                               SourceSpan span, VerdictBundle& out,
                               const std::string& note) {
  AssertionPtr inst = sym_eval_assertion(st, a);
  ConsumeMatcher m{*this, st, {}, {}, {}, {}, {}};
  if (!m.run(inst)) {
    emit_vc(out, kind, span, pure_path(st), mk::pure(mk::bool_lit(false)),
            note.empty() ? m.failure : note + ": " + m.failure);
    return false;
  }
  AssertionPtr goal = m.residual_goal();
  if (goal)
    emit_vc(out, kind, span, pure_path(st), goal, note);
  else if (kind == VcKind::Postcondition)
    emit_vc(out, kind, span, pure_path(st), mk::pure(mk::bool_lit(true)), note);
  return true;
}

std::vector<SymState> SymbolicVerifier::exec_symbolic(const SymState& st0,
                                                      const CommandPtr& c,
                                                      VerdictBundle& out) {
  SymState st = st0;
  switch (c->kind) {
    case CmdKind::Skip:
      return {st};

    case CmdKind::Assign: {
      ExprPtr rhs = sym_eval(st, c->e1);
      ExprPtr x = mk::var(fresh(c->var, Sort::Int), Sort::Int);
      st.path.push_back(mk::pure(mk::binary(BinOp::Eq, x, rhs)));
      st.env[c->var] = x;
      return {st};
    }

    case CmdKind::Load: {
      ExprPtr addr = sym_eval(st, c->e1);
      // Locate the chunk: syntactic address equality first, then a unique
      // provably-equal candidate.
      int found = -1;
      for (size_t i = 0; i < st.chunks.size(); ++i)
        if (st.chunks[i].kind == Chunk::Kind::PointsTo &&
            expr_equal(st.chunks[i].addr, addr))
          found = static_cast<int>(i);
      if (found < 0) {
        std::vector<int> hits;
        for (size_t i = 0; i < st.chunks.size(); ++i) {
          if (st.chunks[i].kind != Chunk::Kind::PointsTo) continue;
          Entailment e;
          e.hyp = pure_path(st);
          e.goal = mk::pure(mk::binary(BinOp::Eq, addr, st.chunks[i].addr));
          e.sorts = sorts_;
          e.attacker = options_.attacker;
          if (check_entailment(e, options_.backend).status == VcStatus::Valid)
            hits.push_back(static_cast<int>(i));
        }
        if (hits.size() == 1) found = hits[0];
        else if (hits.size() > 1)
          throw VerifyError("ambiguous points-to match for address " +
                                format_expr(addr) + "; add a disequality annotation",
                            c->span);
      }
      if (found < 0) {
        emit_vc(out, VcKind::Entailment, c->span, pure_path(st),
                mk::pure(mk::bool_lit(false)),
                "memory unproven: no points-to chunk for " + format_expr(addr));
        return {};
      }
      emit_vc(out, VcKind::LoadAddressLow, c->span, pure_path(st),
              mk::classify(addr, attacker_term()), "");
      ExprPtr x = mk::var(fresh(c->var, Sort::Int), Sort::Int);
      st.path.push_back(mk::pure(mk::binary(BinOp::Eq, x, st.chunks[found].val)));
      st.env[c->var] = x;
      return {st};
    }

    case CmdKind::Store: {
      ExprPtr addr = sym_eval(st, c->e1);
      ExprPtr val = sym_eval(st, c->e2);
      int found = -1;
      for (size_t i = 0; i < st.chunks.size(); ++i)
        if (st.chunks[i].kind == Chunk::Kind::PointsTo &&
            expr_equal(st.chunks[i].addr, addr))
          found = static_cast<int>(i);
      if (found < 0) {
        std::vector<int> hits;
        for (size_t i = 0; i < st.chunks.size(); ++i) {
          if (st.chunks[i].kind != Chunk::Kind::PointsTo) continue;
          Entailment e;
          e.hyp = pure_path(st);
          e.goal = mk::pure(mk::binary(BinOp::Eq, addr, st.chunks[i].addr));
          e.sorts = sorts_;
          e.attacker = options_.attacker;
          if (check_entailment(e, options_.backend).status == VcStatus::Valid)
            hits.push_back(static_cast<int>(i));
        }
        if (hits.size() == 1) found = hits[0];
        else if (hits.size() > 1)
          throw VerifyError("ambiguous points-to match for address " +
                                format_expr(addr) + "; add a disequality annotation",
                            c->span);
      }
      if (found < 0) {
        emit_vc(out, VcKind::Entailment, c->span, pure_path(st),
                mk::pure(mk::bool_lit(false)),
                "memory unproven: no points-to chunk for " + format_expr(addr));
        return {};
      }
      emit_vc(out, VcKind::StoreAddressLow, c->span, pure_path(st),
              mk::classify(addr, attacker_term()), "");
      st.chunks[found].val = val;
      return {st};
    }

    case CmdKind::LockCmd: {
      const LockDecl* l = program_.find_lock(c->var);
      if (!l) throw VerifyError("undeclared lock '" + c->var + "'", c->span);
      produce(st, l->invariant);
      st.held.push_back(c->var);
      return {st};
    }

    case CmdKind::UnlockCmd: {
      const LockDecl* l = program_.find_lock(c->var);
      if (!l) throw VerifyError("undeclared lock '" + c->var + "'", c->span);
      if (!consume(st, l->invariant, VcKind::InvariantRestore, c->span, out,
                   "restore invariant of lock " + c->var))
        return {};
      auto it = std::find(st.held.begin(), st.held.end(), c->var);
      if (it != st.held.end()) st.held.erase(it);
      return {st};
    }

    case CmdKind::Seq: {
      std::vector<SymState> mid = exec_symbolic(st, c->c1, out);
      std::vector<SymState> res;
      for (const auto& m : mid) {
        auto next = exec_symbolic(m, c->c2, out);
        res.insert(res.end(), next.begin(), next.end());
      }
      return res;
    }

    case CmdKind::If: {
      ExprPtr g = as_formula(sym_eval(st, c->e1));
      emit_vc(out, VcKind::BranchLow, c->span, pure_path(st),
              mk::classify(g, attacker_term()), "");
      SymState then_st = st;
      then_st.path.push_back(mk::pure(g));
      SymState else_st = st;
      else_st.path.push_back(mk::pure(mk::unary(UnOp::Not, g)));
      std::vector<SymState> res = exec_symbolic(then_st, c->c1, out);
      auto other = exec_symbolic(else_st, c->c2, out);
      res.insert(res.end(), other.begin(), other.end());
      return res;
    }

    case CmdKind::SplitCmd: {
      ExprPtr g = as_formula(sym_eval(st, c->e1));
      emit_vc(out, VcKind::BranchLow, c->span, pure_path(st),
              mk::classify(g, attacker_term()), "split");
      SymState pos = st;
      pos.path.push_back(mk::pure(g));
      SymState neg = st;
      neg.path.push_back(mk::pure(mk::unary(UnOp::Not, g)));
      return {pos, neg};
    }

    case CmdKind::While: {
      // Establish the invariant; whatever is left over is framed around the
      // loop untouched.
      if (!consume(st, c->inv, VcKind::InvariantEstablish, c->span, out,
                   "establish loop invariant"))
        return {};
      SymState frame = st;

      // Havoc the variables the body modifies.
      SymState havocked = st;
      for (const auto& x : modified_vars(c->c1))
        havocked.env[x] = mk::var(fresh(x, Sort::Int), Sort::Int);

      // Body branch: only the invariant's resources are available.
      SymState body_st = havocked;
      body_st.chunks.clear();
      produce(body_st, c->inv);
      ExprPtr g = as_formula(sym_eval(body_st, c->e1));
      emit_vc(out, VcKind::BranchLow, c->span, body_st.path,
              mk::classify(g, attacker_term()), "loop guard");
      body_st.path.push_back(mk::pure(g));
      for (auto& leaf : exec_symbolic(body_st, c->c1, out)) {
        if (!consume(leaf, c->inv, VcKind::InvariantRestore, c->span, out,
                     "restore loop invariant"))
          continue;
        if (!leaf.chunks.empty())
          throw VerifyError("loop body does not return all resources to the "
                            "invariant",
                            c->span);
      }

      // Exit branch: invariant plus frame, guard negated.
      SymState exit_st = havocked;
      exit_st.chunks = frame.chunks;
      produce(exit_st, c->inv);
      ExprPtr g_exit = as_formula(sym_eval(exit_st, c->e1));
      exit_st.path.push_back(mk::pure(mk::unary(UnOp::Not, g_exit)));
      return {exit_st};
    }

    case CmdKind::Par: {
      std::set<std::string> fv1 = command_vars(c->c1);
      std::set<std::string> fv2 = command_vars(c->c2);
      std::set<std::string> mod1 = modified_vars(c->c1);
      std::set<std::string> mod2 = modified_vars(c->c2);
      for (const auto& x : fv1)
        if (mod2.count(x))
          throw VerifyError("parallel branches race on variable '" + x + "'",
                            c->span);
      for (const auto& x : fv2)
        if (mod1.count(x))
          throw VerifyError("parallel branches race on variable '" + x + "'",
                            c->span);

      SymState split = st;
      ConsumeMatcher m1{*this, split, {}, {}, {}, {}, {}};
      AssertionPtr pre1 = sym_eval_assertion(split, c->pre1);
      if (!m1.run(pre1)) {
        emit_vc(out, VcKind::ParSplit, c->span, pure_path(split),
                mk::pure(mk::bool_lit(false)), m1.failure);
        return {};
      }
      if (auto g = m1.residual_goal())
        emit_vc(out, VcKind::ParSplit, c->span, pure_path(split), g, "left precondition");
      ConsumeMatcher m2{*this, split, {}, {}, {}, {}, {}};
      AssertionPtr pre2 = sym_eval_assertion(split, c->pre2);
      if (!m2.run(pre2)) {
        emit_vc(out, VcKind::ParSplit, c->span, pure_path(split),
                mk::pure(mk::bool_lit(false)), m2.failure);
        return {};
      }
      if (auto g = m2.residual_goal())
        emit_vc(out, VcKind::ParSplit, c->span, pure_path(split), g,
                "right precondition");

      auto run_branch = [&](const CommandPtr& body, const std::vector<Chunk>& owned,
                            const AssertionPtr& post,
                            const char* side) -> std::vector<SymState> {
        SymState branch = split;
        branch.chunks = owned;
        std::vector<SymState> done;
        for (auto& leaf : exec_symbolic(branch, body, out)) {
          if (!consume(leaf, post, VcKind::ParSplit, c->span, out,
                       std::string(side) + " postcondition"))
            continue;
          if (!leaf.chunks.empty())
            throw VerifyError(std::string("parallel ") + side +
                                  " branch leaks resources beyond its postcondition",
                              c->span);
          done.push_back(leaf);
        }
        return done;
      };
      auto left = run_branch(c->c1, m1.consumed, c->post1, "left");
      auto right = run_branch(c->c2, m2.consumed, c->post2, "right");

      std::vector<SymState> res;
      for (const auto& l : left)
        for (const auto& r : right) {
          SymState after = split;
          after.path = l.path;
          for (const auto& p : r.path) {
            bool dup = false;
            for (const auto& q : after.path)
              if (assertion_equal(p, q)) dup = true;
            if (!dup) after.path.push_back(p);
          }
          for (const auto& x : mod1) after.env[x] = l.env.at(x);
          for (const auto& x : mod2) after.env[x] = r.env.at(x);
          produce(after, c->post1);
          produce(after, c->post2);
          res.push_back(std::move(after));
        }
      return res;
    }

    case CmdKind::Assume: {
      AssertionPtr rho = sym_eval_assertion(st, c->inv);
      if (!c->policy_justified) {
        AuditTriple t;
        t.context = pure_path(st);
        t.trace = history_expr(st, c->span);
        t.rho = rho;
        t.span = c->span;
        t.proc = current_proc_;
        out.triples.push_back(std::move(t));
      }
      st.path.push_back(rho);
      return {st};
    }

    case CmdKind::Output: {
      ExprPtr level = sym_eval(st, c->e1);
      ExprPtr value = sym_eval(st, c->e2);
      emit_vc(out, VcKind::OutputValue, c->span, pure_path(st),
              mk::classify(value, level), "");
      emit_vc(out, VcKind::OutputLevel, c->span, pure_path(st),
              mk::classify(level, attacker_term()), "");
      return {st};
    }

    case CmdKind::TraceEmit: {
      ExprPtr ev = sym_eval(st, c->e1);
      for (auto& ch : st.chunks)
        if (ch.kind == Chunk::Kind::History) {
          ch.trace = mk::snoc(ch.trace, ev);
          return {st};
        }
      throw VerifyError("trace(..) requires History to be held", c->span);
    }

    case CmdKind::AssertCmd: {
      AssertionPtr a = sym_eval_assertion(st, c->inv);
      if (is_pure(a)) {
        emit_vc(out, VcKind::Entailment, c->span, pure_path(st), a, "assert");
        st.path.push_back(a);  // the consequence rule carrier
        return {st};
      }
      SymState scratch = st;
      if (!consume(scratch, c->inv, VcKind::Entailment, c->span, out, "assert"))
        return {};
      return {st};
    }
  }
  throw VerifyError("unreachable command", c->span);
}

VerdictBundle SymbolicVerifier::verify() {
  VerdictBundle out;
  for (const auto& proc : program_.procs) {
    current_proc_ = proc.name;
    SymState st;
    std::set<std::string> vars = command_vars(proc.body);
    free_vars(proc.requires_, vars);
    free_vars(proc.ensures_, vars);
    for (const auto& x : vars) {
      if (st.env.count(x)) continue;
      st.env[x] = mk::var(fresh(x, Sort::Int), Sort::Int);
    }
    try {
      produce(st, proc.requires_);
      for (auto& leaf : exec_symbolic(st, proc.body, out)) {
        if (!consume(leaf, proc.ensures_, VcKind::Postcondition, proc.span, out,
                     "postcondition of " + proc.name))
          continue;
        if (!leaf.chunks.empty())
          throw VerifyError("procedure " + proc.name +
                                " leaks resources beyond its postcondition",
                            proc.span);
      }
    } catch (const VerifyError& err) {
      out.errors.push_back(proc.name + ": " + err.what());
      emit_vc(out, VcKind::Entailment, err.span, {}, mk::pure(mk::bool_lit(false)),
              err.what());
      // The error VC must not be excusable by an inconsistent path.
      out.vcs.back().status = VcStatus::Invalid;
    }
  }

  bool any_invalid = false, any_unknown = false;
  for (auto& vc : out.vcs) {
    if (vc.status != VcStatus::Unknown) {  // pre-set by a hard error
      any_invalid = true;
      continue;
    }
    Entailment e;
    e.hyp = vc.hypothesis;
    e.goal = vc.goal;
    e.sorts = sorts_;
    e.attacker = options_.attacker;
    SolverVerdict verdict = check_entailment(e, options_.backend);
    vc.status = verdict.status;
    vc.countermodel = verdict.model;
    if (!verdict.reason.empty())
      vc.note = vc.note.empty() ? verdict.reason : vc.note + " (" + verdict.reason + ")";
    if (vc.status == VcStatus::Invalid) any_invalid = true;
    if (vc.status == VcStatus::Unknown) any_unknown = true;
  }
  out.status = any_invalid  ? Verdict::Refuted
               : any_unknown ? Verdict::Unknown
                             : Verdict::Verified;
  return out;
}

AuditReport SymbolicVerifier::audit(const std::vector<AuditTriple>& triples,
                                    const PolicyDecl& policy) {
  AuditReport report;
  // Every event constructor reachable from a triple must be in the policy's
  // vocabulary (the program's declared events).
  std::function<void(const ExprPtr&)> check_events = [&](const ExprPtr& e) {
    if (!e) return;
    if (e->kind == ExprKind::EventApp && !program_.find_event(e->name))
      throw DefinitionError("audit triple mentions undeclared event '" + e->name +
                            "'");
    for (const auto& a : e->args) check_events(a);
  };

  int id = 0;
  bool any_invalid = false, any_unknown = false;
  for (const auto& t : triples) {
    check_events(t.trace);
    AuditObligation ob;
    ob.triple = &t;

    ob.when.id = id++;
    ob.when.kind = VcKind::AuditWhen;
    ob.when.span = t.span;
    ob.when.hypothesis = t.context;
    ob.when.goal = policy_when(policy, t.trace);
    ob.when.note = t.proc;

    ob.release.id = id++;
    ob.release.kind = VcKind::AuditRelease;
    ob.release.span = t.span;
    ob.release.hypothesis = t.context;
    ob.release.hypothesis.push_back(policy_release(policy, t.trace));
    ob.release.goal = t.rho;
    ob.release.note = t.proc;

    for (VerificationCondition* vc : {&ob.when, &ob.release}) {
      Entailment e;
      e.hyp = vc->hypothesis;
      e.goal = vc->goal;
      e.sorts = sorts_;
      e.attacker = options_.attacker;
      SolverVerdict verdict = check_entailment(e, options_.backend);
      vc->status = verdict.status;
      vc->countermodel = verdict.model;
      if (!verdict.reason.empty()) vc->note = verdict.reason;
      if (vc->status == VcStatus::Invalid) any_invalid = true;
      if (vc->status == VcStatus::Unknown) any_unknown = true;
    }
    report.obligations.push_back(std::move(ob));
  }
  report.status = any_invalid  ? Verdict::Refuted
                  : any_unknown ? Verdict::Unknown
                                : Verdict::Verified;
  return report;
}

Program SymbolicVerifier::inline_audit(const Program& p, const PolicyDecl& policy) {
  std::function<CommandPtr(const CommandPtr&)> rewrite =
      [&](const CommandPtr& c) -> CommandPtr {
    if (!c) return c;
    if (c->kind == CmdKind::Assume && !c->policy_justified) {
      ExprPtr tr = mk::current_trace();
      CommandPtr check_when = mk::assert_(policy_when(policy, tr));
      CommandPtr use_release = mk::assume(policy_release(policy, tr), true);
      CommandPtr check_rho = mk::assert_(c->inv);
      auto span = c->span;
      auto seq = mk::seq(check_when, mk::seq(use_release, check_rho));
      const_cast<Command*>(seq.get())->span = span;
      return seq;
    }
    auto n = std::make_shared<Command>(*c);
    n->c1 = rewrite(c->c1);
    n->c2 = rewrite(c->c2);
    return n;
  };
  Program q = p;
  for (auto& proc : q.procs) proc.body = rewrite(proc.body);
  return q;
}

}  // namespace vdc
