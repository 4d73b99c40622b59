#include "vdc/ast.hpp"

#include <algorithm>
#include <functional>

namespace vdc {

const char* sort_name(Sort s) {
  switch (s) {
    case Sort::Int: return "int";
    case Sort::Bool: return "bool";
    case Sort::Label: return "label";
    case Sort::Trace: return "trace";
    case Sort::Event: return "event";
  }
  return "?";
}

namespace mk {

static std::shared_ptr<Expr> node(ExprKind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}

ExprPtr int_lit(long long v) {
  auto e = node(ExprKind::IntLit);
  e->int_val = v;
  e->sort = Sort::Int;
  return e;
}

ExprPtr bool_lit(bool b) {
  auto e = node(ExprKind::BoolLit);
  e->int_val = b ? 1 : 0;
  e->sort = Sort::Bool;
  return e;
}

ExprPtr var(const std::string& name, Sort sort) {
  auto e = node(ExprKind::Var);
  e->name = name;
  e->sort = sort;
  return e;
}

ExprPtr label(const std::string& name) {
  auto e = node(ExprKind::LabelLit);
  e->name = name;
  e->sort = Sort::Label;
  return e;
}

ExprPtr unary(UnOp op, ExprPtr a) {
  auto e = node(ExprKind::Unary);
  e->un_op = op;
  e->sort = op == UnOp::Not ? Sort::Bool : Sort::Int;
  e->args = {std::move(a)};
  return e;
}

ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b) {
  auto e = node(ExprKind::Binary);
  e->bin_op = op;
  switch (op) {
    case BinOp::Add: case BinOp::Sub: case BinOp::Mul:
    case BinOp::Div: case BinOp::Mod:
      e->sort = Sort::Int; break;
    default:
      e->sort = Sort::Bool; break;
  }
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr ite(ExprPtr c, ExprPtr t, ExprPtr el) {
  auto e = node(ExprKind::Ite);
  e->sort = t->sort;
  e->args = {std::move(c), std::move(t), std::move(el)};
  return e;
}

ExprPtr nil() {
  auto e = node(ExprKind::Nil);
  e->sort = Sort::Trace;
  return e;
}

ExprPtr snoc(ExprPtr t, ExprPtr ev) {
  auto e = node(ExprKind::Snoc);
  e->sort = Sort::Trace;
  e->args = {std::move(t), std::move(ev)};
  return e;
}

ExprPtr cat(ExprPtr a, ExprPtr b) {
  auto e = node(ExprKind::Cat);
  e->sort = Sort::Trace;
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr event(const std::string& ctor, std::vector<ExprPtr> fields) {
  auto e = node(ExprKind::EventApp);
  e->name = ctor;
  e->sort = Sort::Event;
  e->args = std::move(fields);
  return e;
}

ExprPtr len(ExprPtr t) {
  auto e = node(ExprKind::Len);
  e->sort = Sort::Int;
  e->args = {std::move(t)};
  return e;
}

ExprPtr sum(ExprPtr t) {
  auto e = node(ExprKind::Sum);
  e->sort = Sort::Int;
  e->args = {std::move(t)};
  return e;
}

ExprPtr contains(ExprPtr t, ExprPtr ev) {
  auto e = node(ExprKind::Contains);
  e->sort = Sort::Bool;
  e->args = {std::move(t), std::move(ev)};
  return e;
}

ExprPtr current_trace() {
  auto e = node(ExprKind::CurrentTrace);
  e->sort = Sort::Trace;
  return e;
}

ExprPtr attacker() {
  auto e = node(ExprKind::Attacker);
  e->name = "@att";
  e->sort = Sort::Label;
  return e;
}

}  // namespace mk

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::IntLit:
    case ExprKind::BoolLit:
      if (a->int_val != b->int_val) return false;
      break;
    case ExprKind::Var:
    case ExprKind::LabelLit:
    case ExprKind::EventApp:
      if (a->name != b->name) return false;
      break;
    case ExprKind::Unary:
      if (a->un_op != b->un_op) return false;
      break;
    case ExprKind::Binary:
      if (a->bin_op != b->bin_op) return false;
      break;
    default:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i], b->args[i])) return false;
  return true;
}

size_t expr_hash(const ExprPtr& e) {
  if (!e) return 0;
  size_t h = static_cast<size_t>(e->kind) * 1000003u;
  h ^= std::hash<long long>()(e->int_val) + 0x9e3779b9 + (h << 6) + (h >> 2);
  h ^= std::hash<std::string>()(e->name) + 0x9e3779b9 + (h << 6) + (h >> 2);
  h ^= static_cast<size_t>(e->un_op) + static_cast<size_t>(e->bin_op) * 31;
  for (const auto& a : e->args)
    h ^= expr_hash(a) + 0x9e3779b9 + (h << 6) + (h >> 2);
  return h;
}

void free_vars(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Var) out.insert(e->name);
  for (const auto& a : e->args) free_vars(a, out);
}

std::set<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> out;
  free_vars(e, out);
  return out;
}

ExprPtr subst_expr(const ExprPtr& e, const std::map<std::string, ExprPtr>& sub) {
  if (!e || sub.empty()) return e;
  if (e->kind == ExprKind::Var) {
    auto it = sub.find(e->name);
    return it == sub.end() ? e : it->second;
  }
  bool changed = false;
  std::vector<ExprPtr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) {
    auto a2 = subst_expr(a, sub);
    changed |= (a2 != a);
    args.push_back(a2);
  }
  if (!changed) return e;
  auto n = std::make_shared<Expr>(*e);
  n->args = std::move(args);
  return n;
}

namespace mk {

static std::shared_ptr<Assertion> anode(AssertKind k) {
  auto a = std::make_shared<Assertion>();
  a->kind = k;
  return a;
}

AssertionPtr pure(ExprPtr e) {
  auto a = anode(AssertKind::Pure);
  a->e1 = std::move(e);
  return a;
}

AssertionPtr classify(ExprPtr e, ExprPtr label) {
  auto a = anode(AssertKind::Classify);
  a->e1 = std::move(e);
  a->e2 = std::move(label);
  return a;
}

AssertionPtr emp() { return anode(AssertKind::Emp); }

AssertionPtr points_to(ExprPtr addr, ExprPtr val) {
  auto a = anode(AssertKind::PointsTo);
  a->e1 = std::move(addr);
  a->e2 = std::move(val);
  return a;
}

AssertionPtr star(AssertionPtr x, AssertionPtr y) {
  auto a = anode(AssertKind::Star);
  a->a1 = std::move(x);
  a->a2 = std::move(y);
  return a;
}

AssertionPtr impl(AssertionPtr x, AssertionPtr y) {
  auto a = anode(AssertKind::Imp);
  a->a1 = std::move(x);
  a->a2 = std::move(y);
  return a;
}

AssertionPtr exists(const std::string& x, Sort s, AssertionPtr body) {
  auto a = anode(AssertKind::Exists);
  a->name = x;
  a->binder_sort = s;
  a->a1 = std::move(body);
  return a;
}

AssertionPtr forall(const std::string& x, Sort s, AssertionPtr body) {
  auto a = anode(AssertKind::Forall);
  a->name = x;
  a->binder_sort = s;
  a->a1 = std::move(body);
  return a;
}

AssertionPtr history(ExprPtr tr) {
  auto a = anode(AssertKind::History);
  a->e1 = std::move(tr);
  return a;
}

AssertionPtr pred(const std::string& name, std::vector<ExprPtr> args) {
  auto a = anode(AssertKind::PredApp);
  a->name = name;
  a->args = std::move(args);
  return a;
}

}  // namespace mk

bool is_pure(const AssertionPtr& a) {
  if (!a) return true;
  switch (a->kind) {
    case AssertKind::PointsTo:
    case AssertKind::History:
    case AssertKind::PredApp:
      return false;
    default:
      return is_pure(a->a1) && is_pure(a->a2);
  }
}

bool is_relational(const AssertionPtr& a) {
  if (!a) return false;
  if (a->kind == AssertKind::Classify) return true;
  return is_relational(a->a1) || is_relational(a->a2);
}

bool assertion_equal(const AssertionPtr& a, const AssertionPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->name != b->name || a->binder_sort != b->binder_sort)
    return false;
  if (!expr_equal(a->e1, b->e1) || !expr_equal(a->e2, b->e2)) return false;
  if (!assertion_equal(a->a1, b->a1) || !assertion_equal(a->a2, b->a2)) return false;
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!expr_equal(a->args[i], b->args[i])) return false;
  return true;
}

void free_vars(const AssertionPtr& a, std::set<std::string>& out) {
  if (!a) return;
  if (a->kind == AssertKind::Exists || a->kind == AssertKind::Forall) {
    std::set<std::string> inner;
    free_vars(a->a1, inner);
    inner.erase(a->name);
    out.insert(inner.begin(), inner.end());
    return;
  }
  free_vars(a->e1, out);
  free_vars(a->e2, out);
  free_vars(a->a1, out);
  free_vars(a->a2, out);
  for (const auto& e : a->args) free_vars(e, out);
}

std::set<std::string> free_vars(const AssertionPtr& a) {
  std::set<std::string> out;
  free_vars(a, out);
  return out;
}

static std::string fresh_binder(const std::string& base,
                                const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (int i = 0;; ++i) {
    std::string cand = base + "'" + (i ? std::to_string(i) : "");
    if (!avoid.count(cand)) return cand;
  }
}

AssertionPtr subst_assertion(const AssertionPtr& a,
                             const std::map<std::string, ExprPtr>& sub) {
  if (!a || sub.empty()) return a;
  if (a->kind == AssertKind::Exists || a->kind == AssertKind::Forall) {
    auto inner = sub;
    inner.erase(a->name);
    // Rename the binder when a substituted expression would capture it.
    std::set<std::string> clash;
    for (const auto& [k, v] : inner) {
      (void)k;
      free_vars(v, clash);
    }
    std::string binder = a->name;
    AssertionPtr body = a->a1;
    if (clash.count(binder)) {
      std::set<std::string> avoid = clash;
      free_vars(body, avoid);
      std::string renamed = fresh_binder(binder, avoid);
      std::map<std::string, ExprPtr> rename{{binder, mk::var(renamed, a->binder_sort)}};
      body = subst_assertion(body, rename);
      binder = renamed;
    }
    if (inner.empty() && binder == a->name) return a;
    auto n = std::make_shared<Assertion>(*a);
    n->name = binder;
    n->a1 = subst_assertion(body, inner);
    return n;
  }
  auto n = std::make_shared<Assertion>(*a);
  n->e1 = subst_expr(a->e1, sub);
  n->e2 = subst_expr(a->e2, sub);
  n->a1 = subst_assertion(a->a1, sub);
  n->a2 = subst_assertion(a->a2, sub);
  for (auto& e : n->args) e = subst_expr(e, sub);
  return n;
}

AssertionPtr subst(const AssertionPtr& a, const std::string& x, const ExprPtr& e) {
  return subst_assertion(a, {{x, e}});
}

namespace mk {

static std::shared_ptr<Command> cnode(CmdKind k) {
  auto c = std::make_shared<Command>();
  c->kind = k;
  return c;
}

CommandPtr skip() { return cnode(CmdKind::Skip); }

CommandPtr assign(const std::string& x, ExprPtr e) {
  auto c = cnode(CmdKind::Assign);
  c->var = x;
  c->e1 = std::move(e);
  return c;
}

CommandPtr load(const std::string& x, ExprPtr addr) {
  auto c = cnode(CmdKind::Load);
  c->var = x;
  c->e1 = std::move(addr);
  return c;
}

CommandPtr store(ExprPtr addr, ExprPtr val) {
  auto c = cnode(CmdKind::Store);
  c->e1 = std::move(addr);
  c->e2 = std::move(val);
  return c;
}

CommandPtr lock(const std::string& l) {
  auto c = cnode(CmdKind::LockCmd);
  c->var = l;
  return c;
}

CommandPtr unlock(const std::string& l) {
  auto c = cnode(CmdKind::UnlockCmd);
  c->var = l;
  return c;
}

CommandPtr seq(CommandPtr a, CommandPtr b) {
  auto c = cnode(CmdKind::Seq);
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  return c;
}

CommandPtr par(CommandPtr a, CommandPtr b, AssertionPtr pre1, AssertionPtr post1,
               AssertionPtr pre2, AssertionPtr post2) {
  auto c = cnode(CmdKind::Par);
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  c->pre1 = std::move(pre1);
  c->post1 = std::move(post1);
  c->pre2 = std::move(pre2);
  c->post2 = std::move(post2);
  return c;
}

CommandPtr if_(ExprPtr cond, CommandPtr t, CommandPtr e) {
  auto c = cnode(CmdKind::If);
  c->e1 = std::move(cond);
  c->c1 = std::move(t);
  c->c2 = std::move(e);
  return c;
}

CommandPtr while_(ExprPtr cond, AssertionPtr inv, CommandPtr body) {
  auto c = cnode(CmdKind::While);
  c->e1 = std::move(cond);
  c->inv = std::move(inv);
  c->c1 = std::move(body);
  return c;
}

CommandPtr assume(AssertionPtr rho, bool policy_justified) {
  auto c = cnode(CmdKind::Assume);
  c->inv = std::move(rho);
  c->policy_justified = policy_justified;
  return c;
}

CommandPtr output(ExprPtr level, ExprPtr value) {
  auto c = cnode(CmdKind::Output);
  c->e1 = std::move(level);
  c->e2 = std::move(value);
  return c;
}

CommandPtr trace_emit(ExprPtr ev) {
  auto c = cnode(CmdKind::TraceEmit);
  c->e1 = std::move(ev);
  return c;
}

CommandPtr assert_(AssertionPtr a) {
  auto c = cnode(CmdKind::AssertCmd);
  c->inv = std::move(a);
  return c;
}

CommandPtr split(ExprPtr cond) {
  auto c = cnode(CmdKind::SplitCmd);
  c->e1 = std::move(cond);
  return c;
}

}  // namespace mk

bool command_equal(const CommandPtr& a, const CommandPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->var != b->var ||
      a->policy_justified != b->policy_justified)
    return false;
  return expr_equal(a->e1, b->e1) && expr_equal(a->e2, b->e2) &&
         command_equal(a->c1, b->c1) && command_equal(a->c2, b->c2) &&
         assertion_equal(a->inv, b->inv) && assertion_equal(a->pre1, b->pre1) &&
         assertion_equal(a->post1, b->post1) && assertion_equal(a->pre2, b->pre2) &&
         assertion_equal(a->post2, b->post2);
}

static void collect_modified(const CommandPtr& c, std::set<std::string>& out) {
  if (!c) return;
  if (c->kind == CmdKind::Assign || c->kind == CmdKind::Load) out.insert(c->var);
  collect_modified(c->c1, out);
  collect_modified(c->c2, out);
}

std::set<std::string> modified_vars(const CommandPtr& c) {
  std::set<std::string> out;
  collect_modified(c, out);
  return out;
}

static void collect_vars(const CommandPtr& c, std::set<std::string>& out) {
  if (!c) return;
  if (c->kind == CmdKind::Assign || c->kind == CmdKind::Load) out.insert(c->var);
  free_vars(c->e1, out);
  free_vars(c->e2, out);
  free_vars(c->inv, out);
  free_vars(c->pre1, out);
  free_vars(c->post1, out);
  free_vars(c->pre2, out);
  free_vars(c->post2, out);
  collect_vars(c->c1, out);
  collect_vars(c->c2, out);
}

std::set<std::string> command_vars(const CommandPtr& c) {
  std::set<std::string> out;
  collect_vars(c, out);
  return out;
}

const EventDecl* Program::find_event(const std::string& name) const {
  for (const auto& e : events)
    if (e.name == name) return &e;
  return nullptr;
}

const LockDecl* Program::find_lock(const std::string& name) const {
  for (const auto& l : locks)
    if (l.name == name) return &l;
  return nullptr;
}

const PolicyDecl* Program::find_policy(const std::string& name) const {
  for (const auto& p : policies)
    if (p.name == name) return &p;
  return nullptr;
}

const ProcDecl* Program::find_proc(const std::string& name) const {
  for (const auto& p : procs)
    if (p.name == name) return &p;
  return nullptr;
}

AssertionPtr Program::invs(const std::set<std::string>& ls) const {
  AssertionPtr acc = mk::emp();
  for (const auto& l : ls) {
    const LockDecl* d = find_lock(l);
    if (!d) throw DefinitionError("undeclared lock '" + l + "'");
    acc = mk::star(acc, d->invariant);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Sort checking
// ---------------------------------------------------------------------------

Sort SortChecker::check(const ExprPtr& ep, std::map<std::string, Sort>& env) const {
  Expr* e = const_cast<Expr*>(ep.get());
  if (!e) throw DefinitionError("null expression");
  auto want = [&](const ExprPtr& c, Sort s) {
    Sort got = check(c, env);
    if (got != s)
      throw DefinitionError(std::string("expected ") + sort_name(s) + ", got " +
                                sort_name(got),
                            c->span);
  };
  switch (e->kind) {
    case ExprKind::IntLit: e->sort = Sort::Int; break;
    case ExprKind::BoolLit: e->sort = Sort::Bool; break;
    case ExprKind::Var: {
      auto it = env.find(e->name);
      if (it == env.end()) it = env.emplace(e->name, Sort::Int).first;
      e->sort = it->second;
      break;
    }
    case ExprKind::LabelLit:
      program_.lattice.level(e->name);  // throws if undeclared
      e->sort = Sort::Label;
      break;
    case ExprKind::Unary:
      want(e->args[0], e->un_op == UnOp::Not ? Sort::Bool : Sort::Int);
      e->sort = e->un_op == UnOp::Not ? Sort::Bool : Sort::Int;
      break;
    case ExprKind::Binary: {
      switch (e->bin_op) {
        case BinOp::Add: case BinOp::Sub: case BinOp::Mul:
        case BinOp::Div: case BinOp::Mod:
          want(e->args[0], Sort::Int);
          want(e->args[1], Sort::Int);
          e->sort = Sort::Int;
          break;
        case BinOp::Lt: case BinOp::Le: case BinOp::Gt: case BinOp::Ge:
          want(e->args[0], Sort::Int);
          want(e->args[1], Sort::Int);
          e->sort = Sort::Bool;
          break;
        case BinOp::Eq: case BinOp::Ne: {
          Sort a = check(e->args[0], env);
          Sort b = check(e->args[1], env);
          if (a != b)
            throw DefinitionError(std::string("cannot compare ") + sort_name(a) +
                                      " with " + sort_name(b),
                                  e->span);
          e->sort = Sort::Bool;
          break;
        }
        case BinOp::And: case BinOp::Or: case BinOp::Imp:
          want(e->args[0], Sort::Bool);
          want(e->args[1], Sort::Bool);
          e->sort = Sort::Bool;
          break;
      }
      break;
    }
    case ExprKind::Ite: {
      want(e->args[0], Sort::Bool);
      Sort t = check(e->args[1], env);
      Sort f = check(e->args[2], env);
      if (t != f)
        throw DefinitionError("conditional branches have different sorts", e->span);
      e->sort = t;
      break;
    }
    case ExprKind::Nil: e->sort = Sort::Trace; break;
    case ExprKind::Snoc:
      want(e->args[0], Sort::Trace);
      want(e->args[1], Sort::Event);
      e->sort = Sort::Trace;
      break;
    case ExprKind::Cat:
      want(e->args[0], Sort::Trace);
      want(e->args[1], Sort::Trace);
      e->sort = Sort::Trace;
      break;
    case ExprKind::EventApp: {
      const EventDecl* d = program_.find_event(e->name);
      if (!d)
        throw DefinitionError("undeclared event constructor '" + e->name + "'", e->span);
      if (static_cast<int>(e->args.size()) != d->arity)
        throw DefinitionError("event '" + e->name + "' expects " +
                                  std::to_string(d->arity) + " field(s)",
                              e->span);
      for (const auto& a : e->args) want(a, Sort::Int);
      e->sort = Sort::Event;
      break;
    }
    case ExprKind::Len:
      want(e->args[0], Sort::Trace);
      e->sort = Sort::Int;
      break;
    case ExprKind::Sum:
      want(e->args[0], Sort::Trace);
      for (const auto& d : program_.events)
        if (d.arity != 1)
          throw DefinitionError(
              "sum over traces requires every event to carry exactly one "
              "integer field; '" + d.name + "' has " + std::to_string(d.arity),
              e->span);
      e->sort = Sort::Int;
      break;
    case ExprKind::Contains:
      want(e->args[0], Sort::Trace);
      want(e->args[1], Sort::Event);
      e->sort = Sort::Bool;
      break;
    case ExprKind::CurrentTrace:
      e->sort = Sort::Trace;
      break;
    case ExprKind::Attacker:
      e->sort = Sort::Label;
      break;
  }
  return e->sort;
}

void SortChecker::check(const AssertionPtr& ap, std::map<std::string, Sort>& env) const {
  if (!ap) return;
  const Assertion* a = ap.get();
  switch (a->kind) {
    case AssertKind::Pure: {
      Sort s = check(a->e1, env);
      if (s != Sort::Bool)
        throw DefinitionError("pure assertion must be boolean", a->span);
      break;
    }
    case AssertKind::Classify: {
      check(a->e1, env);
      Sort l = check(a->e2, env);
      if (l != Sort::Label)
        throw DefinitionError("right-hand side of '::' must be a label", a->span);
      break;
    }
    case AssertKind::Emp:
      break;
    case AssertKind::PointsTo: {
      Sort p = check(a->e1, env);
      Sort v = check(a->e2, env);
      if (p != Sort::Int || v != Sort::Int)
        throw DefinitionError("points-to relates integer address and value", a->span);
      break;
    }
    case AssertKind::Star:
    case AssertKind::Imp:
      check(a->a1, env);
      check(a->a2, env);
      break;
    case AssertKind::Exists:
    case AssertKind::Forall: {
      auto saved = env.find(a->name) != env.end()
                       ? std::optional<Sort>(env[a->name])
                       : std::nullopt;
      env[a->name] = a->binder_sort;
      check(a->a1, env);
      if (saved)
        env[a->name] = *saved;
      else
        env.erase(a->name);
      break;
    }
    case AssertKind::History: {
      Sort t = check(a->e1, env);
      if (t != Sort::Trace)
        throw DefinitionError("History expects a trace expression", a->span);
      break;
    }
    case AssertKind::PredApp: {
      if (!program_.find_lock(a->name))
        throw DefinitionError("unknown predicate '" + a->name + "'", a->span);
      for (const auto& e : a->args) check(e, env);
      break;
    }
  }
}

void SortChecker::check_command(const CommandPtr& c,
                                std::map<std::string, Sort>& env) const {
  if (!c) return;
  auto want_int = [&](const ExprPtr& e) {
    if (check(e, env) != Sort::Int)
      throw DefinitionError("expected an integer expression", e->span);
  };
  auto want_guard = [&](const ExprPtr& e) {
    Sort s = check(e, env);
    // Guards follow the boolean cast of the semantics: nonzero means true.
    if (s != Sort::Bool && s != Sort::Int)
      throw DefinitionError("expected a boolean or integer guard", e->span);
  };
  switch (c->kind) {
    case CmdKind::Skip: break;
    case CmdKind::Assign: {
      Sort s = check(c->e1, env);
      if (s != Sort::Int && s != Sort::Bool)
        throw DefinitionError("only integer/boolean values can be assigned", c->span);
      env[c->var] = Sort::Int;
      break;
    }
    case CmdKind::Load:
      want_int(c->e1);
      env[c->var] = Sort::Int;
      break;
    case CmdKind::Store:
      want_int(c->e1);
      want_int(c->e2);
      break;
    case CmdKind::LockCmd:
    case CmdKind::UnlockCmd:
      if (!program_.find_lock(c->var))
        throw DefinitionError("undeclared lock '" + c->var + "'", c->span);
      break;
    case CmdKind::Seq:
      check_command(c->c1, env);
      check_command(c->c2, env);
      break;
    case CmdKind::Par:
      check(c->pre1, env);
      check(c->post1, env);
      check(c->pre2, env);
      check(c->post2, env);
      check_command(c->c1, env);
      check_command(c->c2, env);
      break;
    case CmdKind::If:
      want_guard(c->e1);
      check_command(c->c1, env);
      check_command(c->c2, env);
      break;
    case CmdKind::While:
      want_guard(c->e1);
      check(c->inv, env);
      check_command(c->c1, env);
      break;
    case CmdKind::Assume:
      if (!is_pure(c->inv))
        throw DefinitionError("assume body must be pure", c->span);
      check(c->inv, env);
      break;
    case CmdKind::Output: {
      Sort l = check(c->e1, env);
      if (l != Sort::Label)
        throw DefinitionError("out[..] expects a label expression", c->span);
      Sort v = check(c->e2, env);
      if (v != Sort::Int && v != Sort::Bool)
        throw DefinitionError("out(..) expects an integer value", c->span);
      break;
    }
    case CmdKind::TraceEmit: {
      Sort s = check(c->e1, env);
      if (s != Sort::Event)
        throw DefinitionError("trace(..) expects an event", c->span);
      break;
    }
    case CmdKind::AssertCmd:
      check(c->inv, env);
      break;
    case CmdKind::SplitCmd:
      want_guard(c->e1);
      break;
  }
}

void SortChecker::check_program() const {
  for (const auto& l : program_.locks) {
    std::map<std::string, Sort> env;
    check(l.invariant, env);
  }
  for (const auto& p : program_.policies) {
    std::map<std::string, Sort> env;
    env[p.trace_var] = Sort::Trace;
    for (const auto& x : p.params) env[x] = Sort::Int;
    if (check(p.when, env) != Sort::Bool)
      throw DefinitionError("policy when-condition must be boolean", p.span);
    check(p.release, env);
    if (!is_pure(p.release))
      throw DefinitionError("policy release formula must be pure", p.span);
    if (is_relational(mk::pure(p.when)))
      throw DefinitionError("policy when-condition must be non-relational", p.span);
    std::set<std::string> allowed(p.params.begin(), p.params.end());
    allowed.insert(p.trace_var);
    std::set<std::string> used = free_vars(mk::pure(p.when));
    free_vars(p.release, used);
    for (const auto& v : used)
      if (!allowed.count(v))
        throw DefinitionError("policy '" + p.name + "' mentions foreign variable '" +
                                  v + "'",
                              p.span);
  }
  for (const auto& pr : program_.procs) {
    std::map<std::string, Sort> env;
    check(pr.requires_, env);
    check_command(pr.body, env);
    check(pr.ensures_, env);
  }
}

}  // namespace vdc
