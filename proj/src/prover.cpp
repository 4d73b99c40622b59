// Built-in validity engine for pure relational entailments.
//
// The decision pipeline: enumerate label-sorted symbols (including the
// attacker) over the finite carrier; transcribe the two-state assertion
// semantics into a one-sorted formula over side-indexed copies of every
// variable; normalize trace functions over explicit constructors; then
// refute hypothesis /\ not goal with a small tableau whose leaves are closed
// by congruence closure plus Fourier-Motzkin over the integers.

#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "vdc/entail.hpp"
#include "vdc/parser.hpp"

namespace vdc {

namespace {

constexpr int kMaxBranches = 200000;
constexpr int kMaxInstantiations = 256;
constexpr size_t kMaxFmConstraints = 2000;
constexpr int kMaxFmVars = 24;

// ---------------------------------------------------------------------------
// Trace-function normalization
// ---------------------------------------------------------------------------

ExprPtr normalize(const ExprPtr& e);

ExprPtr norm_children(const ExprPtr& e) {
  bool changed = false;
  std::vector<ExprPtr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) {
    auto a2 = normalize(a);
    changed |= (a2 != a);
    args.push_back(a2);
  }
  if (!changed) return e;
  auto n = std::make_shared<Expr>(*e);
  n->args = std::move(args);
  return n;
}

bool is_int_lit(const ExprPtr& e, long long* v = nullptr) {
  if (e->kind == ExprKind::IntLit || e->kind == ExprKind::BoolLit) {
    if (v) *v = e->int_val;
    return true;
  }
  return false;
}

ExprPtr normalize(const ExprPtr& e0) {
  ExprPtr e = norm_children(e0);
  switch (e->kind) {
    case ExprKind::Len: {
      const ExprPtr& t = e->args[0];
      if (t->kind == ExprKind::Nil) return mk::int_lit(0);
      if (t->kind == ExprKind::Snoc)
        return normalize(
            mk::binary(BinOp::Add, mk::len(t->args[0]), mk::int_lit(1)));
      if (t->kind == ExprKind::Cat)
        return normalize(
            mk::binary(BinOp::Add, mk::len(t->args[0]), mk::len(t->args[1])));
      return e;
    }
    case ExprKind::Sum: {
      const ExprPtr& t = e->args[0];
      if (t->kind == ExprKind::Nil) return mk::int_lit(0);
      if (t->kind == ExprKind::Snoc) {
        const ExprPtr& ev = t->args[1];
        ExprPtr payload;
        if (ev->kind == ExprKind::EventApp && ev->args.size() == 1)
          payload = ev->args[0];
        else
          return e;  // opaque event: leave the whole application residual
        return normalize(mk::binary(BinOp::Add, mk::sum(t->args[0]), payload));
      }
      if (t->kind == ExprKind::Cat)
        return normalize(
            mk::binary(BinOp::Add, mk::sum(t->args[0]), mk::sum(t->args[1])));
      return e;
    }
    case ExprKind::Contains: {
      const ExprPtr& t = e->args[0];
      if (t->kind == ExprKind::Nil) return mk::bool_lit(false);
      if (t->kind == ExprKind::Snoc)
        return normalize(mk::binary(
            BinOp::Or, mk::contains(t->args[0], e->args[1]),
            mk::binary(BinOp::Eq, t->args[1], e->args[1])));
      if (t->kind == ExprKind::Cat)
        return normalize(mk::binary(BinOp::Or, mk::contains(t->args[0], e->args[1]),
                                    mk::contains(t->args[1], e->args[1])));
      return e;
    }
    case ExprKind::Cat: {
      if (e->args[0]->kind == ExprKind::Nil) return e->args[1];
      if (e->args[1]->kind == ExprKind::Nil) return e->args[0];
      if (e->args[1]->kind == ExprKind::Snoc)  // cat(a, snoc(b, x)) = snoc(cat(a,b), x)
        return normalize(mk::snoc(mk::cat(e->args[0], e->args[1]->args[0]),
                                  e->args[1]->args[1]));
      return e;
    }
    case ExprKind::Binary: {
      long long a, b;
      const ExprPtr& x = e->args[0];
      const ExprPtr& y = e->args[1];
      if (e->bin_op == BinOp::Eq || e->bin_op == BinOp::Ne) {
        bool neg = e->bin_op == BinOp::Ne;
        auto wrap = [&](ExprPtr r) { return neg ? mk::unary(UnOp::Not, r) : r; };
        if (x->sort == Sort::Event && x->kind == ExprKind::EventApp &&
            y->kind == ExprKind::EventApp) {
          if (x->name != y->name) return wrap(mk::bool_lit(false));
          ExprPtr acc = mk::bool_lit(true);
          for (size_t i = 0; i < x->args.size(); ++i)
            acc = mk::binary(BinOp::And, acc,
                             mk::binary(BinOp::Eq, x->args[i], y->args[i]));
          return normalize(wrap(acc));
        }
        if (x->sort == Sort::Trace) {
          if (x->kind == ExprKind::Nil && y->kind == ExprKind::Nil)
            return wrap(mk::bool_lit(true));
          if ((x->kind == ExprKind::Nil && y->kind == ExprKind::Snoc) ||
              (x->kind == ExprKind::Snoc && y->kind == ExprKind::Nil))
            return wrap(mk::bool_lit(false));
          if (x->kind == ExprKind::Snoc && y->kind == ExprKind::Snoc)
            return normalize(wrap(
                mk::binary(BinOp::And, mk::binary(BinOp::Eq, x->args[0], y->args[0]),
                           mk::binary(BinOp::Eq, x->args[1], y->args[1]))));
        }
      }
      if (is_int_lit(x, &a) && is_int_lit(y, &b)) {
        switch (e->bin_op) {
          case BinOp::Add: return mk::int_lit(a + b);
          case BinOp::Sub: return mk::int_lit(a - b);
          case BinOp::Mul: return mk::int_lit(a * b);
          case BinOp::Div: if (b != 0) return mk::int_lit(div_euclid(a, b)); break;
          case BinOp::Mod: if (b != 0) return mk::int_lit(mod_euclid(a, b)); break;
          case BinOp::Eq: return mk::bool_lit(a == b);
          case BinOp::Ne: return mk::bool_lit(a != b);
          case BinOp::Lt: return mk::bool_lit(a < b);
          case BinOp::Le: return mk::bool_lit(a <= b);
          case BinOp::Gt: return mk::bool_lit(a > b);
          case BinOp::Ge: return mk::bool_lit(a >= b);
          case BinOp::And: return mk::bool_lit(a && b);
          case BinOp::Or: return mk::bool_lit(a || b);
          case BinOp::Imp: return mk::bool_lit(!a || b);
        }
      }
      // Unit laws keep instantiated formulas small enough for the tableau.
      long long u;
      switch (e->bin_op) {
        case BinOp::And:
          if (is_int_lit(x, &u)) return u ? y : mk::bool_lit(false);
          if (is_int_lit(y, &u)) return u ? x : mk::bool_lit(false);
          break;
        case BinOp::Or:
          if (is_int_lit(x, &u)) return u ? mk::bool_lit(true) : y;
          if (is_int_lit(y, &u)) return u ? mk::bool_lit(true) : x;
          break;
        case BinOp::Imp:
          if (is_int_lit(x, &u)) return u ? y : mk::bool_lit(true);
          if (is_int_lit(y, &u) && u) return mk::bool_lit(true);
          break;
        case BinOp::Eq:
          if (expr_equal(x, y)) return mk::bool_lit(true);
          break;
        case BinOp::Ne:
          if (expr_equal(x, y)) return mk::bool_lit(false);
          break;
        case BinOp::Le:
        case BinOp::Ge:
          if (expr_equal(x, y)) return mk::bool_lit(true);
          break;
        case BinOp::Lt:
        case BinOp::Gt:
          if (expr_equal(x, y)) return mk::bool_lit(false);
          break;
        default:
          break;
      }
      return e;
    }
    case ExprKind::Ite: {
      long long c;
      if (is_int_lit(e->args[0], &c)) return c ? e->args[1] : e->args[2];
      return e;
    }
    case ExprKind::Unary: {
      long long a;
      if (is_int_lit(e->args[0], &a))
        return e->un_op == UnOp::Neg ? mk::int_lit(-a) : mk::bool_lit(a == 0);
      return e;
    }
    default:
      return e;
  }
}

// ---------------------------------------------------------------------------
// Side-indexed compilation of relational assertions
// ---------------------------------------------------------------------------

struct CompileCtx {
  const Lattice* lat = nullptr;
  Level attacker = 0;
  const std::map<std::string, Level>* label_assign = nullptr;  // label vars
  std::map<std::string, Sort>* sorts = nullptr;                // grows with skolems
  std::vector<ExprPtr> int_candidates, trace_candidates, event_candidates;
  int fresh = 0;
  bool gave_up = false;  // instantiation budget exceeded; result only sound if unsat
};

ExprPtr side_expr(const ExprPtr& e, int side,
                  const std::map<std::string, Level>& labels, const Lattice& lat) {
  if (!e) return e;
  if (e->kind == ExprKind::Var) {
    if (e->sort == Sort::Label) {
      auto it = labels.find(e->name);
      if (it == labels.end())
        throw CapabilityError("unassigned label variable '" + e->name + "'");
      return mk::label(lat.name(it->second));
    }
    return mk::var(e->name + (side == 1 ? "$1" : "$2"), e->sort);
  }
  if (e->kind == ExprKind::CurrentTrace)
    throw CapabilityError("__tr has no meaning in a pure entailment");
  if (e->kind == ExprKind::Attacker) return e;
  bool changed = false;
  std::vector<ExprPtr> args;
  for (const auto& a : e->args) {
    auto a2 = side_expr(a, side, labels, lat);
    changed |= (a2 != a);
    args.push_back(a2);
  }
  if (!changed) return e;
  auto n = std::make_shared<Expr>(*e);
  n->args = std::move(args);
  return n;
}

// Is the label term at or below the attacker? Conditional labels unfold into
// the boolean structure of the condition on the given side.
ExprPtr leq_att(const CompileCtx& cc, const ExprPtr& label, int side) {
  if (label->kind == ExprKind::Attacker) return mk::bool_lit(true);
  if (label->kind == ExprKind::LabelLit)
    return mk::bool_lit(cc.lat->leq(cc.lat->level(label->name), cc.attacker));
  if (label->kind == ExprKind::Var) {
    auto it = cc.label_assign->find(label->name);
    if (it == cc.label_assign->end())
      throw CapabilityError("unassigned label variable '" + label->name + "'");
    return mk::bool_lit(cc.lat->leq(it->second, cc.attacker));
  }
  if (label->kind == ExprKind::Ite)
    return mk::ite(side_expr(label->args[0], side, *cc.label_assign, *cc.lat),
                   leq_att(cc, label->args[1], side),
                   leq_att(cc, label->args[2], side));
  throw CapabilityError("unsupported label term");
}

void harvest_candidates(CompileCtx& cc, const ExprPtr& e,
                        const std::set<std::string>& bound) {
  if (!e) return;
  std::set<std::string> fv = free_vars(e);
  bool closed = true;
  for (const auto& v : fv)
    if (bound.count(v)) closed = false;
  if (closed) {
    if (e->sort == Sort::Int && cc.int_candidates.size() < 12)
      cc.int_candidates.push_back(e);
    else if (e->sort == Sort::Trace && cc.trace_candidates.size() < 8)
      cc.trace_candidates.push_back(e);
    else if (e->sort == Sort::Event && cc.event_candidates.size() < 8)
      cc.event_candidates.push_back(e);
  }
  for (const auto& a : e->args) harvest_candidates(cc, a, bound);
}

void harvest_candidates(CompileCtx& cc, const AssertionPtr& a,
                        std::set<std::string> bound) {
  if (!a) return;
  if (a->kind == AssertKind::Exists || a->kind == AssertKind::Forall)
    bound.insert(a->name);
  harvest_candidates(cc, a->e1, bound);
  harvest_candidates(cc, a->e2, bound);
  harvest_candidates(cc, a->a1, bound);
  harvest_candidates(cc, a->a2, bound);
}

const std::vector<ExprPtr>& candidates_for(CompileCtx& cc, Sort s) {
  static const std::vector<ExprPtr> empty;
  switch (s) {
    case Sort::Int: return cc.int_candidates;
    case Sort::Trace: return cc.trace_candidates;
    case Sort::Event: return cc.event_candidates;
    default: return empty;
  }
}

// Events of a syntactically explicit snoc chain, innermost first.
void chain_events(const ExprPtr& t, std::vector<ExprPtr>& out) {
  if (!t) return;
  if (t->kind == ExprKind::Snoc) {
    chain_events(t->args[0], out);
    if (t->args[1]->kind == ExprKind::EventApp) out.push_back(t->args[1]);
    return;
  }
  if (t->kind == ExprKind::Cat) {
    chain_events(t->args[0], out);
    chain_events(t->args[1], out);
  }
}

// Matches membership atoms contains(chain, Ctor(x1..xn)) whose arguments are
// quantified variables against the chain's concrete events, yielding full
// instantiation tuples for the binder prefix.
void trigger_tuples_rec(const ExprPtr& e,
                        const std::map<std::string, Sort>& binders,
                        std::vector<std::map<std::string, ExprPtr>>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Contains && e->args[1]->kind == ExprKind::EventApp) {
    const ExprPtr& pattern = e->args[1];
    std::vector<ExprPtr> events;
    chain_events(e->args[0], events);
    for (const auto& ev : events) {
      if (ev->name != pattern->name || ev->args.size() != pattern->args.size())
        continue;
      std::map<std::string, ExprPtr> tuple;
      bool ok = true;
      for (size_t i = 0; i < pattern->args.size() && ok; ++i) {
        const ExprPtr& arg = pattern->args[i];
        if (arg->kind != ExprKind::Var || !binders.count(arg->name)) continue;
        auto it = tuple.find(arg->name);
        if (it == tuple.end())
          tuple[arg->name] = ev->args[i];
        else if (!expr_equal(it->second, ev->args[i]))
          ok = false;
      }
      if (ok && tuple.size() == binders.size()) out.push_back(std::move(tuple));
    }
  }
  for (const auto& c : e->args) trigger_tuples_rec(c, binders, out);
}

void trigger_tuples_rec(const AssertionPtr& a,
                        const std::map<std::string, Sort>& binders,
                        std::vector<std::map<std::string, ExprPtr>>& out) {
  if (!a) return;
  if ((a->kind == AssertKind::Exists || a->kind == AssertKind::Forall) &&
      binders.count(a->name))
    return;  // shadowed region
  trigger_tuples_rec(a->e1, binders, out);
  trigger_tuples_rec(a->e2, binders, out);
  trigger_tuples_rec(a->a1, binders, out);
  trigger_tuples_rec(a->a2, binders, out);
}

std::vector<std::map<std::string, ExprPtr>> trigger_tuples(
    const AssertionPtr& body,
    const std::vector<std::pair<std::string, Sort>>& binders) {
  std::map<std::string, Sort> names(binders.begin(), binders.end());
  std::vector<std::map<std::string, ExprPtr>> out;
  trigger_tuples_rec(body, names, out);
  return out;
}

// Compile a pure relational assertion into a one-sorted boolean expression
// over side-indexed variables. `positive` is the polarity in the refutation
// formula: positive binders are skolemized, negative ones instantiated at
// harvested candidate terms (both directions are sound for refutation).
ExprPtr compile(CompileCtx& cc, const AssertionPtr& a, bool positive) {
  switch (a->kind) {
    case AssertKind::Pure:
      return mk::binary(BinOp::And,
                        side_expr(a->e1, 1, *cc.label_assign, *cc.lat),
                        side_expr(a->e1, 2, *cc.label_assign, *cc.lat));
    case AssertKind::Classify: {
      ExprPtr cond =
          mk::binary(BinOp::And, leq_att(cc, a->e2, 1), leq_att(cc, a->e2, 2));
      ExprPtr agree = mk::binary(BinOp::Eq,
                                 side_expr(a->e1, 1, *cc.label_assign, *cc.lat),
                                 side_expr(a->e1, 2, *cc.label_assign, *cc.lat));
      return mk::binary(BinOp::Imp, cond, agree);
    }
    case AssertKind::Emp:
      return mk::bool_lit(true);
    case AssertKind::Star:
      return mk::binary(BinOp::And, compile(cc, a->a1, positive),
                        compile(cc, a->a2, positive));
    case AssertKind::Imp:
      return mk::binary(BinOp::Imp, compile(cc, a->a1, !positive),
                        compile(cc, a->a2, positive));
    case AssertKind::Exists:
    case AssertKind::Forall: {
      bool is_ex = a->kind == AssertKind::Exists;
      BinOp conn = is_ex ? BinOp::Or : BinOp::And;
      ExprPtr neutral = mk::bool_lit(!is_ex);
      if (a->binder_sort == Sort::Label) {
        // Finite sort: expand exactly over the carrier.
        ExprPtr acc = neutral;
        for (int l = 0; l < cc.lat->size(); ++l) {
          auto body = subst(a->a1, a->name, mk::label(cc.lat->name(l)));
          acc = mk::binary(conn, acc, compile(cc, body, positive));
        }
        return acc;
      }
      // Skolemize when the binder is effectively existential in the
      // refutation formula; otherwise instantiate at candidate terms.
      // Both are sound for proving unsatisfiability.
      if (is_ex == positive) {
        std::string fresh = a->name + "!q" + std::to_string(cc.fresh++);
        (*cc.sorts)[fresh] = a->binder_sort;
        auto body = subst(a->a1, a->name, mk::var(fresh, a->binder_sort));
        return compile(cc, body, positive);
      }
      // Peel a same-kind quantifier prefix and instantiate it with whole
      // tuples: trigger matches first, then a capped cartesian fallback.
      // Tuple-wise instantiation keeps the branch product small when
      // policies quantify several parameters at once.
      std::vector<std::pair<std::string, Sort>> binders;
      AssertionPtr body = a;
      while (body->kind == a->kind && body->binder_sort != Sort::Label) {
        binders.emplace_back(body->name, body->binder_sort);
        body = body->a1;
      }
      std::vector<std::map<std::string, ExprPtr>> tuples =
          trigger_tuples(body, binders);
      {
        // Cartesian fallback over harvested candidates, capped.
        std::vector<std::map<std::string, ExprPtr>> stage{{}};
        for (const auto& [name, sort] : binders) {
          std::vector<std::map<std::string, ExprPtr>> next;
          for (const auto& partial : stage)
            for (const auto& cand : candidates_for(cc, sort)) {
              auto t = partial;
              t[name] = cand;
              next.push_back(std::move(t));
              if (next.size() > 64) break;
            }
          stage = std::move(next);
        }
        for (auto& t : stage) {
          if (tuples.size() >= static_cast<size_t>(kMaxInstantiations)) {
            cc.gave_up = true;
            break;
          }
          tuples.push_back(std::move(t));
        }
      }
      if (tuples.empty()) cc.gave_up = true;
      ExprPtr acc = neutral;
      std::set<std::string> seen;
      int used = 0;
      for (const auto& tuple : tuples) {
        if (tuple.size() != binders.size()) continue;
        AssertionPtr inst = subst_assertion(body, tuple);
        std::string key;
        for (const auto& [name, e] : tuple) key += name + "=" + format_expr(e) + ";";
        if (!seen.insert(key).second) continue;
        if (++used > 24) { cc.gave_up = true; break; }
        acc = mk::binary(conn, acc, compile(cc, inst, positive));
      }
      return acc;
    }
    default:
      throw UsageError("spatial assertion in a pure entailment");
  }
}

// ---------------------------------------------------------------------------
// Congruence closure
// ---------------------------------------------------------------------------

class TermBank {
 public:
  int intern(const ExprPtr& e) {
    std::string key = key_of(e);
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(terms_.size());
    ids_.emplace(std::move(key), id);
    terms_.push_back(e);
    parent_.push_back(id);
    std::vector<int> kids;
    for (const auto& a : e->args) kids.push_back(intern(a));
    children_.push_back(std::move(kids));
    return id;
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Merge classes; returns false on an immediate constructor clash.
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return true;
    parent_[a] = b;
    pending_.push_back({a, b});
    return true;
  }

  // Propagate congruence to a fixpoint; false when two incompatible
  // constructor-headed terms end up identified.
  bool close() {
    bool changed = true;
    while (changed) {
      changed = false;
      std::unordered_map<std::string, int> sigs;
      for (size_t i = 0; i < terms_.size(); ++i) {
        std::string sig = sig_of(static_cast<int>(i));
        auto it = sigs.find(sig);
        if (it == sigs.end()) {
          sigs.emplace(std::move(sig), static_cast<int>(i));
        } else if (find(it->second) != find(static_cast<int>(i))) {
          merge(it->second, static_cast<int>(i));
          changed = true;
        }
      }
    }
    // Constructor compatibility per class.
    std::map<int, int> head;  // class rep -> constructor term id
    for (size_t i = 0; i < terms_.size(); ++i) {
      if (!is_constructor(terms_[i])) continue;
      int r = find(static_cast<int>(i));
      auto it = head.find(r);
      if (it == head.end()) {
        head[r] = static_cast<int>(i);
        continue;
      }
      const ExprPtr& x = terms_[it->second];
      const ExprPtr& y = terms_[i];
      if (x->kind != y->kind) return false;
      if (x->kind == ExprKind::IntLit || x->kind == ExprKind::BoolLit) {
        if (x->int_val != y->int_val) return false;
      } else if (x->kind == ExprKind::EventApp && x->name != y->name) {
        return false;
      } else if (x->kind == ExprKind::LabelLit && x->name != y->name) {
        return false;
      }
    }
    return true;
  }

  const ExprPtr& term(int id) const { return terms_[id]; }
  size_t size() const { return terms_.size(); }

 private:
  static bool is_constructor(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::IntLit:
      case ExprKind::BoolLit:
      case ExprKind::Nil:
      case ExprKind::EventApp:
      case ExprKind::LabelLit:
        return true;
      default:
        return false;
    }
  }

  std::string key_of(const ExprPtr& e) {
    std::string k = std::to_string(static_cast<int>(e->kind)) + "|" + e->name + "|" +
                    std::to_string(e->int_val) + "|" +
                    std::to_string(static_cast<int>(e->bin_op)) + "|" +
                    std::to_string(static_cast<int>(e->un_op));
    for (const auto& a : e->args) k += "#" + std::to_string(intern(a));
    return k;
  }

  std::string sig_of(int id) {
    const ExprPtr& e = terms_[id];
    std::string k = std::to_string(static_cast<int>(e->kind)) + "|" + e->name + "|" +
                    std::to_string(e->int_val) + "|" +
                    std::to_string(static_cast<int>(e->bin_op)) + "|" +
                    std::to_string(static_cast<int>(e->un_op));
    for (int c : children_[id]) k += "#" + std::to_string(find(c));
    return k;
  }

  std::unordered_map<std::string, int> ids_;
  std::vector<ExprPtr> terms_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<std::pair<int, int>> pending_;
};

// ---------------------------------------------------------------------------
// Linear arithmetic (Fourier-Motzkin with integer tightening)
// ---------------------------------------------------------------------------

struct LinCon {
  std::map<int, long long> coef;  // over arithmetic variable ids
  long long cst = 0;              // sum coef*v + cst <= 0
};

long long igcd(long long a, long long b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}

long long floor_div(long long a, long long b) {
  long long q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

bool tighten(LinCon& c) {
  long long g = 0;
  for (auto& [v, k] : c.coef) {
    (void)v;
    g = igcd(g, k);
  }
  if (g == 0) return c.cst <= 0;  // constant constraint
  // sum coef*v <= -cst  =>  sum (coef/g)*v <= floor(-cst/g)
  long long rhs = floor_div(-c.cst, g);
  for (auto& [v, k] : c.coef) {
    (void)v;
    k /= g;
  }
  c.cst = -rhs;
  return true;
}

bool mul_ok(long long a, long long b) {
  if (a == 0 || b == 0) return true;
  long long r = a * b;
  return r / b == a && (r < 0) == ((a < 0) != (b < 0));
}

// True iff the constraint set is infeasible over the integers (sound:
// "false" merely means no contradiction was derived).
bool fm_infeasible(std::vector<LinCon> cons) {
  std::set<int> vars;
  for (auto& c : cons) {
    if (!tighten(c)) return true;
    for (auto& [v, k] : c.coef)
      if (k != 0) vars.insert(v);
  }
  if (vars.size() > static_cast<size_t>(kMaxFmVars)) return false;
  for (int v : vars) {
    std::vector<LinCon> pos, neg, rest;
    for (auto& c : cons) {
      auto it = c.coef.find(v);
      long long k = it == c.coef.end() ? 0 : it->second;
      if (k > 0) pos.push_back(c);
      else if (k < 0) neg.push_back(c);
      else rest.push_back(c);
    }
    if (pos.size() * neg.size() > kMaxFmConstraints) return false;
    for (auto& p : pos)
      for (auto& n : neg) {
        long long a = p.coef.at(v);         // a > 0
        long long b = -n.coef.at(v);        // b > 0
        LinCon c;
        bool overflow = false;
        auto add = [&](const LinCon& src, long long scale) {
          for (auto& [w, k] : src.coef) {
            if (w == v) continue;
            if (!mul_ok(k, scale)) { overflow = true; return; }
            c.coef[w] += k * scale;
          }
          if (!mul_ok(src.cst, scale)) { overflow = true; return; }
          c.cst += src.cst * scale;
        };
        add(p, b);
        if (!overflow) add(n, a);
        if (overflow) continue;  // drop: weaker, still sound
        for (auto it = c.coef.begin(); it != c.coef.end();)
          it = it->second == 0 ? c.coef.erase(it) : std::next(it);
        if (!tighten(c)) return true;
        if (c.coef.empty()) {
          if (c.cst > 0) return true;
          continue;
        }
        rest.push_back(std::move(c));
      }
    if (rest.size() > kMaxFmConstraints) return false;
    cons = std::move(rest);
  }
  for (auto& c : cons)
    if (c.coef.empty() && c.cst > 0) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Tableau
// ---------------------------------------------------------------------------

struct Lit {
  ExprPtr e;
  bool pos;
};

class Tableau {
 public:
  explicit Tableau(const Lattice& lat) : lat_(lat) {}

  // True iff every branch of the formula closes (i.e. the conjunction of the
  // literals is unsatisfiable).
  bool refute(std::vector<Lit> work) {
    branches_ = 0;
    return refute_rec(std::move(work), {});
  }

  bool budget_blown() const { return branches_ > kMaxBranches; }

 private:
  const Lattice& lat_;
  int branches_ = 0;

  static bool is_atom(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::Var:
      case ExprKind::Contains:
        return true;
      case ExprKind::Binary:
        switch (e->bin_op) {
          case BinOp::Eq: case BinOp::Ne:
          case BinOp::Lt: case BinOp::Le: case BinOp::Gt: case BinOp::Ge:
            return true;
          default:
            return false;
        }
      default:
        return false;
    }
  }

  // Find a boolean-valued ite buried in a term position of an atom.
  static ExprPtr find_ite(const ExprPtr& e) {
    if (e->kind == ExprKind::Ite) return e;
    for (const auto& a : e->args) {
      auto r = find_ite(a);
      if (r) return r;
    }
    return nullptr;
  }

  static ExprPtr replace(const ExprPtr& e, const ExprPtr& from, const ExprPtr& to) {
    if (e == from) return to;
    bool changed = false;
    std::vector<ExprPtr> args;
    for (const auto& a : e->args) {
      auto a2 = replace(a, from, to);
      changed |= (a2 != a);
      args.push_back(a2);
    }
    if (!changed) return e;
    auto n = std::make_shared<Expr>(*e);
    n->args = std::move(args);
    return n;
  }

  // Expands non-branching items eagerly and defers disjunctive splits; the
  // theory closure test runs before any split so that one contradicting atom
  // prunes a whole subtree of case distinctions.
  bool refute_rec(std::vector<Lit> work, std::vector<Lit> atoms) {
    if (++branches_ > kMaxBranches) return false;
    std::vector<Lit> deferred;
    while (!work.empty()) {
      Lit l = std::move(work.back());
      work.pop_back();
      const ExprPtr& e = l.e;
      if (e->kind == ExprKind::BoolLit) {
        bool truth = (e->int_val != 0) == l.pos;
        if (!truth) return true;  // branch closed
        continue;
      }
      if (e->kind == ExprKind::Unary && e->un_op == UnOp::Not) {
        work.push_back({e->args[0], !l.pos});
        continue;
      }
      if (e->kind == ExprKind::Binary) {
        BinOp op = e->bin_op;
        const ExprPtr& a = e->args[0];
        const ExprPtr& b = e->args[1];
        if (op == BinOp::And || op == BinOp::Or || op == BinOp::Imp) {
          bool conj = (op == BinOp::And) == l.pos;  // And+ / Or- / Imp- act as both
          Lit la{a, op == BinOp::Imp ? !l.pos : l.pos};
          Lit lb{b, l.pos};
          if (op == BinOp::Imp && !l.pos) la.pos = true, lb.pos = false;
          if (op == BinOp::Imp && l.pos) la.pos = false, lb.pos = true;
          if (conj) {
            work.push_back(la);
            work.push_back(lb);
            continue;
          }
          deferred.push_back(std::move(l));
          continue;
        }
        if (is_atom(e)) {
          bool needs_split = find_ite(e) != nullptr ||
                             ((op == BinOp::Eq || op == BinOp::Ne) &&
                              (a->sort == Sort::Bool ||
                               (a->sort == Sort::Int &&
                                ((op == BinOp::Eq) != l.pos))));
          if (needs_split) {
            deferred.push_back(std::move(l));
          } else {
            atoms.push_back(std::move(l));
          }
          continue;
        }
      }
      if (e->kind == ExprKind::Ite) {
        deferred.push_back(std::move(l));
        continue;
      }
      if (e->kind == ExprKind::Var || e->kind == ExprKind::Contains) {
        if (find_ite(e))
          deferred.push_back(std::move(l));
        else
          atoms.push_back(std::move(l));
        continue;
      }
      throw CapabilityError("unsupported formula node in tableau");
    }

    if (branch_closed(atoms)) return true;
    if (deferred.empty()) return false;

    // Split on one deferred disjunction; the rest ride along.
    Lit l = std::move(deferred.back());
    deferred.pop_back();
    const ExprPtr& e = l.e;
    auto split2 = [&](Lit l1a, Lit l1b, Lit l2a, Lit l2b, bool pair) {
      std::vector<Lit> left = deferred;
      left.push_back(std::move(l1a));
      if (pair) left.push_back(std::move(l1b));
      std::vector<Lit> right = std::move(deferred);
      right.push_back(std::move(l2a));
      if (pair) right.push_back(std::move(l2b));
      return refute_rec(std::move(left), atoms) &&
             refute_rec(std::move(right), std::move(atoms));
    };

    if (e->kind == ExprKind::Ite)
      return split2({e->args[0], true}, {e->args[1], l.pos}, {e->args[0], false},
                    {e->args[2], l.pos}, true);
    if (e->kind == ExprKind::Binary &&
        (e->bin_op == BinOp::And || e->bin_op == BinOp::Or ||
         e->bin_op == BinOp::Imp)) {
      Lit la{e->args[0], e->bin_op == BinOp::Imp ? !l.pos : l.pos};
      Lit lb{e->args[1], l.pos};
      if (e->bin_op == BinOp::Imp && !l.pos) la.pos = true, lb.pos = false;
      if (e->bin_op == BinOp::Imp && l.pos) la.pos = false, lb.pos = true;
      return split2(la, la, lb, lb, false);
    }
    if (auto ite = find_ite(e))
      return split2({ite->args[0], true}, {replace(e, ite, ite->args[1]), l.pos},
                    {ite->args[0], false}, {replace(e, ite, ite->args[2]), l.pos},
                    true);
    if (e->kind == ExprKind::Binary && e->args[0]->sort == Sort::Bool) {
      bool same = (e->bin_op == BinOp::Eq) == l.pos;
      return split2({e->args[0], true}, {e->args[1], same}, {e->args[0], false},
                    {e->args[1], !same}, true);
    }
    if (e->kind == ExprKind::Binary && e->args[0]->sort == Sort::Int) {
      // Integer disequality: split into < and >.
      return split2({mk::binary(BinOp::Lt, e->args[0], e->args[1]), true}, l,
                    {mk::binary(BinOp::Lt, e->args[1], e->args[0]), true}, l, false);
    }
    throw CapabilityError("unsupported deferred literal in tableau");
  }

  // Theory closure: congruence + linear arithmetic over the atom set.
  bool branch_closed(const std::vector<Lit>& atoms) {
    TermBank bank;
    std::vector<std::pair<int, int>> diseq;
    std::vector<std::pair<int, bool>> bools;  // uninterpreted bool terms
    std::vector<Lit> cmps;

    for (const auto& l : atoms) {
      const ExprPtr& e = l.e;
      if (e->kind == ExprKind::Var || e->kind == ExprKind::Contains) {
        bools.emplace_back(bank.intern(e), l.pos);
        continue;
      }
      BinOp op = e->bin_op;
      if (op == BinOp::Eq || op == BinOp::Ne) {
        bool eq = (op == BinOp::Eq) == l.pos;
        if (e->args[0]->sort == Sort::Int) {
          cmps.push_back(l);  // handled arithmetically (and by congruence below)
          if (eq) bank.merge(bank.intern(e->args[0]), bank.intern(e->args[1]));
          else diseq.emplace_back(bank.intern(e->args[0]), bank.intern(e->args[1]));
          continue;
        }
        int x = bank.intern(e->args[0]);
        int y = bank.intern(e->args[1]);
        if (eq) bank.merge(x, y);
        else diseq.emplace_back(x, y);
        continue;
      }
      cmps.push_back(l);
      bank.intern(e->args[0]);
      bank.intern(e->args[1]);
    }

    if (!bank.close()) return true;
    for (auto& [x, y] : diseq)
      if (bank.find(x) == bank.find(y)) return true;
    {
      std::map<int, bool> seen;
      for (auto& [id, pos] : bools) {
        int r = bank.find(id);
        auto it = seen.find(r);
        if (it != seen.end() && it->second != pos) return true;
        seen[r] = pos;
      }
    }

    // Linear layer over congruence classes.
    std::vector<LinCon> cons;
    std::set<int> opaque;  // class reps used as arithmetic variables
    std::function<bool(const ExprPtr&, long long, LinCon&)> lin =
        [&](const ExprPtr& t, long long scale, LinCon& c) -> bool {
      long long v;
      if (is_int_lit(t, &v)) {
        if (!mul_ok(v, scale)) return false;
        c.cst += v * scale;
        return true;
      }
      switch (t->kind) {
        case ExprKind::Unary:
          if (t->un_op == UnOp::Neg) return lin(t->args[0], -scale, c);
          break;
        case ExprKind::Binary:
          if (t->bin_op == BinOp::Add)
            return lin(t->args[0], scale, c) && lin(t->args[1], scale, c);
          if (t->bin_op == BinOp::Sub)
            return lin(t->args[0], scale, c) && lin(t->args[1], -scale, c);
          if (t->bin_op == BinOp::Mul) {
            long long k;
            if (is_int_lit(t->args[0], &k) && mul_ok(k, scale))
              return lin(t->args[1], k * scale, c);
            if (is_int_lit(t->args[1], &k) && mul_ok(k, scale))
              return lin(t->args[0], k * scale, c);
          }
          break;
        default:
          break;
      }
      int var = bank.find(bank.intern(t));
      opaque.insert(var);
      c.coef[var] += scale;
      return true;
    };
    auto add_le = [&](const ExprPtr& a, const ExprPtr& b, long long slack) {
      // a - b + slack <= 0
      LinCon c;
      c.cst = slack;
      if (lin(a, 1, c) && lin(b, -1, c)) cons.push_back(std::move(c));
    };
    for (const auto& l : cmps) {
      const ExprPtr& a = l.e->args[0];
      const ExprPtr& b = l.e->args[1];
      BinOp op = l.e->bin_op;
      bool pos = l.pos;
      if (op == BinOp::Eq || op == BinOp::Ne) {
        bool eq = (op == BinOp::Eq) == pos;
        if (eq) { add_le(a, b, 0); add_le(b, a, 0); }
        // disequalities were split at the tableau level; CC handles leftovers
        continue;
      }
      // normalize to <=
      if (!pos) {
        op = op == BinOp::Lt   ? BinOp::Ge
             : op == BinOp::Le ? BinOp::Gt
             : op == BinOp::Gt ? BinOp::Le
                               : BinOp::Lt;
      }
      switch (op) {
        case BinOp::Le: add_le(a, b, 0); break;
        case BinOp::Lt: add_le(a, b, 1); break;
        case BinOp::Ge: add_le(b, a, 0); break;
        case BinOp::Gt: add_le(b, a, 1); break;
        default: break;
      }
    }

    // Defining facts for opaque terms: len >= 0; Euclidean div/mod by a
    // nonzero literal divisor. The bank may grow while iterating (fresh
    // div/mod companion terms), so index by value.
    for (size_t id = 0; id < bank.size(); ++id) {
      ExprPtr t = bank.term(static_cast<int>(id));
      int rep = bank.find(static_cast<int>(id));
      if (!opaque.count(rep)) continue;
      if (t->kind == ExprKind::Len) {
        LinCon c;  // -len <= 0
        c.coef[rep] = -1;
        cons.push_back(std::move(c));
      }
      long long k;
      if (t->kind == ExprKind::Binary &&
          (t->bin_op == BinOp::Div || t->bin_op == BinOp::Mod) &&
          is_int_lit(t->args[1], &k) && k != 0) {
        // a = k*q + r, 0 <= r < |k|
        ExprPtr a = t->args[0];
        ExprPtr q = t->bin_op == BinOp::Div ? bank.term(static_cast<int>(id))
                                            : mk::binary(BinOp::Div, a, t->args[1]);
        ExprPtr r = t->bin_op == BinOp::Mod ? bank.term(static_cast<int>(id))
                                            : mk::binary(BinOp::Mod, a, t->args[1]);
        LinCon c1, c2;  // a - k q - r = 0 as two inequalities
        bool ok = lin(a, 1, c1) && lin(q, -k, c1) && lin(r, -1, c1);
        c2 = c1;
        for (auto& [v, kk] : c2.coef) kk = -kk;
        c2.cst = -c2.cst;
        if (ok) {
          cons.push_back(c1);
          cons.push_back(c2);
        }
        LinCon lo;  // -r <= 0
        if (lin(r, -1, lo)) cons.push_back(lo);
        LinCon hi;  // r - |k| + 1 <= 0
        hi.cst = 1 - (k > 0 ? k : -k);
        if (lin(r, 1, hi)) cons.push_back(hi);
      }
    }

    return fm_infeasible(std::move(cons));
  }
};

}  // namespace

bool prove_valid_internal(const Entailment& e, const BackendConfig& cfg) {
  if (!cfg.lattice) throw UsageError("backend config lacks a lattice");
  for (const auto& h : e.hyp)
    if (!is_pure(h)) throw UsageError("spatial hypothesis in pure entailment");
  if (!is_pure(e.goal)) throw UsageError("spatial goal in pure entailment");

  // Label-sorted free symbols, enumerated over the carrier.
  std::vector<std::string> label_vars;
  for (const auto& [name, sort] : e.sorts)
    if (sort == Sort::Label) label_vars.push_back(name);

  int n = cfg.lattice->size();
  std::vector<int> idx(label_vars.size() + (e.attacker ? 0 : 1), 0);
  while (true) {
    std::map<std::string, Level> assign;
    Level att = e.attacker ? *e.attacker : idx.back();
    for (size_t i = 0; i < label_vars.size(); ++i) assign[label_vars[i]] = idx[i];

    CompileCtx cc;
    cc.lat = cfg.lattice;
    cc.attacker = att;
    cc.label_assign = &assign;
    std::map<std::string, Sort> sorts = e.sorts;
    cc.sorts = &sorts;
    for (const auto& h : e.hyp) harvest_candidates(cc, h, {});
    harvest_candidates(cc, e.goal, {});
    cc.int_candidates.push_back(mk::int_lit(0));
    cc.int_candidates.push_back(mk::int_lit(1));

    std::vector<Lit> work;
    try {
      for (const auto& h : e.hyp)
        work.push_back({normalize(compile(cc, h, true)), true});
      work.push_back({normalize(compile(cc, e.goal, false)), false});
    } catch (const CapabilityError&) {
      return false;
    }

    Tableau tab(*cfg.lattice);
    bool refuted = tab.refute(work);
    if (std::getenv("VDC_PROVER_DEBUG")) {
      fprintf(stderr, "[prover] att=%d refuted=%d budget=%d\n", att, (int)refuted,
              (int)tab.budget_blown());
      for (const auto& l : work)
        fprintf(stderr, "  %c %s\n", l.pos ? '+' : '-', format_expr(l.e).c_str());
    }
    if (!refuted) return false;

    // Next label assignment.
    if (idx.empty()) break;
    size_t i = 0;
    for (; i < idx.size(); ++i) {
      if (idx[i] + 1 < n) {
        ++idx[i];
        break;
      }
      idx[i] = 0;
    }
    if (i == idx.size()) break;
  }
  return true;
}

}  // namespace vdc
