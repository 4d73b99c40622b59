#include "vdc/releval.hpp"

#include <functional>

namespace vdc {

namespace {

constexpr int kMaxPredicateDepth = 8;

Value eval_side(const RelEvalCtx& ctx, const Store& s, const TraceVal* ghost,
                const ExprPtr& e, const Level* att = nullptr) {
  EvalEnv env;
  env.store = &s;
  env.ghost = ghost;
  env.attacker = att;
  return eval_expr(env, e, *ctx.lattice);
}

struct PureEnv {
  const Store* s;
  const TraceVal* g;
  const Store* s2;
  const TraceVal* g2;
};

std::vector<Value> sort_values(const RelEvalCtx& ctx, Sort sort) {
  if (!ctx.domains)
    throw CapabilityError("quantifier encountered but no witness domains configured");
  const WitnessDomains& d = *ctx.domains;
  std::vector<Value> out;
  switch (sort) {
    case Sort::Int:
      for (long long v = d.lo; v <= d.hi; ++v) out.push_back(Value(v));
      break;
    case Sort::Bool:
      out.push_back(Value(0));
      out.push_back(Value(1));
      break;
    case Sort::Label:
      for (int l = 0; l < ctx.lattice->size(); ++l) out.push_back(Value::of_level(l));
      break;
    case Sort::Event: {
      if (!ctx.events || ctx.events->empty())
        throw CapabilityError("event witness requested but no events are declared");
      for (const auto& decl : *ctx.events) {
        std::vector<long long> fields(decl.arity, d.lo);
        while (true) {
          EventVal ev;
          ev.ctor = decl.name;
          ev.fields = fields;
          out.push_back(Value::of_event(ev));
          int i = 0;
          for (; i < decl.arity; ++i) {
            if (fields[i] < d.hi) {
              ++fields[i];
              break;
            }
            fields[i] = d.lo;
          }
          if (i == decl.arity) break;
          if (decl.arity == 0) break;
        }
      }
      break;
    }
    case Sort::Trace: {
      std::vector<Value> events = sort_values(ctx, Sort::Event);
      std::vector<TraceVal> layer{{}};
      out.push_back(Value::of_trace({}));
      for (int n = 1; n <= d.max_trace_len; ++n) {
        std::vector<TraceVal> next;
        for (const auto& t : layer)
          for (const auto& ev : events) {
            TraceVal t2 = t;
            t2.push_back(ev.as_event());
            out.push_back(Value::of_trace(t2));
            next.push_back(std::move(t2));
          }
        layer = std::move(next);
      }
      break;
    }
  }
  return out;
}

// Pull candidate witnesses for an existential binder out of the body: values
// determined by points-to cells, History and defining equalities. A hint
// found in star-positive position is *forced*: any satisfying witness must
// take that value, so the search never needs to fall back to enumeration.
// Hints under an implication are only suggestions.
void witness_hints(const RelEvalCtx& ctx, const AssertionPtr& a, const std::string& x,
                   const Store& s, const TraceVal* ghost, const Heap& h,
                   bool positive, std::vector<Value>& out, bool& forced) {
  if (!a) return;
  auto is_var_x = [&](const ExprPtr& e) {
    return e && e->kind == ExprKind::Var && e->name == x;
  };
  auto try_eval_hint = [&](const ExprPtr& e) {
    if (free_vars(e).count(x)) return false;
    try {
      out.push_back(eval_side(ctx, s, ghost, e));
      return true;
    } catch (const std::runtime_error&) {
      return false;
    }
  };
  switch (a->kind) {
    case AssertKind::PointsTo:
      if (is_var_x(a->e2) && !free_vars(a->e1).count(x)) {
        try {
          long long addr = eval_side(ctx, s, ghost, a->e1).as_int();
          auto it = h.find(addr);
          if (it != h.end()) {
            out.push_back(Value(it->second));
            forced |= positive;
          } else {
            // The cell is absent: in positive position the atom (and thus
            // the body) is unsatisfiable for any witness.
            forced |= positive;
          }
        } catch (const std::runtime_error&) {
        }
      }
      break;
    case AssertKind::History:
      if (is_var_x(a->e1) && ghost) {
        out.push_back(Value::of_trace(*ghost));
        forced |= positive;
      }
      break;
    case AssertKind::Pure:
      if (a->e1 && a->e1->kind == ExprKind::Binary && a->e1->bin_op == BinOp::Eq) {
        if (is_var_x(a->e1->args[0]) && try_eval_hint(a->e1->args[1]))
          forced |= positive;
        else if (is_var_x(a->e1->args[1]) && try_eval_hint(a->e1->args[0]))
          forced |= positive;
      }
      break;
    case AssertKind::Star:
      witness_hints(ctx, a->a1, x, s, ghost, h, positive, out, forced);
      witness_hints(ctx, a->a2, x, s, ghost, h, positive, out, forced);
      break;
    case AssertKind::Imp:
      witness_hints(ctx, a->a1, x, s, ghost, h, false, out, forced);
      witness_hints(ctx, a->a2, x, s, ghost, h, false, out, forced);
      break;
    case AssertKind::Exists:
    case AssertKind::Forall:
      // Star-positivity survives quantifiers (shadowing stops the search);
      // only implications make hints conditional.
      if (a->name != x)
        witness_hints(ctx, a->a1, x, s, ghost, h, positive, out, forced);
      break;
    default:
      break;
  }
}

bool holds_pure_rec(const RelEvalCtx& ctx, Level att, const PureEnv& env,
                    const AssertionPtr& rho);

bool classify_holds(const RelEvalCtx& ctx, Level att, const PureEnv& env,
                    const AssertionPtr& a) {
  Level l1 = eval_side(ctx, *env.s, env.g, a->e2, &att).as_level();
  Level l2 = eval_side(ctx, *env.s2, env.g2, a->e2, &att).as_level();
  if (!(ctx.lattice->leq(l1, att) && ctx.lattice->leq(l2, att))) return true;
  Value v1 = eval_side(ctx, *env.s, env.g, a->e1, &att);
  Value v2 = eval_side(ctx, *env.s2, env.g2, a->e1, &att);
  return v1 == v2;
}

bool holds_pure_rec(const RelEvalCtx& ctx, Level att, const PureEnv& env,
                    const AssertionPtr& rho) {
  if (!rho) throw DefinitionError("null assertion");
  switch (rho->kind) {
    case AssertKind::Pure:
      return eval_side(ctx, *env.s, env.g, rho->e1, &att).truthy() &&
             eval_side(ctx, *env.s2, env.g2, rho->e1, &att).truthy();
    case AssertKind::Classify:
      return classify_holds(ctx, att, env, rho);
    case AssertKind::Emp:
      return true;
    case AssertKind::Star:
      return holds_pure_rec(ctx, att, env, rho->a1) &&
             holds_pure_rec(ctx, att, env, rho->a2);
    case AssertKind::Imp:
      return !holds_pure_rec(ctx, att, env, rho->a1) ||
             holds_pure_rec(ctx, att, env, rho->a2);
    case AssertKind::Exists: {
      std::vector<Value> vals = sort_values(ctx, rho->binder_sort);
      for (const auto& v : vals) {
        Store s1 = *env.s;
        s1[rho->name] = v;
        for (const auto& v2 : vals) {
          Store s2 = *env.s2;
          s2[rho->name] = v2;
          PureEnv inner{&s1, env.g, &s2, env.g2};
          if (holds_pure_rec(ctx, att, inner, rho->a1)) return true;
        }
      }
      return false;
    }
    case AssertKind::Forall: {
      std::vector<Value> vals = sort_values(ctx, rho->binder_sort);
      for (const auto& v : vals) {
        Store s1 = *env.s;
        s1[rho->name] = v;
        for (const auto& v2 : vals) {
          Store s2 = *env.s2;
          s2[rho->name] = v2;
          PureEnv inner{&s1, env.g, &s2, env.g2};
          if (!holds_pure_rec(ctx, att, inner, rho->a1)) return false;
        }
      }
      return true;
    }
    case AssertKind::PointsTo:
    case AssertKind::History:
    case AssertKind::PredApp:
      throw UsageError("holds_pure requires a pure assertion");
  }
  return false;
}

// All sub-heaps of h (domains are tiny in oracle instances).
std::vector<Heap> subheaps(const Heap& h) {
  std::vector<long long> keys;
  for (const auto& [k, v] : h) {
    (void)v;
    keys.push_back(k);
  }
  size_t n = keys.size();
  if (n > 16) throw CapabilityError("heap too large for star splitting");
  std::vector<Heap> out;
  for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
    Heap sub;
    for (size_t i = 0; i < n; ++i)
      if (mask & (size_t{1} << i)) sub[keys[i]] = h.at(keys[i]);
    out.push_back(std::move(sub));
  }
  return out;
}

Heap heap_minus(const Heap& h, const Heap& sub) {
  Heap out = h;
  for (const auto& [k, v] : sub) {
    (void)v;
    out.erase(k);
  }
  return out;
}

bool holds_rec(const RelEvalCtx& ctx, const StatePair& pair, const AssertionPtr& P,
               int depth);

void flatten_star(const AssertionPtr& a, std::vector<AssertionPtr>& out) {
  if (a->kind == AssertKind::Star) {
    flatten_star(a->a1, out);
    flatten_star(a->a2, out);
  } else {
    out.push_back(a);
  }
}

// Star satisfaction with deterministic footprints: points-to atoms claim the
// cell their evaluated address names; heap-free atoms claim nothing; the
// remainder goes to complex children (quantifiers, implications, predicate
// applications). Only two or more complex children force a split search.
bool holds_star(const RelEvalCtx& ctx, const StatePair& pair, const AssertionPtr& P,
                int depth) {
  std::vector<AssertionPtr> atoms;
  flatten_star(P, atoms);

  Heap rem1 = pair.major.heap, rem2 = pair.minor.heap;
  std::vector<AssertionPtr> flat, complex_atoms;
  for (const auto& a : atoms) {
    switch (a->kind) {
      case AssertKind::PointsTo: {
        try {
          long long p1 = eval_side(ctx, pair.major.store, &pair.major.ghost, a->e1,
                                   &pair.attacker)
                             .as_int();
          long long v1 = eval_side(ctx, pair.major.store, &pair.major.ghost, a->e2,
                                   &pair.attacker)
                             .as_int();
          long long p2 = eval_side(ctx, pair.minor.store, &pair.minor.ghost, a->e1,
                                   &pair.attacker)
                             .as_int();
          long long v2 = eval_side(ctx, pair.minor.store, &pair.minor.ghost, a->e2,
                                   &pair.attacker)
                             .as_int();
          auto it1 = rem1.find(p1);
          auto it2 = rem2.find(p2);
          if (it1 == rem1.end() || it1->second != v1) return false;
          if (it2 == rem2.end() || it2->second != v2) return false;
          rem1.erase(it1);
          rem2.erase(it2);
        } catch (const EvalFault&) {
          return false;
        }
        break;
      }
      case AssertKind::Pure:
      case AssertKind::Classify:
      case AssertKind::Emp:
      case AssertKind::History:
        flat.push_back(a);
        break;
      default:
        complex_atoms.push_back(a);
        break;
    }
  }

  // Heap-free atoms hold on their empty component.
  for (const auto& a : flat) {
    StatePair empty = pair;
    empty.major.heap.clear();
    empty.minor.heap.clear();
    if (!holds_rec(ctx, empty, a, depth)) return false;
  }

  if (complex_atoms.empty()) return rem1.empty() && rem2.empty();
  if (complex_atoms.size() == 1) {
    StatePair rest = pair;
    rest.major.heap = std::move(rem1);
    rest.minor.heap = std::move(rem2);
    return holds_rec(ctx, rest, complex_atoms[0], depth);
  }
  // General split search over the remaining cells, first child at a time.
  AssertionPtr head = complex_atoms[0];
  AssertionPtr tail = complex_atoms[1];
  for (size_t i = 2; i < complex_atoms.size(); ++i)
    tail = mk::star(tail, complex_atoms[i]);
  for (const auto& h1 : subheaps(rem1)) {
    Heap h2 = heap_minus(rem1, h1);
    for (const auto& h1b : subheaps(rem2)) {
      Heap h2b = heap_minus(rem2, h1b);
      StatePair left = pair;
      left.major.heap = h1;
      left.minor.heap = h1b;
      if (!holds_rec(ctx, left, head, depth)) continue;
      StatePair right = pair;
      right.major.heap = h2;
      right.minor.heap = h2b;
      if (holds_rec(ctx, right, tail, depth)) return true;
    }
  }
  return false;
}

bool holds_exists(const RelEvalCtx& ctx, const StatePair& pair, const AssertionPtr& P,
                  int depth) {
  std::vector<Value> hints1, hints2;
  bool forced1 = false, forced2 = false;
  witness_hints(ctx, P->a1, P->name, pair.major.store, &pair.major.ghost,
                pair.major.heap, true, hints1, forced1);
  witness_hints(ctx, P->a1, P->name, pair.minor.store, &pair.minor.ghost,
                pair.minor.heap, true, hints2, forced2);
  auto attempt = [&](const Value& v1, const Value& v2) {
    StatePair p2 = pair;
    p2.major.store[P->name] = v1;
    p2.minor.store[P->name] = v2;
    return holds_rec(ctx, p2, P->a1, depth);
  };
  std::vector<Value> all;
  auto side_candidates = [&](bool forced, std::vector<Value>& hints)
      -> const std::vector<Value>& {
    if (forced) return hints;
    if (all.empty()) all = sort_values(ctx, P->binder_sort);
    for (const auto& h : hints) all.push_back(h);
    return all;
  };
  // Forced sides have a complete candidate list; otherwise hints are merely
  // tried alongside the enumerated domain.
  const std::vector<Value>& c1 = side_candidates(forced1, hints1);
  const std::vector<Value>& c2 = side_candidates(forced2, hints2);
  for (const auto& v1 : c1)
    for (const auto& v2 : c2)
      if (attempt(v1, v2)) return true;
  return false;
}

bool holds_rec(const RelEvalCtx& ctx, const StatePair& pair, const AssertionPtr& P,
               int depth) {
  if (!P) throw DefinitionError("null assertion");
  const RelState& a = pair.major;
  const RelState& b = pair.minor;
  switch (P->kind) {
    case AssertKind::Pure:
    case AssertKind::Classify: {
      if (!a.heap.empty() || !b.heap.empty()) return false;  // pure imposes emp
      PureEnv env{&a.store, &a.ghost, &b.store, &b.ghost};
      return holds_pure_rec(ctx, pair.attacker, env, P);
    }
    case AssertKind::Emp:
      return a.heap.empty() && b.heap.empty();
    case AssertKind::PointsTo: {
      try {
        long long p1 = eval_side(ctx, a.store, &a.ghost, P->e1).as_int();
        long long v1 = eval_side(ctx, a.store, &a.ghost, P->e2).as_int();
        long long p2 = eval_side(ctx, b.store, &b.ghost, P->e1).as_int();
        long long v2 = eval_side(ctx, b.store, &b.ghost, P->e2).as_int();
        return a.heap == Heap{{p1, v1}} && b.heap == Heap{{p2, v2}};
      } catch (const EvalFault&) {
        return false;
      }
    }
    case AssertKind::History: {
      if (!a.heap.empty() || !b.heap.empty()) return false;
      try {
        TraceVal t1 = eval_side(ctx, a.store, &a.ghost, P->e1).as_trace();
        TraceVal t2 = eval_side(ctx, b.store, &b.ghost, P->e1).as_trace();
        return t1 == a.ghost && t2 == b.ghost;
      } catch (const EvalFault&) {
        return false;
      }
    }
    case AssertKind::Star:
      return holds_star(ctx, pair, P, depth);
    case AssertKind::Imp:
      return !holds_rec(ctx, pair, P->a1, depth) || holds_rec(ctx, pair, P->a2, depth);
    case AssertKind::Exists:
      return holds_exists(ctx, pair, P, depth);
    case AssertKind::Forall: {
      std::vector<Value> vals = sort_values(ctx, P->binder_sort);
      for (const auto& v1 : vals)
        for (const auto& v2 : vals) {
          StatePair p2 = pair;
          p2.major.store[P->name] = v1;
          p2.minor.store[P->name] = v2;
          if (!holds_rec(ctx, p2, P->a1, depth)) return false;
        }
      return true;
    }
    case AssertKind::PredApp: {
      if (!ctx.predicates)
        throw DefinitionError("no predicate definitions registered");
      auto it = ctx.predicates->find(P->name);
      if (it == ctx.predicates->end())
        throw DefinitionError("unregistered predicate '" + P->name + "'");
      if (depth >= kMaxPredicateDepth)
        throw DefinitionError("recursive predicate '" + P->name +
                              "' has no concrete evaluation");
      return holds_rec(ctx, pair, it->second, depth + 1);
    }
  }
  return false;
}

}  // namespace

std::vector<Value> values_of_sort(const RelEvalCtx& ctx, Sort s) {
  return sort_values(ctx, s);
}

bool holds_pure(const RelEvalCtx& ctx, Level attacker, const Store& s,
                const TraceVal* ghost, const Store& s2, const TraceVal* ghost2,
                const AssertionPtr& rho) {
  if (!is_pure(rho)) throw UsageError("holds_pure requires a pure assertion");
  PureEnv env{&s, ghost, &s2, ghost2};
  return holds_pure_rec(ctx, attacker, env, rho);
}

bool holds_pure(const RelEvalCtx& ctx, Level attacker, const Store& s,
                const Store& s2, const AssertionPtr& rho) {
  return holds_pure(ctx, attacker, s, nullptr, s2, nullptr, rho);
}

bool holds(const RelEvalCtx& ctx, const StatePair& pair, const AssertionPtr& P) {
  return holds_rec(ctx, pair, P, 0);
}

}  // namespace vdc
