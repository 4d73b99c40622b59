#include "vdc/value.hpp"

#include <sstream>

namespace vdc {

long long Value::as_int() const {
  if (!is_int()) throw DefinitionError("expected an integer value");
  return std::get<long long>(v);
}

Level Value::as_level() const {
  if (!is_level()) throw DefinitionError("expected a label value");
  return std::get<Level>(v);
}

const EventVal& Value::as_event() const {
  if (!is_event()) throw DefinitionError("expected an event value");
  return std::get<EventVal>(v);
}

const TraceVal& Value::as_trace() const {
  if (!is_trace()) throw DefinitionError("expected a trace value");
  return std::get<TraceVal>(v);
}

std::string Value::str(const Lattice* lat) const {
  if (is_int()) return std::to_string(as_int());
  if (is_level()) return lat ? lat->name(as_level()) : "#" + std::to_string(as_level());
  if (is_event()) {
    std::ostringstream os;
    os << as_event().ctor << "(";
    const auto& fs = as_event().fields;
    for (size_t i = 0; i < fs.size(); ++i) os << (i ? "," : "") << fs[i];
    os << ")";
    return os.str();
  }
  return trace_str(as_trace());
}

std::string trace_str(const TraceVal& t) {
  std::ostringstream os;
  os << "<";
  for (size_t i = 0; i < t.size(); ++i) {
    if (i) os << ",";
    os << Value::of_event(t[i]).str();
  }
  os << ">";
  return os.str();
}

bool heaps_disjoint(const Heap& a, const Heap& b) {
  const Heap& small = a.size() <= b.size() ? a : b;
  const Heap& big = a.size() <= b.size() ? b : a;
  for (const auto& [k, v] : small) {
    (void)v;
    if (big.count(k)) return false;
  }
  return true;
}

Heap heap_union(const Heap& a, const Heap& b) {
  if (!heaps_disjoint(a, b)) throw UsageError("heap union of overlapping domains");
  Heap h = a;
  h.insert(b.begin(), b.end());
  return h;
}

long long div_euclid(long long a, long long b) {
  if (b == 0) throw EvalFault("division by zero");
  long long q = a / b, r = a % b;
  if (r < 0) q += (b > 0 ? -1 : 1);
  return q;
}

long long mod_euclid(long long a, long long b) {
  if (b == 0) throw EvalFault("modulo by zero");
  long long r = a % b;
  if (r < 0) r += (b > 0 ? b : -b);
  return r;
}

static long long event_payload(const EventVal& e) {
  if (e.fields.size() != 1)
    throw DefinitionError("sum requires events with exactly one field");
  return e.fields[0];
}

Value eval_expr(const EvalEnv& env, const ExprPtr& e, const Lattice& lattice) {
  if (!e) throw DefinitionError("null expression");
  switch (e->kind) {
    case ExprKind::IntLit:
    case ExprKind::BoolLit:
      return Value(e->int_val);
    case ExprKind::Var: {
      if (!env.store) throw DefinitionError("no store for variable lookup");
      auto it = env.store->find(e->name);
      if (it == env.store->end())
        throw DefinitionError("unbound variable '" + e->name + "'", e->span);
      return it->second;
    }
    case ExprKind::LabelLit:
      return Value::of_level(lattice.level(e->name));
    case ExprKind::Unary: {
      long long a = eval_expr(env, e->args[0], lattice).as_int();
      return Value(e->un_op == UnOp::Neg ? -a : (a != 0 ? 0 : 1));
    }
    case ExprKind::Binary: {
      if (e->bin_op == BinOp::And) {
        // Strict evaluation keeps eval_expr deterministic and total on
        // well-sorted inputs; there is no short-circuit in the semantics.
        long long a = eval_expr(env, e->args[0], lattice).as_int();
        long long b = eval_expr(env, e->args[1], lattice).as_int();
        return Value((a != 0 && b != 0) ? 1 : 0);
      }
      if (e->bin_op == BinOp::Or) {
        long long a = eval_expr(env, e->args[0], lattice).as_int();
        long long b = eval_expr(env, e->args[1], lattice).as_int();
        return Value((a != 0 || b != 0) ? 1 : 0);
      }
      if (e->bin_op == BinOp::Imp) {
        long long a = eval_expr(env, e->args[0], lattice).as_int();
        long long b = eval_expr(env, e->args[1], lattice).as_int();
        return Value((a == 0 || b != 0) ? 1 : 0);
      }
      Value va = eval_expr(env, e->args[0], lattice);
      Value vb = eval_expr(env, e->args[1], lattice);
      switch (e->bin_op) {
        case BinOp::Add: return Value(va.as_int() + vb.as_int());
        case BinOp::Sub: return Value(va.as_int() - vb.as_int());
        case BinOp::Mul: return Value(va.as_int() * vb.as_int());
        case BinOp::Div: return Value(div_euclid(va.as_int(), vb.as_int()));
        case BinOp::Mod: return Value(mod_euclid(va.as_int(), vb.as_int()));
        case BinOp::Eq: return Value(va == vb ? 1 : 0);
        case BinOp::Ne: return Value(va == vb ? 0 : 1);
        case BinOp::Lt: return Value(va.as_int() < vb.as_int() ? 1 : 0);
        case BinOp::Le: return Value(va.as_int() <= vb.as_int() ? 1 : 0);
        case BinOp::Gt: return Value(va.as_int() > vb.as_int() ? 1 : 0);
        case BinOp::Ge: return Value(va.as_int() >= vb.as_int() ? 1 : 0);
        default: break;
      }
      throw DefinitionError("unreachable binary operator");
    }
    case ExprKind::Ite: {
      Value c = eval_expr(env, e->args[0], lattice);
      return eval_expr(env, e->args[c.truthy() ? 1 : 2], lattice);
    }
    case ExprKind::Nil:
      return Value::of_trace({});
    case ExprKind::Snoc: {
      TraceVal t = eval_expr(env, e->args[0], lattice).as_trace();
      t.push_back(eval_expr(env, e->args[1], lattice).as_event());
      return Value::of_trace(std::move(t));
    }
    case ExprKind::Cat: {
      TraceVal t = eval_expr(env, e->args[0], lattice).as_trace();
      TraceVal u = eval_expr(env, e->args[1], lattice).as_trace();
      t.insert(t.end(), u.begin(), u.end());
      return Value::of_trace(std::move(t));
    }
    case ExprKind::EventApp: {
      EventVal ev;
      ev.ctor = e->name;
      for (const auto& a : e->args)
        ev.fields.push_back(eval_expr(env, a, lattice).as_int());
      return Value::of_event(std::move(ev));
    }
    case ExprKind::Len:
      return Value(
          static_cast<long long>(eval_expr(env, e->args[0], lattice).as_trace().size()));
    case ExprKind::Sum: {
      long long acc = 0;
      TraceVal t = eval_expr(env, e->args[0], lattice).as_trace();
      for (const auto& ev : t) acc += event_payload(ev);
      return Value(acc);
    }
    case ExprKind::Contains: {
      TraceVal t = eval_expr(env, e->args[0], lattice).as_trace();
      EventVal ev = eval_expr(env, e->args[1], lattice).as_event();
      for (const auto& x : t)
        if (x == ev) return Value(1);
      return Value(0);
    }
    case ExprKind::CurrentTrace:
      if (!env.ghost)
        throw DefinitionError("__tr used without a history context", e->span);
      return Value::of_trace(*env.ghost);
    case ExprKind::Attacker:
      if (!env.attacker)
        throw DefinitionError("attacker level not fixed in this context", e->span);
      return Value::of_level(*env.attacker);
  }
  throw DefinitionError("unreachable expression kind");
}

Value eval_expr(const Store& s, const ExprPtr& e, const Lattice& lattice) {
  EvalEnv env;
  env.store = &s;
  return eval_expr(env, e, lattice);
}

}  // namespace vdc
