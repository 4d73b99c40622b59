#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "vdc/ast.hpp"

namespace vdc {

struct EventVal {
  std::string ctor;
  std::vector<long long> fields;

  bool operator==(const EventVal&) const = default;
  bool operator<(const EventVal& o) const {
    return std::tie(ctor, fields) < std::tie(o.ctor, o.fields);
  }
};

using TraceVal = std::vector<EventVal>;

// Semantic value: integers carry both Int and Bool sorts (booleans are 0/1).
struct Value {
  std::variant<long long, Level, EventVal, TraceVal> v;

  Value() : v(0LL) {}
  Value(long long i) : v(i) {}
  static Value of_level(Level l) { Value x; x.v = l; return x; }
  static Value of_event(EventVal e) { Value x; x.v = std::move(e); return x; }
  static Value of_trace(TraceVal t) { Value x; x.v = std::move(t); return x; }

  bool is_int() const { return std::holds_alternative<long long>(v); }
  bool is_level() const { return std::holds_alternative<Level>(v); }
  bool is_event() const { return std::holds_alternative<EventVal>(v); }
  bool is_trace() const { return std::holds_alternative<TraceVal>(v); }

  long long as_int() const;
  Level as_level() const;
  const EventVal& as_event() const;
  const TraceVal& as_trace() const;
  bool truthy() const { return as_int() != 0; }  // nonzero = true

  bool operator==(const Value&) const = default;
  bool operator<(const Value& o) const { return v < o.v; }

  std::string str(const Lattice* lat = nullptr) const;
};

using Store = std::map<std::string, Value>;

// Finite partial map from integer addresses to integer values.
using Heap = std::map<long long, long long>;

// Heap union, defined only on disjoint domains.
bool heaps_disjoint(const Heap& a, const Heap& b);
Heap heap_union(const Heap& a, const Heap& b);

// Euclidean division: remainder is always in [0, |b|).
long long div_euclid(long long a, long long b);
long long mod_euclid(long long a, long long b);

std::string trace_str(const TraceVal& t);

// Evaluation context: a store plus (optionally) the ghost trace that
// interprets `__tr`.
struct EvalEnv {
  const Store* store = nullptr;
  const TraceVal* ghost = nullptr;
  const Level* attacker = nullptr;  // interprets the verifier's attacker term
};

// Standard denotational evaluation of a well-sorted expression.
// Throws EvalFault on division by zero and DefinitionError on unbound
// variables or a `__tr` without ghost context.
Value eval_expr(const EvalEnv& env, const ExprPtr& e, const Lattice& lattice);
Value eval_expr(const Store& s, const ExprPtr& e, const Lattice& lattice);

}  // namespace vdc
