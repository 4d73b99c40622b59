#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdc/ast.hpp"
#include "vdc/value.hpp"

namespace vdc {

// One side of a relational state: store, heap and the ghost trace.
struct RelState {
  Store store;
  Heap heap;
  TraceVal ghost;
};

struct StatePair {
  RelState major;
  RelState minor;
  Level attacker = 0;
};

// Finite witness domains for quantifier search. Fig. 1's existential ranges
// over arbitrary values; the concrete evaluator only runs on finite
// instances, so callers must supply the ranges.
struct WitnessDomains {
  long long lo = 0;
  long long hi = 3;
  int max_trace_len = 2;
};

struct RelEvalCtx {
  const Lattice* lattice = nullptr;
  const std::vector<EventDecl>* events = nullptr;  // for event/trace witnesses
  std::optional<WitnessDomains> domains;
  // Registered abstract predicate definitions (e.g. lock invariants by name).
  const std::map<std::string, AssertionPtr>* predicates = nullptr;
};

// All values of a sort under the configured witness domains.
std::vector<Value> values_of_sort(const RelEvalCtx& ctx, Sort s);

// Two-state satisfaction of a pure assertion, s,s' |=_l rho (Fig. 1 clauses
// restricted to the heap-free fragment). Ghost traces interpret `__tr` and
// may be null when the formula does not mention it.
bool holds_pure(const RelEvalCtx& ctx, Level attacker, const Store& s,
                const TraceVal* ghost, const Store& s2, const TraceVal* ghost2,
                const AssertionPtr& rho);
bool holds_pure(const RelEvalCtx& ctx, Level attacker, const Store& s,
                const Store& s2, const AssertionPtr& rho);

// Full two-state satisfaction (s,h),(s',h') |=_l P.
bool holds(const RelEvalCtx& ctx, const StatePair& pair, const AssertionPtr& P);

}  // namespace vdc
