#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdc/ast.hpp"
#include "vdc/releval.hpp"
#include "vdc/value.hpp"

namespace vdc {

// A pure relational entailment: hypothesis conjuncts and a goal, over free
// symbols with declared sorts, judged either for a fixed attacker level or
// for all levels of the lattice (symbolic attacker).
struct Entailment {
  std::vector<AssertionPtr> hyp;
  AssertionPtr goal;
  std::map<std::string, Sort> sorts;
  std::optional<Level> attacker;  // nullopt: symbolic, quantified over the carrier
};

struct Countermodel {
  Store major;
  Store minor;
  Level attacker = 0;

  std::string str(const Lattice* lat = nullptr) const;
};

enum class VcStatus { Valid, Invalid, Unknown };

const char* vc_status_name(VcStatus s);

struct SolverVerdict {
  VcStatus status = VcStatus::Unknown;
  std::optional<Countermodel> model;  // present iff Invalid
  std::string reason;                 // for Unknown / diagnostics
};

struct BackendConfig {
  const Lattice* lattice = nullptr;
  const std::vector<EventDecl>* events = nullptr;

  // External solver; empty means the built-in engine decides.
  std::string solver_path;
  double timeout_seconds = 10.0;

  // Finite domains for countermodel search and quantifier witnesses.
  long long range_lo = 0;
  long long range_hi = 3;
  int max_trace_len = -1;  // -1: derived from the constants in the entailment
  // When set, countermodel search stays strictly inside [range_lo, range_hi]
  // and traces of length <= max_trace_len (for differential testing).
  bool strict_ranges = false;

  long long max_pairs = 4000000;  // blow-up guard for enumeration
};

// Deterministic SMT-LIB 2.6 encoding of the entailment (two-sided
// transcription of the relational assertion semantics; the query is
// satisfiability of hypothesis /\ not goal).
std::string encode_relational(const Entailment& e, const BackendConfig& cfg);

// Decides the entailment. With a configured solver this runs the external
// process and replays any countermodel; otherwise the built-in engine proves
// validity or searches the finite domains for a countermodel.
SolverVerdict check_entailment(const Entailment& e, const BackendConfig& cfg);

// Exhaustive finite-domain oracle over all paired assignments.
SolverVerdict brute_force_entailment(const Entailment& e, const BackendConfig& cfg);

// Built-in validity prover (label enumeration + rewriting + congruence
// closure + linear arithmetic). Sound; returns false when it cannot prove.
bool prove_valid_internal(const Entailment& e, const BackendConfig& cfg);

// Replays a countermodel through the relational evaluator; throws
// InternalSoundnessError when the witness does not falsify the entailment.
void replay_countermodel(const Entailment& e, const BackendConfig& cfg,
                         const Countermodel& m);

}  // namespace vdc
