#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdc/ast.hpp"
#include "vdc/releval.hpp"
#include "vdc/semantics.hpp"

namespace vdc {

// Which way output visibility compares the channel level against the
// attacker. Soundness of the output check forces the default: an attacker
// sees channels at or below their own level. The flipped comparison is kept
// behind a flag for experimentation; the cross-check tests demonstrate that
// it breaks the policy-agnostic guarantee.
enum class VisibilityDirection { Sound, Paper };

// Erases an action into tau unless it is visible to an `level` attacker.
Action visible(const Lattice& lattice, Level level, const Action& a,
               VisibilityDirection dir = VisibilityDirection::Sound);
Schedule visible(const Lattice& lattice, Level level, const Schedule& s,
                 VisibilityDirection dir = VisibilityDirection::Sound);

// Observational equivalence: equal visibility projections.
bool obs_equiv(const Lattice& lattice, Level level, const Schedule& a,
               const Schedule& b, VisibilityDirection dir = VisibilityDirection::Sound);

// Pointwise alignment, the strictly stronger relation of the soundness
// argument.
bool aligned(const Lattice& lattice, Level level, const Schedule& a,
             const Schedule& b, VisibilityDirection dir = VisibilityDirection::Sound);

// True iff position n in both schedules is the same assumption and it fails
// between the recorded stores.
bool assumption_failed(const RelEvalCtx& ctx, Level level, size_t n,
                       const Schedule& a, const Schedule& b);

// Finite initial-state space: per-variable ranges plus heap cells derived
// from the precondition and lock invariants, pair-filtered by
// P * invs(L).
struct StateSpace {
  const Program* program = nullptr;
  const ProcDecl* entry = nullptr;
  long long lo = 0, hi = 3;
  Level attacker = 0;
  VisibilityDirection direction = VisibilityDirection::Sound;
  int witness_trace_len = 2;

  std::vector<std::string> vars;       // live-in variables, enumerated
  std::vector<long long> heap_addrs;   // literal points-to addresses
  AssertionPtr precondition;           // P * invs(L)
  std::set<std::string> initial_locks;

  std::vector<RelState> states;        // all candidate initial states
};

// Builds the space for a program entry point: `main` when present, else the
// single procedure. Throws UsageError for ambiguous entries.
StateSpace make_state_space(const Program& p, long long lo, long long hi,
                            Level attacker,
                            VisibilityDirection dir = VisibilityDirection::Sound,
                            const std::string& entry = "");

// The relational admissibility filter: (s,h),(s',h') |= P * invs(L).
bool pair_admissible(const StateSpace& space, const RelState& major,
                     const RelState& minor);

struct OracleRun {
  Schedule schedule;
  Configuration config;
};

// All runs of the entry command from a given initial state.
RunsResult runs_from(const StateSpace& space, const RelState& init, int max_steps);

// Attacker uncertainty: minor initial states that can produce an observably
// equivalent schedule of the same length (within |sigma| steps).
std::vector<int> uncertainty(const StateSpace& space, const RelState& major,
                             const Schedule& sigma, int bound);

// Release by assumption: uncertainty restricted to minors that can reach a
// failed assumption.
std::vector<int> assumed_release(const StateSpace& space, const RelState& major,
                                 const Schedule& sigma, int bound);

// Policy exclusion over the trace projections of length-n schedule prefixes:
// the when-condition holds on both prefixes but the release formula fails.
bool policy_excludes(const StateSpace& space, const PolicyDecl& policy, size_t n,
                     const Schedule& a, const Schedule& b);

// Release by policy (with the same admissibility filter as the other sets,
// so that subset comparisons are meaningful).
std::vector<int> policy_release_set(const StateSpace& space, const PolicyDecl& policy,
                                    const RelState& major, const Schedule& sigma,
                                    int bound);

struct Violation {
  std::string kind;  // "policy-agnostic" or "policy-specific"
  RelState major;
  Schedule sigma;
  Schedule extension;
  RelState minor;
};

struct OracleReport {
  std::string theorem;
  enum class Status { Pass, Violation, Budget } status = Status::Pass;
  std::vector<Violation> violations;
  long long states_checked = 0;
  long long prefixes_checked = 0;
  bool budget_exceeded = false;
};

// Policy-agnostic guarantee: for every major prefix and single extension,
// uncertainty(s1) \ uncertainty(s1 ++ s2) is within assumed_release(s1).
OracleReport check_policy_agnostic(const StateSpace& space, int bound);

// Policy-specific guarantee: assumed_release(s1) is within policy_release(s1);
// the combined corollary (uncertainty difference within policy release) is
// checked too.
OracleReport check_policy_specific(const StateSpace& space, const PolicyDecl& policy,
                                   int bound);

}  // namespace vdc
