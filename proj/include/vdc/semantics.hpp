#pragma once

#include <set>
#include <string>
#include <vector>

#include "vdc/ast.hpp"
#include "vdc/value.hpp"

namespace vdc {

enum class ActionKind {
  Tau,
  SchedL,
  SchedR,
  Out,     // out(level, value)
  Assume,  // assume(store snapshot [+ ghost], formula)
  Load,    // load(address)
  Store,   // store(address)
  Trace,   // trace(event value)
};

struct Action {
  ActionKind kind = ActionKind::Tau;
  Level out_level = 0;
  long long out_value = 0;
  long long addr = 0;
  EventVal event;
  // Assume actions record the full store (and the ghost trace, which
  // interprets __tr in inlined policy assumptions) alongside the formula.
  Store store;
  TraceVal ghost;
  AssertionPtr rho;

  static Action tau() { return {}; }
  static Action sched_l() { Action a; a.kind = ActionKind::SchedL; return a; }
  static Action sched_r() { Action a; a.kind = ActionKind::SchedR; return a; }
  static Action out(Level l, long long v) {
    Action a; a.kind = ActionKind::Out; a.out_level = l; a.out_value = v; return a;
  }
  static Action assume(Store s, TraceVal g, AssertionPtr rho) {
    Action a; a.kind = ActionKind::Assume; a.store = std::move(s);
    a.ghost = std::move(g); a.rho = std::move(rho); return a;
  }
  static Action load(long long p) { Action a; a.kind = ActionKind::Load; a.addr = p; return a; }
  static Action store_(long long p) { Action a; a.kind = ActionKind::Store; a.addr = p; return a; }
  static Action trace(EventVal e) {
    Action a; a.kind = ActionKind::Trace; a.event = std::move(e); return a;
  }

  std::string str(const Lattice* lat = nullptr) const;
};

using Schedule = std::vector<Action>;

// Equality of fully recorded actions (used for alignment and visibility).
bool action_equal(const Action& a, const Action& b);
bool schedule_equal(const Schedule& a, const Schedule& b);
std::string schedule_str(const Schedule& s, const Lattice* lat = nullptr);

// The subsequence of trace-action payloads, in order.
TraceVal trace_of(const Schedule& s);

enum class ConfigState { Run, Stop, Abort };

struct Configuration {
  ConfigState state = ConfigState::Run;
  std::set<std::string> locks;  // locks *available* (not currently held)
  CommandPtr cmd;               // Run only
  Store store;
  Heap heap;
  TraceVal ghost;  // concatenation of trace-action payloads so far

  static Configuration run(std::set<std::string> locks, CommandPtr c, Store s,
                           Heap h, TraceVal g = {});
  static Configuration stop(std::set<std::string> locks, Store s, Heap h,
                            TraceVal g = {});
  static Configuration abort();

  bool is_run() const { return state == ConfigState::Run; }
  bool is_stop() const { return state == ConfigState::Stop; }
  bool is_abort() const { return state == ConfigState::Abort; }

  bool operator==(const Configuration& o) const;
  std::string str(const Lattice* lat = nullptr) const;
};

struct Successor {
  Schedule schedule;  // actions emitted by this single step
  Configuration config;
};

// One small step: all successors of a running configuration. Blocked locks
// contribute no successor; memory faults and division by zero step to abort.
std::vector<Successor> step(const Configuration& k, const Lattice& lattice);

struct RunsResult {
  // Every reachable (schedule, configuration) within the step budget,
  // including the empty run and every intermediate prefix.
  std::vector<Successor> entries;
  // True when running configurations remained on the frontier at the bound.
  bool budget_exceeded = false;
};

RunsResult runs(const Configuration& k0, int max_steps, const Lattice& lattice);

// Entry-point plumbing shared by the CLI and the python bindings: `main`
// when present, else the single procedure, else an explicit name.
const ProcDecl& resolve_entry(const Program& p, const std::string& name = "");

// Initial configuration for concrete exploration: all locks free, variables
// zeroed, one zero-initialized heap cell per literal address named by the
// entry's precondition or a lock invariant.
Configuration initial_configuration(const Program& p, const ProcDecl& entry);

}  // namespace vdc
