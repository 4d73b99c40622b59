#include "vdc/oracle.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "vdc/symer.hpp"

namespace vdc {

Action visible(const Lattice& lattice, Level level, const Action& a,
               VisibilityDirection dir) {
  switch (a.kind) {
    case ActionKind::Assume:
    case ActionKind::Trace:
      return Action::tau();
    case ActionKind::Out: {
      bool vis = dir == VisibilityDirection::Sound
                     ? lattice.leq(a.out_level, level)
                     : lattice.leq(level, a.out_level);
      return vis ? a : Action::tau();
    }
    default:
      return a;
  }
}

Schedule visible(const Lattice& lattice, Level level, const Schedule& s,
                 VisibilityDirection dir) {
  Schedule out;
  out.reserve(s.size());
  for (const auto& a : s) out.push_back(visible(lattice, level, a, dir));
  return out;
}

bool obs_equiv(const Lattice& lattice, Level level, const Schedule& a,
               const Schedule& b, VisibilityDirection dir) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!action_equal(visible(lattice, level, a[i], dir),
                      visible(lattice, level, b[i], dir)))
      return false;
  return true;
}

bool aligned(const Lattice& lattice, Level level, const Schedule& a,
             const Schedule& b, VisibilityDirection dir) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const Action& x = a[i];
    const Action& y = b[i];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
      case ActionKind::Tau:
      case ActionKind::SchedL:
      case ActionKind::SchedR:
        break;
      case ActionKind::Load:
      case ActionKind::Store:
        if (x.addr != y.addr) return false;
        break;
      case ActionKind::Trace:
        break;  // payloads are free
      case ActionKind::Assume:
        if (!assertion_equal(x.rho, y.rho)) return false;  // stores are free
        break;
      case ActionKind::Out: {
        if (x.out_level != y.out_level) return false;
        bool vis = dir == VisibilityDirection::Sound
                       ? lattice.leq(x.out_level, level)
                       : lattice.leq(level, x.out_level);
        if (vis && x.out_value != y.out_value) return false;
        break;
      }
    }
  }
  return true;
}

bool assumption_failed(const RelEvalCtx& ctx, Level level, size_t n,
                       const Schedule& a, const Schedule& b) {
  if (n >= a.size() || n >= b.size())
    throw UsageError("assumption_failed: index out of range");
  const Action& x = a[n];
  const Action& y = b[n];
  if (x.kind != ActionKind::Assume || y.kind != ActionKind::Assume) return false;
  if (!assertion_equal(x.rho, y.rho)) return false;
  return !holds_pure(ctx, level, x.store, &x.ghost, y.store, &y.ghost, x.rho);
}

namespace {

constexpr long long kMaxStates = 200000;

void live_in_rec(const CommandPtr& c, std::set<std::string>& written,
                 std::set<std::string>& live) {
  if (!c) return;
  auto reads_expr = [&](const ExprPtr& e) {
    for (const auto& v : free_vars(e))
      if (!written.count(v)) live.insert(v);
  };
  auto reads_assertion = [&](const AssertionPtr& a) {
    for (const auto& v : free_vars(a))
      if (!written.count(v)) live.insert(v);
  };
  switch (c->kind) {
    case CmdKind::Skip:
      break;
    case CmdKind::Assign:
      reads_expr(c->e1);
      written.insert(c->var);
      break;
    case CmdKind::Load:
      reads_expr(c->e1);
      written.insert(c->var);
      break;
    case CmdKind::Store:
      reads_expr(c->e1);
      reads_expr(c->e2);
      break;
    case CmdKind::LockCmd:
    case CmdKind::UnlockCmd:
      break;
    case CmdKind::Seq:
      live_in_rec(c->c1, written, live);
      live_in_rec(c->c2, written, live);
      break;
    case CmdKind::If: {
      reads_expr(c->e1);
      auto w1 = written, w2 = written;
      live_in_rec(c->c1, w1, live);
      live_in_rec(c->c2, w2, live);
      written.clear();
      std::set_intersection(w1.begin(), w1.end(), w2.begin(), w2.end(),
                            std::inserter(written, written.begin()));
      break;
    }
    case CmdKind::While: {
      reads_expr(c->e1);
      auto wb = written;
      live_in_rec(c->c1, wb, live);
      break;  // the body may not run: `written` unchanged
    }
    case CmdKind::Par: {
      auto w1 = written, w2 = written;
      live_in_rec(c->c1, w1, live);
      live_in_rec(c->c2, w2, live);
      written.insert(w1.begin(), w1.end());
      written.insert(w2.begin(), w2.end());
      break;
    }
    case CmdKind::Assume:
    case CmdKind::AssertCmd:
      reads_assertion(c->inv);
      break;
    case CmdKind::Output:
      reads_expr(c->e1);
      reads_expr(c->e2);
      break;
    case CmdKind::TraceEmit:
      reads_expr(c->e1);
      break;
    case CmdKind::SplitCmd:
      reads_expr(c->e1);
      break;
  }
}

void collect_cells(const AssertionPtr& a, std::set<std::string> bound,
                   std::vector<std::pair<ExprPtr, ExprPtr>>& cells) {
  if (!a) return;
  if (a->kind == AssertKind::PointsTo) {
    for (const auto& v : free_vars(a->e1))
      if (bound.count(v))
        throw CapabilityError(
            "oracle state spaces need cell addresses over program variables");
    cells.emplace_back(a->e1, a->e2);
    return;
  }
  if (a->kind == AssertKind::Exists || a->kind == AssertKind::Forall)
    bound.insert(a->name);
  collect_cells(a->a1, bound, cells);
  collect_cells(a->a2, bound, cells);
}

RelEvalCtx space_ctx(const StateSpace& space) {
  RelEvalCtx ctx;
  ctx.lattice = &space.program->lattice;
  ctx.events = &space.program->events;
  ctx.domains = WitnessDomains{space.lo, space.hi, space.witness_trace_len};
  return ctx;
}

std::string proj_key(const StateSpace& space, const Schedule& s) {
  std::ostringstream os;
  for (const auto& a : visible(space.program->lattice, space.attacker, s,
                               space.direction)) {
    switch (a.kind) {
      case ActionKind::Tau: os << "t;"; break;
      case ActionKind::SchedL: os << "L;"; break;
      case ActionKind::SchedR: os << "R;"; break;
      case ActionKind::Load: os << "l" << a.addr << ";"; break;
      case ActionKind::Store: os << "s" << a.addr << ";"; break;
      case ActionKind::Out: os << "o" << a.out_level << "," << a.out_value << ";"; break;
      default: os << "?;"; break;
    }
  }
  return os.str();
}

// Cached per-minor run data for the set computations.
struct MinorRuns {
  std::vector<Schedule> schedules;
  std::unordered_map<std::string, std::vector<int>> by_projection;
  bool budget = false;
};

MinorRuns minor_runs_for(const StateSpace& space, const RelState& init, int steps) {
  MinorRuns m;
  RunsResult r = runs_from(space, init, steps);
  m.budget = r.budget_exceeded;
  for (auto& e : r.entries) {
    int idx = static_cast<int>(m.schedules.size());
    m.by_projection[proj_key(space, e.schedule)].push_back(idx);
    m.schedules.push_back(std::move(e.schedule));
  }
  return m;
}

bool schedule_has_failure(const RelEvalCtx& ctx, Level att, const Schedule& sigma,
                          const Schedule& other) {
  size_t n = std::min(sigma.size(), other.size());
  for (size_t i = 0; i < n; ++i) {
    if (sigma[i].kind != ActionKind::Assume || other[i].kind != ActionKind::Assume)
      continue;
    if (!assertion_equal(sigma[i].rho, other[i].rho)) continue;
    if (!holds_pure(ctx, att, sigma[i].store, &sigma[i].ghost, other[i].store,
                    &other[i].ghost, sigma[i].rho))
      return true;
  }
  return false;
}

}  // namespace

StateSpace make_state_space(const Program& p, long long lo, long long hi,
                            Level attacker, VisibilityDirection dir,
                            const std::string& entry) {
  StateSpace space;
  space.program = &p;
  space.lo = lo;
  space.hi = hi;
  space.attacker = attacker;
  space.direction = dir;

  if (!entry.empty()) {
    space.entry = p.find_proc(entry);
    if (!space.entry) throw UsageError("no procedure named '" + entry + "'");
  } else if (const ProcDecl* main = p.find_proc("main")) {
    space.entry = main;
  } else if (p.procs.size() == 1) {
    space.entry = &p.procs[0];
  } else {
    throw UsageError(
        "oracle entry is ambiguous: declare a 'main' procedure or name one");
  }

  for (const auto& l : p.locks) space.initial_locks.insert(l.name);
  space.precondition =
      mk::star(space.entry->requires_, p.invs(space.initial_locks));

  // Live-in variables are enumerated; everything else starts at zero.
  std::set<std::string> written, live;
  live_in_rec(space.entry->body, written, live);
  free_vars(space.entry->requires_, live);
  space.vars.assign(live.begin(), live.end());

  std::vector<std::pair<ExprPtr, ExprPtr>> cells;
  collect_cells(space.precondition, {}, cells);

  std::set<std::string> all_vars = command_vars(space.entry->body);
  free_vars(space.entry->requires_, all_vars);
  free_vars(space.entry->ensures_, all_vars);

  // Odometer over variable values, then heap cell values.
  long long count = 1;
  for (size_t i = 0; i < space.vars.size(); ++i) {
    count *= (hi - lo + 1);
    if (count > kMaxStates)
      throw CapabilityError("state space exceeds the enumeration guard");
  }

  std::vector<long long> vals(space.vars.size(), lo);
  while (true) {
    Store store;
    for (const auto& v : all_vars) store[v] = Value(0);
    for (size_t i = 0; i < space.vars.size(); ++i)
      store[space.vars[i]] = Value(vals[i]);

    // Heap shape under this store: evaluate addresses; pin values that the
    // store determines, enumerate the rest.
    std::map<long long, std::optional<long long>> shape;
    bool shape_ok = true;
    for (const auto& [ae, ve] : cells) {
      long long addr;
      try {
        addr = eval_expr(store, ae, p.lattice).as_int();
      } catch (const std::runtime_error&) {
        shape_ok = false;
        break;
      }
      std::optional<long long> pinned;
      try {
        pinned = eval_expr(store, ve, p.lattice).as_int();
      } catch (const std::runtime_error&) {
        pinned = std::nullopt;
      }
      auto it = shape.find(addr);
      if (it == shape.end())
        shape[addr] = pinned;
      else if (pinned && !it->second)
        it->second = pinned;
    }
    if (shape_ok) {
      std::vector<long long> open_addrs;
      Heap base;
      for (const auto& [addr, pinned] : shape) {
        if (pinned)
          base[addr] = *pinned;
        else
          open_addrs.push_back(addr);
      }
      long long combos = 1;
      for (size_t i = 0; i < open_addrs.size(); ++i) {
        combos *= (hi - lo + 1);
        if (combos * count > kMaxStates)
          throw CapabilityError("state space exceeds the enumeration guard");
      }
      std::vector<long long> hv(open_addrs.size(), lo);
      while (true) {
        Heap h = base;
        for (size_t i = 0; i < open_addrs.size(); ++i) h[open_addrs[i]] = hv[i];
        space.states.push_back(RelState{store, h, {}});
        size_t i = 0;
        for (; i < hv.size(); ++i) {
          if (hv[i] < hi) {
            ++hv[i];
            break;
          }
          hv[i] = lo;
        }
        if (i == hv.size()) break;
      }
    }

    size_t i = 0;
    for (; i < vals.size(); ++i) {
      if (vals[i] < hi) {
        ++vals[i];
        break;
      }
      vals[i] = lo;
    }
    if (i == vals.size()) break;
  }
  return space;
}

bool pair_admissible(const StateSpace& space, const RelState& major,
                     const RelState& minor) {
  StatePair pair;
  pair.major = major;
  pair.minor = minor;
  pair.attacker = space.attacker;
  return holds(space_ctx(space), pair, space.precondition);
}

RunsResult runs_from(const StateSpace& space, const RelState& init, int max_steps) {
  Configuration k = Configuration::run(space.initial_locks, space.entry->body,
                                       init.store, init.heap, init.ghost);
  return runs(k, max_steps, space.program->lattice);
}

std::vector<int> uncertainty(const StateSpace& space, const RelState& major,
                             const Schedule& sigma, int bound) {
  std::vector<int> out;
  int steps = std::max<int>(bound, static_cast<int>(sigma.size()));
  std::string key = proj_key(space, sigma);
  for (size_t i = 0; i < space.states.size(); ++i) {
    if (!pair_admissible(space, major, space.states[i])) continue;
    MinorRuns mr = minor_runs_for(space, space.states[i], steps);
    auto it = mr.by_projection.find(key);
    if (it == mr.by_projection.end()) continue;
    for (int idx : it->second)
      if (mr.schedules[idx].size() == sigma.size()) {
        out.push_back(static_cast<int>(i));
        break;
      }
  }
  return out;
}

std::vector<int> assumed_release(const StateSpace& space, const RelState& major,
                                 const Schedule& sigma, int bound) {
  std::vector<int> out;
  RelEvalCtx ctx = space_ctx(space);
  int steps = std::max<int>(bound, static_cast<int>(sigma.size()));
  std::string key = proj_key(space, sigma);
  for (size_t i = 0; i < space.states.size(); ++i) {
    if (!pair_admissible(space, major, space.states[i])) continue;
    MinorRuns mr = minor_runs_for(space, space.states[i], steps);
    auto it = mr.by_projection.find(key);
    if (it == mr.by_projection.end()) continue;
    for (int idx : it->second) {
      const Schedule& other = mr.schedules[idx];
      if (other.size() != sigma.size()) continue;
      if (schedule_has_failure(ctx, space.attacker, sigma, other)) {
        out.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return out;
}

bool policy_excludes(const StateSpace& space, const PolicyDecl& policy, size_t n,
                     const Schedule& a, const Schedule& b) {
  if (n >= a.size() || n >= b.size())
    throw UsageError("policy_excludes: prefix length out of range");
  RelEvalCtx ctx = space_ctx(space);
  Schedule pa(a.begin(), a.begin() + static_cast<long>(n));
  Schedule pb(b.begin(), b.begin() + static_cast<long>(n));
  Store sa{{policy.trace_var, Value::of_trace(trace_of(pa))}};
  Store sb{{policy.trace_var, Value::of_trace(trace_of(pb))}};
  ExprPtr tr = mk::var(policy.trace_var, Sort::Trace);
  AssertionPtr when = policy_when(policy, tr);
  AssertionPtr release = policy_release(policy, tr);
  // The when-condition is non-relational: evaluate it on each side alone.
  bool when_a = holds_pure(ctx, space.attacker, sa, sa, when);
  bool when_b = holds_pure(ctx, space.attacker, sb, sb, when);
  if (!when_a || !when_b) return false;
  return !holds_pure(ctx, space.attacker, sa, sb, release);
}

std::vector<int> policy_release_set(const StateSpace& space, const PolicyDecl& policy,
                                    const RelState& major, const Schedule& sigma,
                                    int bound) {
  std::vector<int> out;
  int steps = std::max<int>(bound, static_cast<int>(sigma.size()));
  std::string key = proj_key(space, sigma);
  for (size_t i = 0; i < space.states.size(); ++i) {
    if (!pair_admissible(space, major, space.states[i])) continue;
    MinorRuns mr = minor_runs_for(space, space.states[i], steps);
    auto it = mr.by_projection.find(key);
    if (it == mr.by_projection.end()) continue;
    bool member = false;
    for (int idx : it->second) {
      const Schedule& other = mr.schedules[idx];
      if (other.size() != sigma.size()) continue;
      for (size_t n = 0; n < std::min(sigma.size(), other.size()) && !member; ++n)
        if (policy_excludes(space, policy, n, sigma, other)) member = true;
      if (member) break;
    }
    if (member) out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

// Shared machinery for the exhaustive theorem checks: runs of every state are
// enumerated once and indexed by visibility projection; admissible pairs are
// cached.
struct OracleEngine {
  const StateSpace& space;
  int bound;
  RelEvalCtx ctx;
  std::vector<MinorRuns> state_runs;
  std::vector<char> diag_admissible;
  std::map<std::pair<int, int>, bool> pair_cache;
  const PolicyDecl* policy = nullptr;
  AssertionPtr policy_when_f, policy_release_f;
  bool budget = false;

  OracleEngine(const StateSpace& s, int b) : space(s), bound(b), ctx(space_ctx(s)) {
    // Majors run `bound` steps plus one extension step; a schedule of A
    // actions needs at most A steps, so enumerating minors to the maximal
    // action length of any extended major prefix covers every queried length.
    int per_step_actions = 1 + par_depth(space.entry->body);
    int minor_steps = (bound + 1) * per_step_actions;
    // A minor-side budget cut cannot lose any queried schedule: every
    // queried length is at most minor_steps actions, and a run of n actions
    // takes at most n steps.
    state_runs.reserve(space.states.size());
    for (const auto& st : space.states)
      state_runs.push_back(minor_runs_for(space, st, minor_steps));
    diag_admissible.resize(space.states.size());
    for (size_t i = 0; i < space.states.size(); ++i)
      diag_admissible[i] =
          pair_admissible(space, space.states[i], space.states[i]) ? 1 : 0;
  }

  static int par_depth(const CommandPtr& c) {
    if (!c) return 0;
    int sub = std::max(par_depth(c->c1), par_depth(c->c2));
    return c->kind == CmdKind::Par ? sub + 1 : sub;
  }

  bool admissible(int major, int minor) {
    auto key = std::make_pair(major, minor);
    auto it = pair_cache.find(key);
    if (it != pair_cache.end()) return it->second;
    bool ok = pair_admissible(space, space.states[major], space.states[minor]);
    pair_cache.emplace(key, ok);
    return ok;
  }

  bool in_uncertainty(int major, int minor, const Schedule& sigma,
                      const std::string& key) {
    if (!admissible(major, minor)) return false;
    auto it = state_runs[minor].by_projection.find(key);
    if (it == state_runs[minor].by_projection.end()) return false;
    for (int idx : it->second)
      if (state_runs[minor].schedules[idx].size() == sigma.size()) return true;
    return false;
  }

  bool in_assumed_release(int major, int minor, const Schedule& sigma,
                          const std::string& key) {
    if (!admissible(major, minor)) return false;
    auto it = state_runs[minor].by_projection.find(key);
    if (it == state_runs[minor].by_projection.end()) return false;
    for (int idx : it->second) {
      const Schedule& other = state_runs[minor].schedules[idx];
      if (other.size() != sigma.size()) continue;
      if (schedule_has_failure(ctx, space.attacker, sigma, other)) return true;
    }
    return false;
  }

  bool excludes_cached(size_t n, const Schedule& a, const Schedule& b) {
    Schedule pa(a.begin(), a.begin() + static_cast<long>(n));
    Schedule pb(b.begin(), b.begin() + static_cast<long>(n));
    Store sa{{policy->trace_var, Value::of_trace(trace_of(pa))}};
    Store sb{{policy->trace_var, Value::of_trace(trace_of(pb))}};
    if (!holds_pure(ctx, space.attacker, sa, sa, policy_when_f)) return false;
    if (!holds_pure(ctx, space.attacker, sb, sb, policy_when_f)) return false;
    return !holds_pure(ctx, space.attacker, sa, sb, policy_release_f);
  }

  bool in_policy_release(int major, int minor, const Schedule& sigma,
                         const std::string& key) {
    if (!admissible(major, minor)) return false;
    auto it = state_runs[minor].by_projection.find(key);
    if (it == state_runs[minor].by_projection.end()) return false;
    for (int idx : it->second) {
      const Schedule& other = state_runs[minor].schedules[idx];
      if (other.size() != sigma.size()) continue;
      for (size_t n = 0; n < sigma.size(); ++n)
        if (excludes_cached(n, sigma, other)) return true;
    }
    return false;
  }
};

}  // namespace

OracleReport check_policy_agnostic(const StateSpace& space, int bound) {
  OracleReport report;
  report.theorem = "policy-agnostic";
  OracleEngine eng(space, bound);

  for (size_t mi = 0; mi < space.states.size(); ++mi) {
    if (!eng.diag_admissible[mi]) continue;
    ++report.states_checked;
    RunsResult major_runs = runs_from(space, space.states[mi], bound);
    report.budget_exceeded |= major_runs.budget_exceeded;
    for (const auto& [sigma1, k1] : major_runs.entries) {
      if (!k1.is_run()) continue;
      std::string key1 = proj_key(space, sigma1);
      for (const auto& succ : step(k1, space.program->lattice)) {
        ++report.prefixes_checked;
        Schedule extended = sigma1;
        extended.insert(extended.end(), succ.schedule.begin(), succ.schedule.end());
        std::string key2 = proj_key(space, extended);
        for (size_t ni = 0; ni < space.states.size(); ++ni) {
          if (!eng.in_uncertainty(static_cast<int>(mi), static_cast<int>(ni), sigma1,
                                  key1))
            continue;
          if (eng.in_uncertainty(static_cast<int>(mi), static_cast<int>(ni), extended,
                                 key2))
            continue;
          if (eng.in_assumed_release(static_cast<int>(mi), static_cast<int>(ni),
                                     sigma1, key1))
            continue;
          Violation v;
          v.kind = "policy-agnostic";
          v.major = space.states[mi];
          v.sigma = sigma1;
          v.extension = succ.schedule;
          v.minor = space.states[ni];
          report.violations.push_back(std::move(v));
          if (report.violations.size() >= 16) break;
        }
        if (report.violations.size() >= 16) break;
      }
      if (report.violations.size() >= 16) break;
    }
    if (report.violations.size() >= 16) break;
  }
  report.status = !report.violations.empty() ? OracleReport::Status::Violation
                  : report.budget_exceeded   ? OracleReport::Status::Budget
                                             : OracleReport::Status::Pass;
  return report;
}

OracleReport check_policy_specific(const StateSpace& space, const PolicyDecl& policy,
                                   int bound) {
  OracleReport report;
  report.theorem = "policy-specific";
  OracleEngine eng(space, bound);
  eng.policy = &policy;
  ExprPtr tr = mk::var(policy.trace_var, Sort::Trace);
  eng.policy_when_f = policy_when(policy, tr);
  eng.policy_release_f = policy_release(policy, tr);

  for (size_t mi = 0; mi < space.states.size(); ++mi) {
    if (!eng.diag_admissible[mi]) continue;
    ++report.states_checked;
    RunsResult major_runs = runs_from(space, space.states[mi], bound);
    report.budget_exceeded |= major_runs.budget_exceeded;
    for (const auto& [sigma1, k1] : major_runs.entries) {
      if (!k1.is_run()) continue;
      std::string key1 = proj_key(space, sigma1);
      auto succs = step(k1, space.program->lattice);
      if (succs.empty()) continue;  // no final step from here
      ++report.prefixes_checked;
      // Every assumed release must be covered by the policy.
      for (size_t ni = 0; ni < space.states.size(); ++ni) {
        if (!eng.in_assumed_release(static_cast<int>(mi), static_cast<int>(ni),
                                    sigma1, key1))
          continue;
        if (eng.in_policy_release(static_cast<int>(mi), static_cast<int>(ni), sigma1,
                                  key1))
          continue;
        Violation v;
        v.kind = "policy-specific";
        v.major = space.states[mi];
        v.sigma = sigma1;
        v.minor = space.states[ni];
        report.violations.push_back(std::move(v));
        if (report.violations.size() >= 16) break;
      }
      // Corollary: every knowledge increase is within the policy.
      for (const auto& succ : succs) {
        Schedule extended = sigma1;
        extended.insert(extended.end(), succ.schedule.begin(), succ.schedule.end());
        std::string key2 = proj_key(space, extended);
        for (size_t ni = 0; ni < space.states.size(); ++ni) {
          if (!eng.in_uncertainty(static_cast<int>(mi), static_cast<int>(ni), sigma1,
                                  key1))
            continue;
          if (eng.in_uncertainty(static_cast<int>(mi), static_cast<int>(ni), extended,
                                 key2))
            continue;
          if (eng.in_policy_release(static_cast<int>(mi), static_cast<int>(ni),
                                    sigma1, key1))
            continue;
          Violation v;
          v.kind = "policy-specific-corollary";
          v.major = space.states[mi];
          v.sigma = sigma1;
          v.extension = succ.schedule;
          v.minor = space.states[ni];
          report.violations.push_back(std::move(v));
          if (report.violations.size() >= 16) break;
        }
        if (report.violations.size() >= 16) break;
      }
      if (report.violations.size() >= 16) break;
    }
    if (report.violations.size() >= 16) break;
  }
  report.status = !report.violations.empty() ? OracleReport::Status::Violation
                  : report.budget_exceeded   ? OracleReport::Status::Budget
                                             : OracleReport::Status::Pass;
  return report;
}

}  // namespace vdc
