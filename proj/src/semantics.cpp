#include "vdc/semantics.hpp"

#include <deque>
#include <functional>
#include <sstream>

#include "vdc/parser.hpp"

namespace vdc {

std::string Action::str(const Lattice* lat) const {
  std::ostringstream os;
  switch (kind) {
    case ActionKind::Tau: os << "tau"; break;
    case ActionKind::SchedL: os << "L"; break;
    case ActionKind::SchedR: os << "R"; break;
    case ActionKind::Out:
      os << "out(" << (lat ? lat->name(out_level) : std::to_string(out_level)) << ", "
         << out_value << ")";
      break;
    case ActionKind::Assume:
      os << "assume(" << format_assertion(rho) << ")";
      break;
    case ActionKind::Load: os << "load " << addr; break;
    case ActionKind::Store: os << "store " << addr; break;
    case ActionKind::Trace:
      os << "trace(" << Value::of_event(event).str() << ")";
      break;
  }
  return os.str();
}

bool action_equal(const Action& a, const Action& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ActionKind::Tau:
    case ActionKind::SchedL:
    case ActionKind::SchedR:
      return true;
    case ActionKind::Out:
      return a.out_level == b.out_level && a.out_value == b.out_value;
    case ActionKind::Load:
    case ActionKind::Store:
      return a.addr == b.addr;
    case ActionKind::Trace:
      return a.event == b.event;
    case ActionKind::Assume:
      return assertion_equal(a.rho, b.rho) && a.store == b.store && a.ghost == b.ghost;
  }
  return false;
}

bool schedule_equal(const Schedule& a, const Schedule& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!action_equal(a[i], b[i])) return false;
  return true;
}

std::string schedule_str(const Schedule& s, const Lattice* lat) {
  std::ostringstream os;
  os << "<";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i].str(lat);
  os << ">";
  return os.str();
}

TraceVal trace_of(const Schedule& s) {
  TraceVal t;
  for (const auto& a : s)
    if (a.kind == ActionKind::Trace) t.push_back(a.event);
  return t;
}

Configuration Configuration::run(std::set<std::string> locks, CommandPtr c, Store s,
                                 Heap h, TraceVal g) {
  Configuration k;
  k.state = ConfigState::Run;
  k.locks = std::move(locks);
  k.cmd = std::move(c);
  k.store = std::move(s);
  k.heap = std::move(h);
  k.ghost = std::move(g);
  return k;
}

Configuration Configuration::stop(std::set<std::string> locks, Store s, Heap h,
                                  TraceVal g) {
  Configuration k;
  k.state = ConfigState::Stop;
  k.locks = std::move(locks);
  k.store = std::move(s);
  k.heap = std::move(h);
  k.ghost = std::move(g);
  return k;
}

Configuration Configuration::abort() {
  Configuration k;
  k.state = ConfigState::Abort;
  return k;
}

bool Configuration::operator==(const Configuration& o) const {
  if (state != o.state) return false;
  if (state == ConfigState::Abort) return true;
  if (locks != o.locks || store != o.store || heap != o.heap || ghost != o.ghost)
    return false;
  if (state == ConfigState::Run) return command_equal(cmd, o.cmd);
  return true;
}

std::string Configuration::str(const Lattice* lat) const {
  std::ostringstream os;
  switch (state) {
    case ConfigState::Abort: return "abort";
    case ConfigState::Run: os << "run"; break;
    case ConfigState::Stop: os << "stop"; break;
  }
  os << "(locks={";
  bool first = true;
  for (const auto& l : locks) {
    os << (first ? "" : ",") << l;
    first = false;
  }
  os << "}, store={";
  first = true;
  for (const auto& [x, v] : store) {
    os << (first ? "" : ",") << x << ":" << v.str(lat);
    first = false;
  }
  os << "}, heap={";
  first = true;
  for (const auto& [a, v] : heap) {
    os << (first ? "" : ",") << a << ":" << v;
    first = false;
  }
  os << "}, ghost=" << trace_str(ghost) << ")";
  return os.str();
}

namespace {

// Evaluation that maps an evaluation fault (division by zero) onto abort.
struct EvalOutcome {
  bool ok = true;
  Value value;
};

EvalOutcome try_eval(const Configuration& k, const ExprPtr& e, const Lattice& lat) {
  EvalOutcome r;
  try {
    EvalEnv env;
    env.store = &k.store;
    env.ghost = &k.ghost;
    r.value = eval_expr(env, e, lat);
  } catch (const EvalFault&) {
    r.ok = false;
  }
  return r;
}

}  // namespace

std::vector<Successor> step(const Configuration& k, const Lattice& lat) {
  if (!k.is_run()) throw UsageError("step requires a running configuration");
  const Command& c = *k.cmd;
  std::vector<Successor> out;

  switch (c.kind) {
    case CmdKind::Skip:
      out.push_back({{Action::tau()}, Configuration::stop(k.locks, k.store, k.heap, k.ghost)});
      break;

    case CmdKind::Assign: {
      auto v = try_eval(k, c.e1, lat);
      if (!v.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      Store s = k.store;
      s[c.var] = v.value;
      out.push_back({{Action::tau()},
                     Configuration::stop(k.locks, std::move(s), k.heap, k.ghost)});
      break;
    }

    case CmdKind::Load: {
      auto p = try_eval(k, c.e1, lat);
      if (!p.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      long long addr = p.value.as_int();
      auto it = k.heap.find(addr);
      if (it == k.heap.end()) {
        out.push_back({{Action::load(addr)}, Configuration::abort()});
      } else {
        Store s = k.store;
        s[c.var] = Value(it->second);
        out.push_back({{Action::load(addr)},
                       Configuration::stop(k.locks, std::move(s), k.heap, k.ghost)});
      }
      break;
    }

    case CmdKind::Store: {
      auto p = try_eval(k, c.e1, lat);
      auto v = p.ok ? try_eval(k, c.e2, lat) : EvalOutcome{false, {}};
      if (!p.ok || !v.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      long long addr = p.value.as_int();
      if (!k.heap.count(addr)) {
        out.push_back({{Action::store_(addr)}, Configuration::abort()});
      } else {
        Heap h = k.heap;
        h[addr] = v.value.as_int();
        out.push_back({{Action::store_(addr)},
                       Configuration::stop(k.locks, k.store, std::move(h), k.ghost)});
      }
      break;
    }

    case CmdKind::LockCmd: {
      // Blocks (no successor) when the lock is not available.
      if (k.locks.count(c.var)) {
        auto locks = k.locks;
        locks.erase(c.var);
        out.push_back({{Action::tau()},
                       Configuration::stop(std::move(locks), k.store, k.heap, k.ghost)});
      }
      break;
    }

    case CmdKind::UnlockCmd: {
      if (!k.locks.count(c.var)) {
        auto locks = k.locks;
        locks.insert(c.var);
        out.push_back({{Action::tau()},
                       Configuration::stop(std::move(locks), k.store, k.heap, k.ghost)});
      }
      break;
    }

    case CmdKind::Seq: {
      Configuration inner = k;
      inner.cmd = c.c1;
      for (auto& s : step(inner, lat)) {
        if (s.config.is_abort()) {
          out.push_back(std::move(s));
        } else if (s.config.is_stop()) {
          Configuration next = Configuration::run(s.config.locks, c.c2, s.config.store,
                                                  s.config.heap, s.config.ghost);
          out.push_back({std::move(s.schedule), std::move(next)});
        } else {
          Configuration next = s.config;
          next.cmd = mk::seq(s.config.cmd, c.c2);
          out.push_back({std::move(s.schedule), std::move(next)});
        }
      }
      break;
    }

    case CmdKind::Par: {
      Configuration left = k;
      left.cmd = c.c1;
      auto ls = step(left, lat);
      for (auto& s : ls) {
        if (s.config.is_abort()) {
          out.push_back({s.schedule, Configuration::abort()});
        } else if (s.config.is_stop()) {
          Configuration next = Configuration::run(s.config.locks, c.c2, s.config.store,
                                                  s.config.heap, s.config.ghost);
          out.push_back({s.schedule, std::move(next)});
        } else {
          Configuration next = s.config;
          next.cmd = mk::par(s.config.cmd, c.c2, c.pre1, c.post1, c.pre2, c.post2);
          out.push_back({s.schedule, std::move(next)});
        }
        out.back().schedule.insert(out.back().schedule.begin(), Action::sched_l());
      }
      Configuration right = k;
      right.cmd = c.c2;
      auto rs = step(right, lat);
      for (auto& s : rs) {
        if (s.config.is_abort()) {
          out.push_back({s.schedule, Configuration::abort()});
        } else if (s.config.is_stop()) {
          Configuration next = Configuration::run(s.config.locks, c.c1, s.config.store,
                                                  s.config.heap, s.config.ghost);
          out.push_back({s.schedule, std::move(next)});
        } else {
          Configuration next = s.config;
          next.cmd = mk::par(c.c1, s.config.cmd, c.pre1, c.post1, c.pre2, c.post2);
          out.push_back({s.schedule, std::move(next)});
        }
        out.back().schedule.insert(out.back().schedule.begin(), Action::sched_r());
      }
      break;
    }

    case CmdKind::If: {
      auto g = try_eval(k, c.e1, lat);
      if (!g.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      Configuration next =
          Configuration::run(k.locks, g.value.truthy() ? c.c1 : c.c2, k.store, k.heap,
                             k.ghost);
      out.push_back({{Action::tau()}, std::move(next)});
      break;
    }

    case CmdKind::While: {
      auto g = try_eval(k, c.e1, lat);
      if (!g.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      if (g.value.truthy()) {
        Configuration next =
            Configuration::run(k.locks, mk::seq(c.c1, k.cmd), k.store, k.heap, k.ghost);
        out.push_back({{Action::tau()}, std::move(next)});
      } else {
        out.push_back({{Action::tau()},
                       Configuration::stop(k.locks, k.store, k.heap, k.ghost)});
      }
      break;
    }

    case CmdKind::Assume:
      out.push_back({{Action::assume(k.store, k.ghost, c.inv)},
                     Configuration::stop(k.locks, k.store, k.heap, k.ghost)});
      break;

    case CmdKind::Output: {
      auto l = try_eval(k, c.e1, lat);
      auto v = l.ok ? try_eval(k, c.e2, lat) : EvalOutcome{false, {}};
      if (!l.ok || !v.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      out.push_back({{Action::out(l.value.as_level(), v.value.as_int())},
                     Configuration::stop(k.locks, k.store, k.heap, k.ghost)});
      break;
    }

    case CmdKind::TraceEmit: {
      auto v = try_eval(k, c.e1, lat);
      if (!v.ok) {
        out.push_back({{Action::tau()}, Configuration::abort()});
        break;
      }
      TraceVal g = k.ghost;
      g.push_back(v.value.as_event());
      out.push_back({{Action::trace(v.value.as_event())},
                     Configuration::stop(k.locks, k.store, k.heap, std::move(g))});
      break;
    }

    // Annotation-only commands are internal steps.
    case CmdKind::AssertCmd:
    case CmdKind::SplitCmd:
      out.push_back({{Action::tau()}, Configuration::stop(k.locks, k.store, k.heap, k.ghost)});
      break;
  }
  return out;
}

const ProcDecl& resolve_entry(const Program& p, const std::string& name) {
  if (!name.empty()) {
    const ProcDecl* proc = p.find_proc(name);
    if (!proc) throw UsageError("no procedure named '" + name + "'");
    return *proc;
  }
  if (const ProcDecl* main = p.find_proc("main")) return *main;
  if (p.procs.size() == 1) return p.procs[0];
  throw UsageError("ambiguous entry: declare a 'main' procedure or name one");
}

Configuration initial_configuration(const Program& p, const ProcDecl& entry) {
  std::set<std::string> locks;
  for (const auto& l : p.locks) locks.insert(l.name);
  Store store;
  std::set<std::string> vars = command_vars(entry.body);
  free_vars(entry.requires_, vars);
  for (const auto& v : vars) store[v] = Value(0);
  Heap heap;
  std::function<void(const AssertionPtr&)> cells = [&](const AssertionPtr& a) {
    if (!a) return;
    if (a->kind == AssertKind::PointsTo && a->e1->kind == ExprKind::IntLit) {
      long long val = 0;
      if (a->e2->kind == ExprKind::IntLit) val = a->e2->int_val;
      heap[a->e1->int_val] = val;
    }
    cells(a->a1);
    cells(a->a2);
  };
  cells(entry.requires_);
  for (const auto& l : p.locks) cells(l.invariant);
  return Configuration::run(std::move(locks), entry.body, std::move(store),
                            std::move(heap), {});
}

RunsResult runs(const Configuration& k0, int max_steps, const Lattice& lat) {
  if (max_steps < 0) throw UsageError("runs requires max_steps >= 0");
  RunsResult result;
  struct Node {
    Schedule sched;
    Configuration config;
    int steps;
  };
  std::deque<Node> frontier;
  frontier.push_back({{}, k0, 0});
  while (!frontier.empty()) {
    Node n = std::move(frontier.front());
    frontier.pop_front();
    result.entries.push_back({n.sched, n.config});
    if (!n.config.is_run()) continue;
    if (n.steps >= max_steps) {
      result.budget_exceeded = true;
      continue;
    }
    for (auto& s : step(n.config, lat)) {
      Schedule sched = n.sched;
      sched.insert(sched.end(), s.schedule.begin(), s.schedule.end());
      frontier.push_back({std::move(sched), std::move(s.config), n.steps + 1});
    }
  }
  return result;
}

}  // namespace vdc
