// SMT-LIB 2.6 encoding of pure relational entailments and the external
// solver subprocess protocol. Every program variable is duplicated into
// side-indexed constants x$1/x$2; labels form a finite datatype with a
// defined leq table; traces are an algebraic snoc-list with recursively
// defined len/sum/contains; the query asserts hypothesis /\ not goal.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <functional>
#include <sstream>

#include "vdc/entail.hpp"

namespace vdc {

namespace {

std::string smt_name(const std::string& v) {
  std::string out;
  for (char c : v) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '$' || c == '_' ||
        c == '.' || c == '!')
      out += c;
    else
      out += '.';
  }
  return out;
}

std::string smt_int(long long v) {
  if (v < 0) return "(- " + std::to_string(-v) + ")";
  return std::to_string(v);
}

struct Encoder {
  const Entailment& e;
  const BackendConfig& cfg;
  std::map<std::string, Sort> sorts;
  bool uses_trace = false, uses_sum = false, uses_cat = false, uses_contains = false;
  int fresh = 0;

  void scan(const ExprPtr& x) {
    if (!x) return;
    switch (x->kind) {
      case ExprKind::Nil:
      case ExprKind::Snoc:
      case ExprKind::EventApp:
        uses_trace = true;
        break;
      case ExprKind::Len: uses_trace = true; break;
      case ExprKind::Sum: uses_trace = uses_sum = true; break;
      case ExprKind::Cat: uses_trace = uses_cat = true; break;
      case ExprKind::Contains: uses_trace = uses_contains = true; break;
      case ExprKind::Var:
        if (x->sort == Sort::Trace || x->sort == Sort::Event) uses_trace = true;
        break;
      case ExprKind::CurrentTrace:
        throw CapabilityError("__tr has no meaning in a pure entailment");
      default:
        break;
    }
    for (const auto& a : x->args) scan(a);
  }

  void scan(const AssertionPtr& a) {
    if (!a) return;
    if (a->binder_sort == Sort::Trace || a->binder_sort == Sort::Event)
      if (a->kind == AssertKind::Exists || a->kind == AssertKind::Forall)
        uses_trace = true;
    scan(a->e1);
    scan(a->e2);
    scan(a->a1);
    scan(a->a2);
    for (const auto& x : a->args) scan(x);
  }

  static const char* sort_ref(Sort s) {
    switch (s) {
      case Sort::Int: return "Int";
      case Sort::Bool: return "Bool";
      case Sort::Label: return "Label";
      case Sort::Trace: return "Trace";
      case Sort::Event: return "Event";
    }
    return "Int";
  }

  std::string expr(const ExprPtr& x, int side,
                   const std::map<std::string, std::string>& bound) {
    switch (x->kind) {
      case ExprKind::IntLit: return smt_int(x->int_val);
      case ExprKind::BoolLit: return x->int_val ? "true" : "false";
      case ExprKind::Var: {
        auto it = bound.find(x->name);
        if (it != bound.end())
          return it->second + (side == 1 ? "$1" : "$2");
        return smt_name(x->name) + (side == 1 ? "$1" : "$2");
      }
      case ExprKind::LabelLit: return "lvl_" + smt_name(x->name);
      case ExprKind::Unary:
        return std::string("(") + (x->un_op == UnOp::Neg ? "- " : "not ") +
               expr(x->args[0], side, bound) + ")";
      case ExprKind::Binary: {
        std::string a = expr(x->args[0], side, bound);
        std::string b = expr(x->args[1], side, bound);
        const char* op = nullptr;
        switch (x->bin_op) {
          case BinOp::Add: op = "+"; break;
          case BinOp::Sub: op = "-"; break;
          case BinOp::Mul: op = "*"; break;
          case BinOp::Div: op = "div"; break;  // SMT-LIB div/mod are Euclidean
          case BinOp::Mod: op = "mod"; break;
          case BinOp::Eq: op = "="; break;
          case BinOp::Ne: return "(distinct " + a + " " + b + ")";
          case BinOp::Lt: op = "<"; break;
          case BinOp::Le: op = "<="; break;
          case BinOp::Gt: op = ">"; break;
          case BinOp::Ge: op = ">="; break;
          case BinOp::And: op = "and"; break;
          case BinOp::Or: op = "or"; break;
          case BinOp::Imp: op = "=>"; break;
        }
        return std::string("(") + op + " " + a + " " + b + ")";
      }
      case ExprKind::Ite:
        return "(ite " + expr(x->args[0], side, bound) + " " +
               expr(x->args[1], side, bound) + " " + expr(x->args[2], side, bound) + ")";
      case ExprKind::Nil: return "t_nil";
      case ExprKind::Snoc:
        return "(t_snoc " + expr(x->args[0], side, bound) + " " +
               expr(x->args[1], side, bound) + ")";
      case ExprKind::Cat:
        return "(t_cat " + expr(x->args[0], side, bound) + " " +
               expr(x->args[1], side, bound) + ")";
      case ExprKind::EventApp: {
        if (x->args.empty()) return "mk_" + smt_name(x->name);
        std::string s = "(mk_" + smt_name(x->name);
        for (const auto& a : x->args) s += " " + expr(a, side, bound);
        return s + ")";
      }
      case ExprKind::Len: return "(t_len " + expr(x->args[0], side, bound) + ")";
      case ExprKind::Sum: return "(t_sum " + expr(x->args[0], side, bound) + ")";
      case ExprKind::Contains:
        return "(t_contains " + expr(x->args[0], side, bound) + " " +
               expr(x->args[1], side, bound) + ")";
      case ExprKind::CurrentTrace:
        throw CapabilityError("__tr has no meaning in a pure entailment");
      case ExprKind::Attacker:
        return "att";
    }
    return "true";
  }

  std::string assertion(const AssertionPtr& a,
                        std::map<std::string, std::string> bound) {
    switch (a->kind) {
      case AssertKind::Pure:
        return "(and " + expr(a->e1, 1, bound) + " " + expr(a->e1, 2, bound) + ")";
      case AssertKind::Classify: {
        std::string l1 = expr(a->e2, 1, bound);
        std::string l2 = expr(a->e2, 2, bound);
        std::string v1 = expr(a->e1, 1, bound);
        std::string v2 = expr(a->e1, 2, bound);
        return "(=> (and (leq " + l1 + " att) (leq " + l2 + " att)) (= " + v1 + " " +
               v2 + "))";
      }
      case AssertKind::Emp:
        return "true";
      case AssertKind::Star:
        return "(and " + assertion(a->a1, bound) + " " + assertion(a->a2, bound) + ")";
      case AssertKind::Imp:
        return "(=> " + assertion(a->a1, bound) + " " + assertion(a->a2, bound) + ")";
      case AssertKind::Exists:
      case AssertKind::Forall: {
        // The relational semantics binds the two sides independently.
        std::string q = a->kind == AssertKind::Exists ? "exists" : "forall";
        std::string base = "q!" + std::to_string(fresh++) + "." + smt_name(a->name);
        bound[a->name] = base;
        const char* sr = sort_ref(a->binder_sort);
        return "(" + q + " ((" + base + "$1 " + sr + ") (" + base + "$2 " + sr +
               ")) " + assertion(a->a1, bound) + ")";
      }
      default:
        throw UsageError("spatial assertion in a pure entailment");
    }
  }

  std::string encode() {
    for (const auto& h : e.hyp) scan(h);
    scan(e.goal);
    std::ostringstream os;
    os << "(set-logic ALL)\n";

    // Finite label sort plus the declared order, closed.
    const Lattice& lat = *cfg.lattice;
    os << "(declare-datatypes ((Label 0)) ((";
    for (int i = 0; i < lat.size(); ++i) os << "(lvl_" << smt_name(lat.name(i)) << ")";
    os << ")))\n";
    os << "(define-fun leq ((a Label) (b Label)) Bool (or";
    for (int i = 0; i < lat.size(); ++i)
      for (int j = 0; j < lat.size(); ++j)
        if (lat.leq(i, j))
          os << " (and (= a lvl_" << smt_name(lat.name(i)) << ") (= b lvl_"
             << smt_name(lat.name(j)) << "))";
    os << "))\n";

    if (uses_trace) {
      if (!cfg.events || cfg.events->empty())
        throw CapabilityError("trace terms need declared events");
      os << "(declare-datatypes ((Event 0) (Trace 0)) ((";
      for (const auto& ev : *cfg.events) {
        os << "(mk_" << smt_name(ev.name);
        for (int i = 0; i < ev.arity; ++i)
          os << " (" << smt_name(ev.name) << "_f" << i << " Int)";
        os << ")";
      }
      os << ") ((t_nil) (t_snoc (t_init Trace) (t_last Event)))))\n";
      os << "(define-fun-rec t_len ((t Trace)) Int "
            "(ite ((_ is t_nil) t) 0 (+ 1 (t_len (t_init t)))))\n";
      os << "(assert (forall ((t Trace)) (>= (t_len t) 0)))\n";
      if (uses_sum) {
        for (const auto& ev : *cfg.events)
          if (ev.arity != 1)
            throw CapabilityError("sum needs single-field events");
        os << "(define-fun ev_payload ((e Event)) Int ";
        std::string closing;
        for (size_t i = 0; i + 1 < cfg.events->size(); ++i) {
          const auto& ev = (*cfg.events)[i];
          os << "(ite ((_ is mk_" << smt_name(ev.name) << ") e) (" << smt_name(ev.name)
             << "_f0 e) ";
          closing += ")";
        }
        os << "(" << smt_name(cfg.events->back().name) << "_f0 e)" << closing << ")\n";
        os << "(define-fun-rec t_sum ((t Trace)) Int "
              "(ite ((_ is t_nil) t) 0 (+ (ev_payload (t_last t)) (t_sum (t_init "
              "t)))))\n";
      }
      if (uses_cat)
        os << "(define-fun-rec t_cat ((a Trace) (b Trace)) Trace "
              "(ite ((_ is t_nil) b) a (t_snoc (t_cat a (t_init b)) (t_last b))))\n";
      if (uses_contains)
        os << "(define-fun-rec t_contains ((t Trace) (e Event)) Bool "
              "(ite ((_ is t_nil) t) false (or (= (t_last t) e) (t_contains (t_init "
              "t) e))))\n";
    }

    if (e.attacker)
      os << "(define-fun att () Label lvl_" << smt_name(lat.name(*e.attacker))
         << ")\n";
    else
      os << "(declare-const att Label)\n";

    for (const auto& [name, sort] : e.sorts) {
      if (sort == Sort::Label) {
        // Label-sorted symbols evaluate into the carrier and are shared
        // between the two sides.
        os << "(declare-const " << smt_name(name) << "$1 Label)\n";
        os << "(declare-const " << smt_name(name) << "$2 Label)\n";
        continue;
      }
      os << "(declare-const " << smt_name(name) << "$1 " << sort_ref(sort) << ")\n";
      os << "(declare-const " << smt_name(name) << "$2 " << sort_ref(sort) << ")\n";
    }

    for (const auto& h : e.hyp) os << "(assert " << assertion(h, {}) << ")\n";
    os << "(assert (not " << assertion(e.goal, {}) << "))\n";
    os << "(check-sat)\n(get-model)\n";
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Subprocess driver
// ---------------------------------------------------------------------------

struct SolverRun {
  bool spawned = false;
  bool timed_out = false;
  int exit_code = -1;
  std::string output;
  std::string error;
};

SolverRun run_solver(const std::string& path, const std::string& input,
                     double timeout_seconds) {
  SolverRun r;
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    r.error = "pipe failed";
    return r;
  }
  pid_t pid = fork();
  if (pid < 0) {
    r.error = "fork failed";
    return r;
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execlp(path.c_str(), path.c_str(), (char*)nullptr);
    _exit(127);
  }
  r.spawned = true;
  close(in_pipe[0]);
  close(out_pipe[1]);

  // The solver may die before reading (e.g. exec failure); take EPIPE as an
  // error return instead of a process-killing signal.
  void (*old_pipe_handler)(int) = signal(SIGPIPE, SIG_IGN);
  size_t written = 0;
  while (written < input.size()) {
    ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
    if (n <= 0) break;
    written += static_cast<size_t>(n);
  }
  close(in_pipe[1]);
  signal(SIGPIPE, old_pipe_handler);

  int flags = fcntl(out_pipe[0], F_GETFL, 0);
  fcntl(out_pipe[0], F_SETFL, flags | O_NONBLOCK);
  double waited = 0;
  const double tick = 0.01;
  bool done = false;
  while (!done) {
    struct pollfd pfd{out_pipe[0], POLLIN, 0};
    int pr = poll(&pfd, 1, static_cast<int>(tick * 1000));
    if (pr > 0) {
      char buf[4096];
      ssize_t n;
      while ((n = read(out_pipe[0], buf, sizeof buf)) > 0)
        r.output.append(buf, static_cast<size_t>(n));
      if (n == 0) done = true;
    }
    if (!done) {
      int status = 0;
      pid_t w = waitpid(pid, &status, WNOHANG);
      if (w == pid) {
        char buf[4096];
        ssize_t n;
        while ((n = read(out_pipe[0], buf, sizeof buf)) > 0)
          r.output.append(buf, static_cast<size_t>(n));
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        close(out_pipe[0]);
        return r;
      }
      waited += tick;
      if (waited >= timeout_seconds) {
        kill(pid, SIGKILL);
        waitpid(pid, nullptr, 0);
        r.timed_out = true;
        close(out_pipe[0]);
        return r;
      }
    }
  }
  close(out_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// ---------------------------------------------------------------------------
// Model parsing (s-expressions)
// ---------------------------------------------------------------------------

struct Sexp {
  std::string atom;
  std::vector<Sexp> list;
  bool is_atom = false;
};

size_t parse_sexp(const std::string& s, size_t pos, Sexp& out) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  if (pos >= s.size()) return pos;
  if (s[pos] == '(') {
    ++pos;
    out.is_atom = false;
    while (pos < s.size()) {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos < s.size() && s[pos] == ')') return pos + 1;
      Sexp child;
      size_t next = parse_sexp(s, pos, child);
      if (next == pos) return pos;
      out.list.push_back(std::move(child));
      pos = next;
    }
    return pos;
  }
  out.is_atom = true;
  size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) &&
         s[pos] != '(' && s[pos] != ')')
    ++pos;
  out.atom = s.substr(start, pos - start);
  return pos;
}

std::optional<Value> value_of_sexp(const Sexp& s, const BackendConfig& cfg) {
  if (s.is_atom) {
    if (s.atom == "t_nil") return Value::of_trace({});
    if (s.atom == "true") return Value(1);
    if (s.atom == "false") return Value(0);
    if (s.atom.rfind("lvl_", 0) == 0) {
      auto l = cfg.lattice->try_level(s.atom.substr(4));
      if (l) return Value::of_level(*l);
      return std::nullopt;
    }
    if (s.atom.rfind("mk_", 0) == 0) {
      EventVal ev;
      ev.ctor = s.atom.substr(3);
      return Value::of_event(ev);
    }
    try {
      return Value(std::stoll(s.atom));
    } catch (...) {
      return std::nullopt;
    }
  }
  if (s.list.empty()) return std::nullopt;
  const std::string& head = s.list[0].is_atom ? s.list[0].atom : "";
  if (head == "-" && s.list.size() == 2) {
    auto v = value_of_sexp(s.list[1], cfg);
    if (v && v->is_int()) return Value(-v->as_int());
    return std::nullopt;
  }
  if (head == "t_snoc" && s.list.size() == 3) {
    auto t = value_of_sexp(s.list[1], cfg);
    auto ev = value_of_sexp(s.list[2], cfg);
    if (t && ev && t->is_trace() && ev->is_event()) {
      TraceVal tr = t->as_trace();
      tr.push_back(ev->as_event());
      return Value::of_trace(std::move(tr));
    }
    return std::nullopt;
  }
  if (head.rfind("mk_", 0) == 0) {
    EventVal ev;
    ev.ctor = head.substr(3);
    for (size_t i = 1; i < s.list.size(); ++i) {
      auto f = value_of_sexp(s.list[i], cfg);
      if (!f || !f->is_int()) return std::nullopt;
      ev.fields.push_back(f->as_int());
    }
    return Value::of_event(std::move(ev));
  }
  return std::nullopt;
}

}  // namespace

std::string encode_relational(const Entailment& e, const BackendConfig& cfg) {
  if (!cfg.lattice) throw UsageError("backend config lacks a lattice");
  Encoder enc{e, cfg, {}, false, false, false, false, 0};
  return enc.encode();
}

// Runs the external solver and interprets its verdict; defined here, used by
// check_entailment in entail.cpp.
SolverVerdict check_with_external_solver(const Entailment& e,
                                         const BackendConfig& cfg) {
  SolverVerdict v;
  std::string input;
  try {
    input = encode_relational(e, cfg);
  } catch (const CapabilityError& err) {
    v.status = VcStatus::Unknown;
    v.reason = err.what();
    return v;
  }
  SolverRun run = run_solver(cfg.solver_path, input, cfg.timeout_seconds);
  if (!run.spawned || (!run.timed_out && run.exit_code == 127)) {
    v.status = VcStatus::Unknown;
    v.reason = "solver could not be executed: " + cfg.solver_path;
    return v;
  }
  if (run.timed_out) {
    v.status = VcStatus::Unknown;
    v.reason = "solver timeout after " + std::to_string(cfg.timeout_seconds) + "s";
    return v;
  }
  std::istringstream is(run.output);
  std::string first;
  std::getline(is, first);
  while (!first.empty() && (first.back() == '\r' || first.back() == ' '))
    first.pop_back();
  if (first == "unsat") {
    v.status = VcStatus::Valid;
    return v;
  }
  if (first != "sat") {
    v.status = VcStatus::Unknown;
    v.reason = run.output.empty() ? "solver produced no output"
                                  : "solver said: " + first;
    return v;
  }
  // Extract the model: a sequence of (define-fun name () sort value) entries.
  std::string rest((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  Sexp model;
  parse_sexp(rest, 0, model);
  Countermodel m;
  bool have_att = e.attacker.has_value();
  if (e.attacker) m.attacker = *e.attacker;
  auto visit = [&](const Sexp& entry) {
    if (entry.is_atom || entry.list.size() < 5) return;
    if (!entry.list[0].is_atom || entry.list[0].atom != "define-fun") return;
    const std::string& name = entry.list[1].atom;
    auto val = value_of_sexp(entry.list.back(), cfg);
    if (!val) return;
    if (name == "att" && val->is_level()) {
      m.attacker = val->as_level();
      have_att = true;
      return;
    }
    if (name.size() > 2 && name.substr(name.size() - 2) == "$1")
      m.major[name.substr(0, name.size() - 2)] = *val;
    else if (name.size() > 2 && name.substr(name.size() - 2) == "$2")
      m.minor[name.substr(0, name.size() - 2)] = *val;
  };
  if (!model.is_atom) {
    for (const auto& entry : model.list) {
      if (entry.is_atom && entry.atom == "model") continue;  // older solvers
      visit(entry);
    }
  }
  if (!have_att) m.attacker = cfg.lattice->bottom();
  // Unmentioned symbols default to zero-like values.
  for (const auto& [name, sort] : e.sorts) {
    auto ensure = [&](Store& st) {
      if (st.count(name)) return;
      switch (sort) {
        case Sort::Int:
        case Sort::Bool: st[name] = Value(0); break;
        case Sort::Label: st[name] = Value::of_level(cfg.lattice->bottom()); break;
        case Sort::Trace: st[name] = Value::of_trace({}); break;
        case Sort::Event: {
          if (cfg.events && !cfg.events->empty()) {
            EventVal ev;
            ev.ctor = (*cfg.events)[0].name;
            ev.fields.assign((*cfg.events)[0].arity, 0);
            st[name] = Value::of_event(ev);
          }
          break;
        }
      }
    };
    ensure(m.major);
    ensure(m.minor);
  }
  replay_countermodel(e, cfg, m);  // throws InternalSoundnessError on mismatch
  v.status = VcStatus::Invalid;
  v.model = std::move(m);
  return v;
}

}  // namespace vdc
