#include "vdc/entail.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <sstream>

namespace vdc {

SolverVerdict check_with_external_solver(const Entailment& e,
                                         const BackendConfig& cfg);  // smtlib.cpp

const char* vc_status_name(VcStatus s) {
  switch (s) {
    case VcStatus::Valid: return "valid";
    case VcStatus::Invalid: return "invalid";
    case VcStatus::Unknown: return "unknown";
  }
  return "?";
}

std::string Countermodel::str(const Lattice* lat) const {
  std::ostringstream os;
  os << "attacker=" << (lat ? lat->name(attacker) : std::to_string(attacker));
  os << " major={";
  bool first = true;
  for (const auto& [k, v] : major) {
    os << (first ? "" : ", ") << k << ":" << v.str(lat);
    first = false;
  }
  os << "} minor={";
  first = true;
  for (const auto& [k, v] : minor) {
    os << (first ? "" : ", ") << k << ":" << v.str(lat);
    first = false;
  }
  os << "}";
  return os.str();
}

namespace {

void collect_int_constants(const ExprPtr& e, std::set<long long>& out) {
  if (!e) return;
  if (e->kind == ExprKind::IntLit) out.insert(e->int_val);
  for (const auto& a : e->args) collect_int_constants(a, out);
}

void collect_int_constants(const AssertionPtr& a, std::set<long long>& out) {
  if (!a) return;
  collect_int_constants(a->e1, out);
  collect_int_constants(a->e2, out);
  collect_int_constants(a->a1, out);
  collect_int_constants(a->a2, out);
  for (const auto& e : a->args) collect_int_constants(e, out);
}

struct SearchCtx {
  const Entailment* ent = nullptr;
  const BackendConfig* cfg = nullptr;
  RelEvalCtx rel;
  std::vector<std::string> vars;              // free vars occurring in the entailment
  std::map<std::string, Sort> var_sort;
  std::vector<long long> ints;                // int candidates
  int max_len = 2;
  bool exhaustive_traces = false;             // brute force: all traces up to max_len
  std::vector<Level> attackers;
};

// Satisfies every hypothesis and falsifies the goal? Evaluation faults mean
// the assignment is outside the entailment's domain and is skipped.
bool falsifies(const SearchCtx& sc, Level att, const Store& s1, const Store& s2) {
  try {
    for (const auto& h : sc.ent->hyp)
      if (!holds_pure(sc.rel, att, s1, s2, h)) return false;
    return !holds_pure(sc.rel, att, s1, s2, sc.ent->goal);
  } catch (const EvalFault&) {
    return false;
  } catch (const DefinitionError&) {
    return false;
  }
}

std::vector<Value> candidates(const SearchCtx& sc, Sort sort) {
  std::vector<Value> out;
  switch (sort) {
    case Sort::Int:
    case Sort::Bool:
      for (long long v : sc.ints) out.push_back(Value(v));
      break;
    case Sort::Label:
      for (int l = 0; l < sc.rel.lattice->size(); ++l)
        out.push_back(Value::of_level(l));
      break;
    case Sort::Event: {
      RelEvalCtx ctx = sc.rel;
      out = values_of_sort(ctx, Sort::Event);
      break;
    }
    case Sort::Trace: {
      // Short traces exhaustively; longer ones only uniform (one repeated
      // payload), which keeps counterexamples with large length thresholds
      // reachable without blowing up the search space. The brute-force
      // oracle instead enumerates every trace up to the bound.
      RelEvalCtx ctx = sc.rel;
      WitnessDomains d = *ctx.domains;
      d.max_trace_len = sc.exhaustive_traces ? sc.max_len : std::min(sc.max_len, 3);
      ctx.domains = d;
      out = values_of_sort(ctx, Sort::Trace);
      if (!sc.exhaustive_traces && sc.max_len > 3 && sc.rel.events &&
          !sc.rel.events->empty()) {
        for (int n = 4; n <= sc.max_len; ++n)
          for (const auto& decl : *sc.rel.events) {
            for (long long v = sc.cfg->range_lo;
                 v <= std::min(sc.cfg->range_hi, sc.cfg->range_lo + 3); ++v) {
              EventVal ev;
              ev.ctor = decl.name;
              ev.fields.assign(decl.arity, v);
              out.push_back(Value::of_trace(TraceVal(n, ev)));
            }
          }
      }
      break;
    }
  }
  return out;
}

// Minor-side perturbations of a value: small integer offsets, and for traces
// a single perturbed payload or a different uniform payload.
std::vector<Value> perturbations(const SearchCtx& sc, const Value& v) {
  std::vector<Value> out;
  if (v.is_int()) {
    for (long long d : {-2, -1, 1, 2}) out.push_back(Value(v.as_int() + d));
    return out;
  }
  if (v.is_level()) {
    for (int l = 0; l < sc.rel.lattice->size(); ++l)
      if (l != v.as_level()) out.push_back(Value::of_level(l));
    return out;
  }
  if (v.is_event()) {
    EventVal ev = v.as_event();
    for (size_t i = 0; i < ev.fields.size(); ++i)
      for (long long d : {-1, 1}) {
        EventVal e2 = ev;
        e2.fields[i] += d;
        out.push_back(Value::of_event(e2));
      }
    return out;
  }
  if (v.is_trace()) {
    const TraceVal& t = v.as_trace();
    for (size_t i = 0; i < t.size(); ++i)
      for (size_t f = 0; f < t[i].fields.size(); ++f)
        for (long long d : {-2, -1, 1, 2}) {
          TraceVal t2 = t;
          t2[i].fields[f] += d;
          out.push_back(Value::of_trace(std::move(t2)));
        }
    if (!t.empty() && !t[0].fields.empty()) {
      for (long long v2 = sc.cfg->range_lo; v2 <= sc.cfg->range_hi; ++v2) {
        EventVal ev = t[0];
        for (auto& f : ev.fields) f = v2;
        TraceVal t2(t.size(), ev);
        if (!(t2 == t)) out.push_back(Value::of_trace(std::move(t2)));
      }
    }
    return out;
  }
  return out;
}

bool in_ranges(const SearchCtx& sc, const Value& v) {
  if (v.is_int()) return v.as_int() >= sc.cfg->range_lo && v.as_int() <= sc.cfg->range_hi;
  if (v.is_event()) {
    for (long long f : v.as_event().fields)
      if (f < sc.cfg->range_lo || f > sc.cfg->range_hi) return false;
    return true;
  }
  if (v.is_trace()) {
    if (static_cast<int>(v.as_trace().size()) > sc.max_len) return false;
    for (const auto& ev : v.as_trace())
      for (long long f : ev.fields)
        if (f < sc.cfg->range_lo || f > sc.cfg->range_hi) return false;
    return true;
  }
  return true;
}

// Defining equalities x == rhs (x not free in rhs) let the search enumerate
// only the independent variables and compute the rest.
struct Definitions {
  std::vector<std::pair<std::string, ExprPtr>> ordered;  // evaluation order
  std::set<std::string> defined;
};

Definitions extract_definitions(const Entailment& e,
                                const std::vector<std::string>& vars) {
  Definitions defs;
  std::map<std::string, ExprPtr> raw;
  std::function<void(const AssertionPtr&)> scan = [&](const AssertionPtr& a) {
    if (!a) return;
    if (a->kind == AssertKind::Star) {
      scan(a->a1);
      scan(a->a2);
      return;
    }
    if (a->kind == AssertKind::Pure && a->e1->kind == ExprKind::Binary &&
        a->e1->bin_op == BinOp::Eq) {
      const ExprPtr& l = a->e1->args[0];
      const ExprPtr& r = a->e1->args[1];
      if (l->kind == ExprKind::Var && !free_vars(r).count(l->name) &&
          !raw.count(l->name))
        raw[l->name] = r;
      else if (r->kind == ExprKind::Var && !free_vars(l).count(r->name) &&
               !raw.count(r->name))
        raw[r->name] = l;
    }
  };
  for (const auto& h : e.hyp) scan(h);

  // Order definitions so that each right-hand side only uses independents or
  // earlier-defined variables; drop anything cyclic.
  std::set<std::string> placed;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = raw.begin(); it != raw.end();) {
      bool ready = true;
      for (const auto& v : free_vars(it->second))
        if (raw.count(v) && !placed.count(v)) ready = false;
      if (ready) {
        defs.ordered.emplace_back(it->first, it->second);
        placed.insert(it->first);
        it = raw.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  for (const auto& [name, rhs] : defs.ordered) {
    (void)rhs;
    if (std::find(vars.begin(), vars.end(), name) != vars.end())
      defs.defined.insert(name);
  }
  return defs;
}

bool eval_definitions(const SearchCtx& sc, const Definitions& defs, Store& s) {
  for (const auto& [name, rhs] : defs.ordered) {
    try {
      s[name] = eval_expr(s, rhs, *sc.rel.lattice);
    } catch (const std::runtime_error&) {
      return false;
    }
  }
  return true;
}

std::optional<Countermodel> search_countermodel(const Entailment& e,
                                                const BackendConfig& cfg,
                                                bool use_definitions,
                                                bool with_stages) {
  SearchCtx sc;
  sc.ent = &e;
  sc.cfg = &cfg;
  sc.rel.lattice = cfg.lattice;
  sc.rel.events = cfg.events;

  std::set<std::string> occurring;
  for (const auto& h : e.hyp) free_vars(h, occurring);
  free_vars(e.goal, occurring);
  for (const auto& v : occurring) {
    auto it = e.sorts.find(v);
    sc.var_sort[v] = it == e.sorts.end() ? Sort::Int : it->second;
    sc.vars.push_back(v);
  }

  std::set<long long> consts;
  for (const auto& h : e.hyp) collect_int_constants(h, consts);
  collect_int_constants(e.goal, consts);
  for (long long v = cfg.range_lo; v <= cfg.range_hi; ++v) sc.ints.push_back(v);
  if (!cfg.strict_ranges) {
    for (long long c : consts) {
      for (long long d : {-1LL, 0LL, 1LL}) {
        long long v = c + d;
        if (std::find(sc.ints.begin(), sc.ints.end(), v) == sc.ints.end())
          sc.ints.push_back(v);
      }
      if (sc.ints.size() > 24) break;
    }
    std::sort(sc.ints.begin(), sc.ints.end());
  }

  long long max_const = 0;
  for (long long c : consts) max_const = std::max(max_const, std::llabs(c));
  sc.max_len = cfg.max_trace_len >= 0
                   ? cfg.max_trace_len
                   : static_cast<int>(std::min<long long>(max_const + 1, 8));
  if (sc.max_len < 2) sc.max_len = 2;

  WitnessDomains dom;
  // Quantifier witnesses must cover every value the search can place in a
  // store, including minor-side perturbations (up to +-2 outside the range).
  dom.lo = (sc.ints.empty() ? 0 : sc.ints.front()) - 2;
  dom.hi = (sc.ints.empty() ? 0 : sc.ints.back()) + 2;
  dom.max_trace_len = std::min(sc.max_len, 3);
  sc.rel.domains = dom;

  if (e.attacker)
    sc.attackers = {*e.attacker};
  else
    for (int l = 0; l < cfg.lattice->size(); ++l) sc.attackers.push_back(l);

  sc.exhaustive_traces = !with_stages;
  Definitions defs = use_definitions ? extract_definitions(e, sc.vars) : Definitions{};
  std::vector<std::string> indep;
  for (const auto& v : sc.vars)
    if (!defs.defined.count(v)) indep.push_back(v);

  std::vector<std::vector<Value>> cand;
  long long total = 1;
  for (const auto& v : indep) {
    cand.push_back(candidates(sc, sc.var_sort[v]));
    if (cand.back().empty()) return std::nullopt;
    total *= static_cast<long long>(cand.back().size());
    if (total > cfg.max_pairs)
      throw CapabilityError("countermodel search space exceeds the configured guard");
  }

  auto assemble = [&](const std::vector<size_t>& idx, Store& s) {
    s.clear();
    for (size_t i = 0; i < indep.size(); ++i) s[indep[i]] = cand[i][idx[i]];
  };

  std::optional<Countermodel> found;
  auto try_pair = [&](Level att, const Store& base1, const Store& base2) -> bool {
    Store s1 = base1, s2 = base2;
    if (!eval_definitions(sc, defs, s1)) return false;
    if (!eval_definitions(sc, defs, s2)) return false;
    if (cfg.strict_ranges) {
      // Computed dependents must stay inside the declared box so that the
      // witness is comparable with exhaustive enumeration.
      for (const auto& st : {&s1, &s2})
        for (const auto& [k, v] : *st) {
          (void)k;
          if (!in_ranges(sc, v)) return false;
        }
    }
    if (!falsifies(sc, att, s1, s2)) return false;
    Countermodel m;
    m.attacker = att;
    m.major = std::move(s1);
    m.minor = std::move(s2);
    found = std::move(m);
    return true;
  };

  std::vector<size_t> idx(indep.size(), 0);
  auto advance = [&]() {
    for (size_t i = 0; i < idx.size(); ++i) {
      if (++idx[i] < cand[i].size()) return true;
      idx[i] = 0;
    }
    return idx.empty() ? false : false;
  };

  if (with_stages) {
    // Stage A: diagonal pairs. Stage B: one minor-side coordinate perturbed.
    bool more = true;
    std::vector<size_t> d(indep.size(), 0);
    while (more) {
      Store s;
      for (size_t i = 0; i < indep.size(); ++i) s[indep[i]] = cand[i][d[i]];
      for (Level att : sc.attackers)
        if (try_pair(att, s, s)) return found;
      for (size_t i = 0; i < indep.size(); ++i) {
        for (const auto& pv : perturbations(sc, s.at(indep[i]))) {
          if (cfg.strict_ranges && !in_ranges(sc, pv)) continue;
          Store s2 = s;
          s2[indep[i]] = pv;
          for (Level att : sc.attackers)
            if (try_pair(att, s, s2)) return found;
        }
      }
      more = false;
      for (size_t i = 0; i < d.size(); ++i) {
        if (++d[i] < cand[i].size()) {
          more = true;
          break;
        }
        d[i] = 0;
      }
    }
  }

  // Full paired enumeration, guarded.
  if (total * total > cfg.max_pairs) {
    if (with_stages) return std::nullopt;  // stages were best effort
    throw CapabilityError("paired enumeration exceeds the configured guard (" +
                          std::to_string(total * total) + " pairs)");
  }
  std::fill(idx.begin(), idx.end(), 0);
  std::vector<size_t> idx2(indep.size(), 0);
  bool outer = true;
  while (outer) {
    Store s1;
    assemble(idx, s1);
    std::fill(idx2.begin(), idx2.end(), 0);
    bool inner = true;
    while (inner) {
      Store s2;
      for (size_t i = 0; i < indep.size(); ++i) s2[indep[i]] = cand[i][idx2[i]];
      for (Level att : sc.attackers)
        if (try_pair(att, s1, s2)) return found;
      inner = false;
      for (size_t i = 0; i < idx2.size(); ++i) {
        if (++idx2[i] < cand[i].size()) {
          inner = true;
          break;
        }
        idx2[i] = 0;
      }
    }
    outer = advance();
  }
  return std::nullopt;
}

}  // namespace

void replay_countermodel(const Entailment& e, const BackendConfig& cfg,
                         const Countermodel& m) {
  RelEvalCtx ctx;
  ctx.lattice = cfg.lattice;
  ctx.events = cfg.events;
  // Mirror the search's quantifier domains so that finite forall/exists
  // evaluation agrees between the two (then widen by the model's values).
  WitnessDomains dom;
  dom.lo = cfg.range_lo - 2;
  dom.hi = cfg.range_hi + 2;
  if (!cfg.strict_ranges) {
    std::set<long long> consts;
    for (const auto& h : e.hyp) collect_int_constants(h, consts);
    collect_int_constants(e.goal, consts);
    for (long long c : consts) {
      dom.lo = std::min(dom.lo, c - 3);
      dom.hi = std::max(dom.hi, c + 3);
    }
  }
  dom.max_trace_len = cfg.max_trace_len >= 0 ? std::min(cfg.max_trace_len, 4) : 3;
  // Quantifier witnesses in the replay must cover the model's own values,
  // including payloads buried in events and traces.
  auto widen = [&dom](long long v) {
    dom.lo = std::min(dom.lo, v);
    dom.hi = std::max(dom.hi, v);
  };
  for (const auto& st : {m.major, m.minor})
    for (const auto& [k, v] : st) {
      (void)k;
      if (v.is_int()) widen(v.as_int());
      if (v.is_event())
        for (long long f : v.as_event().fields) widen(f);
      if (v.is_trace()) {
        dom.max_trace_len =
            std::max(dom.max_trace_len, static_cast<int>(v.as_trace().size()));
        for (const auto& ev : v.as_trace())
          for (long long f : ev.fields) widen(f);
      }
    }
  ctx.domains = dom;
  try {
    for (const auto& h : e.hyp)
      if (!holds_pure(ctx, m.attacker, m.major, m.minor, h))
        throw InternalSoundnessError(
            "countermodel replay: hypothesis not satisfied: " + m.str(cfg.lattice));
    if (holds_pure(ctx, m.attacker, m.major, m.minor, e.goal))
      throw InternalSoundnessError("countermodel replay: goal still holds: " +
                                   m.str(cfg.lattice));
  } catch (const EvalFault& f) {
    throw InternalSoundnessError(std::string("countermodel replay faulted: ") +
                                 f.what());
  } catch (const DefinitionError& f) {
    throw InternalSoundnessError(std::string("countermodel replay failed: ") +
                                 f.what());
  }
}

SolverVerdict check_entailment(const Entailment& e, const BackendConfig& cfg) {
  if (!cfg.lattice) throw UsageError("backend config lacks a lattice");
  if (!cfg.solver_path.empty()) return check_with_external_solver(e, cfg);

  SolverVerdict v;
  if (prove_valid_internal(e, cfg)) {
    v.status = VcStatus::Valid;
    return v;
  }
  try {
    auto m = search_countermodel(e, cfg, /*use_definitions=*/true,
                                 /*with_stages=*/true);
    if (m) {
      replay_countermodel(e, cfg, *m);
      v.status = VcStatus::Invalid;
      v.model = std::move(m);
      return v;
    }
  } catch (const CapabilityError& err) {
    v.status = VcStatus::Unknown;
    v.reason = err.what();
    return v;
  }
  v.status = VcStatus::Unknown;
  v.reason = "not proved and no countermodel within the configured domains";
  return v;
}

SolverVerdict brute_force_entailment(const Entailment& e, const BackendConfig& cfg) {
  if (!cfg.lattice) throw UsageError("backend config lacks a lattice");
  BackendConfig strict = cfg;
  strict.strict_ranges = true;
  if (strict.max_trace_len < 0) strict.max_trace_len = 2;
  SolverVerdict v;
  auto m = search_countermodel(e, strict, /*use_definitions=*/false,
                               /*with_stages=*/false);
  if (m) {
    replay_countermodel(e, strict, *m);
    v.status = VcStatus::Invalid;
    v.model = std::move(m);
  } else {
    v.status = VcStatus::Valid;  // valid over the supplied finite domains
  }
  return v;
}

}  // namespace vdc
