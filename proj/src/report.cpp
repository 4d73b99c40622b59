#include "vdc/report.hpp"

#include <algorithm>

#include "vdc/parser.hpp"

namespace vdc {

Json span_json(const SourceSpan& s) {
  return Json{{"line", s.begin.line}, {"column", s.begin.column}};
}

Json countermodel_json(const Countermodel& m, const Lattice& lat) {
  Json major = Json::object(), minor = Json::object();
  for (const auto& [k, v] : m.major) major[k] = v.str(&lat);
  for (const auto& [k, v] : m.minor) minor[k] = v.str(&lat);
  return Json{{"attacker", lat.name(m.attacker)}, {"major", major}, {"minor", minor}};
}

Json vc_json(const VerificationCondition& vc, const Lattice& lat) {
  Json hyp = Json::array();
  for (const auto& h : vc.hypothesis) hyp.push_back(format_assertion(h));
  Json j{{"id", vc.id},
         {"kind", vc_kind_name(vc.kind)},
         {"span", span_json(vc.span)},
         {"status", vc_status_name(vc.status)},
         {"hypothesis", hyp},
         {"goal", vc.goal ? format_assertion(vc.goal) : "true"},
         {"note", vc.note}};
  if (vc.countermodel) j["countermodel"] = countermodel_json(*vc.countermodel, lat);
  return j;
}

namespace {

bool vc_order(const VerificationCondition& a, const VerificationCondition& b) {
  auto key = [](const VerificationCondition& vc) {
    return std::make_tuple(vc.span.begin.line, vc.span.begin.column,
                           static_cast<int>(vc.kind), vc.id);
  };
  return key(a) < key(b);
}

}  // namespace

Json bundle_json(const VerdictBundle& b, const Lattice& lat) {
  std::vector<VerificationCondition> ordered = b.vcs;
  std::sort(ordered.begin(), ordered.end(), vc_order);
  Json vcs = Json::array();
  for (const auto& vc : ordered) vcs.push_back(vc_json(vc, lat));
  Json triples = Json::array();
  for (const auto& t : b.triples) {
    Json ctx = Json::array();
    for (const auto& a : t.context) ctx.push_back(format_assertion(a));
    triples.push_back(Json{{"proc", t.proc},
                           {"span", span_json(t.span)},
                           {"context", ctx},
                           {"trace", format_expr(t.trace)},
                           {"rho", format_assertion(t.rho)}});
  }
  return Json{{"status", verdict_name(b.status)},
              {"vcs", vcs},
              {"triples", triples},
              {"errors", b.errors}};
}

Json audit_json(const AuditReport& r, const Lattice& lat) {
  Json obligations = Json::array();
  for (const auto& ob : r.obligations) {
    Json j{{"span", span_json(ob.triple->span)},
           {"proc", ob.triple->proc},
           {"trace", format_expr(ob.triple->trace)},
           {"rho", format_assertion(ob.triple->rho)},
           {"when", vc_json(ob.when, lat)},
           {"release", vc_json(ob.release, lat)}};
    obligations.push_back(std::move(j));
  }
  return Json{{"status", verdict_name(r.status)},
              {"obligations", obligations},
              {"errors", r.errors}};
}

Json state_json(const RelState& s, const Lattice& lat) {
  Json store = Json::object(), heap = Json::object();
  for (const auto& [k, v] : s.store) store[k] = v.str(&lat);
  for (const auto& [a, v] : s.heap) heap[std::to_string(a)] = v;
  return Json{{"store", store}, {"heap", heap}, {"ghost", trace_str(s.ghost)}};
}

Json schedule_json(const Schedule& s, const Lattice& lat) {
  Json out = Json::array();
  for (const auto& a : s) out.push_back(a.str(&lat));
  return out;
}

Json config_json(const Configuration& k, const Lattice& lat) {
  switch (k.state) {
    case ConfigState::Abort:
      return Json{{"state", "abort"}};
    case ConfigState::Stop:
    case ConfigState::Run: {
      Json locks = Json::array();
      for (const auto& l : k.locks) locks.push_back(l);
      Json store = Json::object(), heap = Json::object();
      for (const auto& [x, v] : k.store) store[x] = v.str(&lat);
      for (const auto& [a, v] : k.heap) heap[std::to_string(a)] = v;
      Json j{{"state", k.is_run() ? "run" : "stop"},
             {"locks", locks},
             {"store", store},
             {"heap", heap},
             {"ghost", trace_str(k.ghost)}};
      if (k.is_run()) j["command"] = format_command(k.cmd);
      return j;
    }
  }
  return Json{};
}

Json oracle_json(const OracleReport& r, const Lattice& lat) {
  const char* status = r.status == OracleReport::Status::Pass        ? "pass"
                       : r.status == OracleReport::Status::Violation ? "violation"
                                                                     : "budget";
  Json violations = Json::array();
  for (const auto& v : r.violations)
    violations.push_back(Json{{"kind", v.kind},
                              {"major", state_json(v.major, lat)},
                              {"sigma", schedule_json(v.sigma, lat)},
                              {"extension", schedule_json(v.extension, lat)},
                              {"minor", state_json(v.minor, lat)}});
  return Json{{"theorem", r.theorem},
              {"status", status},
              {"violations", violations},
              {"states_checked", r.states_checked},
              {"prefixes_checked", r.prefixes_checked},
              {"budget_exceeded", r.budget_exceeded}};
}

Json report_envelope(const std::string& command, const std::string& result) {
  return Json{{"tool_version", kToolVersion},
              {"command", command},
              {"result", result},
              {"vcs", Json::array()},
              {"audit", Json::array()},
              {"oracle", Json::array()}};
}

}  // namespace vdc
