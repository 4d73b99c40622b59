#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vdc/oracle.hpp"
#include "vdc/parser.hpp"
#include "vdc/report.hpp"
#include "vdc/symer.hpp"

namespace py = pybind11;
using namespace vdc;

namespace {

Program parse_or_throw(const std::string& text) {
  auto r = parse_program(text);
  if (!r.ok()) {
    std::ostringstream os;
    for (const auto& d : r.diagnostics) os << d.str() << "\n";
    throw py::value_error(os.str());
  }
  return *r.program;
}

VerifyOptions options_for(const Program& p, const std::string& attacker,
                          const std::string& solver) {
  VerifyOptions opt;
  if (!attacker.empty()) opt.attacker = p.lattice.level(attacker);
  opt.backend.solver_path = solver;
  return opt;
}

std::string py_format(const std::string& text) {
  return format_program(parse_or_throw(text));
}

std::string py_verify(const std::string& text, const std::string& attacker,
                      const std::string& solver) {
  Program p = parse_or_throw(text);
  SymbolicVerifier v(p, options_for(p, attacker, solver));
  VerdictBundle b = v.verify();
  Json report = report_envelope("verify", verdict_name(b.status));
  Json bj = bundle_json(b, p.lattice);
  report["vcs"] = bj["vcs"];
  report["triples"] = bj["triples"];
  report["errors"] = b.errors;
  return report.dump();
}

std::string py_audit(const std::string& text, const std::string& policy,
                     const std::string& attacker, const std::string& solver) {
  Program p = parse_or_throw(text);
  const PolicyDecl* d = p.find_policy(policy);
  if (!d) throw py::value_error("unknown policy '" + policy + "'");
  SymbolicVerifier v(p, options_for(p, attacker, solver));
  VerdictBundle b = v.verify();
  AuditReport a = v.audit(b.triples, *d);
  Verdict combined = b.status == Verdict::Refuted || a.status == Verdict::Refuted
                         ? Verdict::Refuted
                     : b.status == Verdict::Unknown || a.status == Verdict::Unknown
                         ? Verdict::Unknown
                         : Verdict::Verified;
  Json report = report_envelope("audit", verdict_name(combined));
  report["vcs"] = bundle_json(b, p.lattice)["vcs"];
  report["audit"] = audit_json(a, p.lattice)["obligations"];
  return report.dump();
}

std::string py_inline_audit(const std::string& text, const std::string& policy) {
  Program p = parse_or_throw(text);
  const PolicyDecl* d = p.find_policy(policy);
  if (!d) throw py::value_error("unknown policy '" + policy + "'");
  return format_program(SymbolicVerifier::inline_audit(p, *d));
}

std::string py_run(const std::string& text, int max_steps, const std::string& entry) {
  Program p = parse_or_throw(text);
  const ProcDecl& proc = resolve_entry(p, entry);
  Configuration k = initial_configuration(p, proc);
  RunsResult r = runs(k, max_steps, p.lattice);
  Json report = report_envelope("run", r.budget_exceeded ? "budget" : "done");
  Json entries = Json::array();
  for (const auto& [sched, cfg] : r.entries)
    entries.push_back(Json{{"schedule", schedule_json(sched, p.lattice)},
                           {"config", config_json(cfg, p.lattice)}});
  report["runs"] = entries;
  return report.dump();
}

std::string py_oracle(const std::string& text, const std::string& policy,
                      long long lo, long long hi, int max_steps,
                      const std::string& attacker, const std::string& direction,
                      const std::string& entry) {
  Program p = parse_or_throw(text);
  Level att = p.lattice.level(attacker.empty() ? "low" : attacker);
  VisibilityDirection dir = direction == "paper" ? VisibilityDirection::Paper
                                                 : VisibilityDirection::Sound;
  StateSpace space = make_state_space(p, lo, hi, att, dir, entry);
  Json report = report_envelope("oracle", "pass");
  Json entries = Json::array();
  OracleReport agnostic = check_policy_agnostic(space, max_steps);
  entries.push_back(oracle_json(agnostic, p.lattice));
  bool violation = agnostic.status == OracleReport::Status::Violation;
  bool budget = agnostic.status == OracleReport::Status::Budget;
  if (!policy.empty()) {
    const PolicyDecl* d = p.find_policy(policy);
    if (!d) throw py::value_error("unknown policy '" + policy + "'");
    OracleReport specific = check_policy_specific(space, *d, max_steps);
    entries.push_back(oracle_json(specific, p.lattice));
    violation |= specific.status == OracleReport::Status::Violation;
    budget |= specific.status == OracleReport::Status::Budget;
  }
  report["oracle"] = entries;
  report["result"] = violation ? "violation" : budget ? "budget" : "pass";
  return report.dump();
}

}  // namespace

PYBIND11_MODULE(pyvdc, m) {
  m.doc() = "relational verifier and knowledge oracle for a small concurrent "
            "language with declassification policies";
  m.attr("__version__") = kToolVersion;
  m.def("format", &py_format, py::arg("text"),
        "Parse and canonically re-render a program.");
  m.def("verify", &py_verify, py::arg("text"), py::arg("attacker") = "",
        py::arg("solver") = "", "Symbolically verify; returns a JSON report.");
  m.def("audit", &py_audit, py::arg("text"), py::arg("policy"),
        py::arg("attacker") = "", py::arg("solver") = "",
        "Verify and audit against a declared policy; returns a JSON report.");
  m.def("inline_audit", &py_inline_audit, py::arg("text"), py::arg("policy"),
        "Inline a policy's audit checks into the program text.");
  m.def("run", &py_run, py::arg("text"), py::arg("max_steps") = 12,
        py::arg("entry") = "", "Enumerate concrete runs; returns a JSON report.");
  m.def("oracle", &py_oracle, py::arg("text"), py::arg("policy") = "",
        py::arg("lo") = 0, py::arg("hi") = 3, py::arg("max_steps") = 12,
        py::arg("attacker") = "low", py::arg("direction") = "sound",
        py::arg("entry") = "",
        "Exhaustive policy-agnostic/specific checks; returns a JSON report.");
}
