// vdc: verify, audit and explore programs of the little concurrent language.
//
// Exit codes: 0 verified/pass, 1 refuted/violation, 2 unknown/budget,
// 3 usage or parse error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "vdc/oracle.hpp"
#include "vdc/parser.hpp"
#include "vdc/report.hpp"
#include "vdc/symer.hpp"

using namespace vdc;

namespace {

struct CommonOpts {
  std::string file;
  std::string policy;
  std::string attacker;
  std::string solver;
  std::string range = "0..3";
  std::string visibility = "sound";
  std::string json_path;
  std::string entry;
  std::string visible_level;
  double timeout = 10.0;
  int max_steps = 12;
};

int fail_usage(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 3;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::optional<Program> load_program(const CommonOpts& o, int& rc) {
  auto text = read_file(o.file);
  if (!text) {
    rc = fail_usage("cannot read " + o.file);
    return std::nullopt;
  }
  auto r = parse_program(*text, o.file);
  if (!r.ok()) {
    for (const auto& d : r.diagnostics) std::cerr << o.file << ": " << d.str() << "\n";
    rc = 3;
    return std::nullopt;
  }
  return r.program;
}

bool parse_range(const std::string& s, long long& lo, long long& hi) {
  auto pos = s.find("..");
  if (pos == std::string::npos) return false;
  try {
    lo = std::stoll(s.substr(0, pos));
    hi = std::stoll(s.substr(pos + 2));
  } catch (...) {
    return false;
  }
  return lo <= hi;
}

void emit(const Json& report, const CommonOpts& o) {
  std::cout << report.dump(2) << "\n";
  if (!o.json_path.empty()) {
    std::ofstream out(o.json_path);
    out << report.dump(2) << "\n";
  }
}

VerifyOptions make_verify_options(const CommonOpts& o, const Program& p, int& rc) {
  VerifyOptions opt;
  if (!o.attacker.empty()) opt.attacker = p.lattice.level(o.attacker);
  opt.backend.solver_path = o.solver;
  if (opt.backend.solver_path.empty())
    if (const char* env = std::getenv("VDC_SOLVER")) opt.backend.solver_path = env;
  opt.backend.timeout_seconds = o.timeout;
  long long lo, hi;
  if (!parse_range(o.range, lo, hi)) {
    rc = fail_usage("bad --range, expected LO..HI");
    return opt;
  }
  opt.backend.range_lo = lo;
  opt.backend.range_hi = hi;
  return opt;
}

int exit_of_verdict(Verdict v) {
  switch (v) {
    case Verdict::Verified: return 0;
    case Verdict::Refuted: return 1;
    case Verdict::Unknown: return 2;
  }
  return 2;
}

int cmd_verify(const CommonOpts& o) {
  int rc = 0;
  auto p = load_program(o, rc);
  if (!p) return rc;
  auto opt = make_verify_options(o, *p, rc);
  if (rc) return rc;
  SymbolicVerifier verifier(*p, opt);
  VerdictBundle bundle = verifier.verify();
  Json report = report_envelope("verify", verdict_name(bundle.status));
  report["vcs"] = bundle_json(bundle, p->lattice)["vcs"];
  report["triples"] = bundle_json(bundle, p->lattice)["triples"];
  report["errors"] = bundle.errors;
  emit(report, o);
  return exit_of_verdict(bundle.status);
}

int cmd_audit(const CommonOpts& o) {
  int rc = 0;
  auto p = load_program(o, rc);
  if (!p) return rc;
  const PolicyDecl* policy = p->find_policy(o.policy);
  if (!policy) return fail_usage("unknown policy '" + o.policy + "'");
  auto opt = make_verify_options(o, *p, rc);
  if (rc) return rc;
  SymbolicVerifier verifier(*p, opt);
  VerdictBundle bundle = verifier.verify();
  AuditReport audit = verifier.audit(bundle.triples, *policy);

  Verdict combined =
      bundle.status == Verdict::Refuted || audit.status == Verdict::Refuted
          ? Verdict::Refuted
      : bundle.status == Verdict::Unknown || audit.status == Verdict::Unknown
          ? Verdict::Unknown
          : Verdict::Verified;
  Json report = report_envelope("audit", verdict_name(combined));
  report["vcs"] = bundle_json(bundle, p->lattice)["vcs"];
  report["audit"] = audit_json(audit, p->lattice)["obligations"];
  report["errors"] = bundle.errors;
  emit(report, o);
  return exit_of_verdict(combined);
}

int cmd_inline_audit(const CommonOpts& o) {
  int rc = 0;
  auto p = load_program(o, rc);
  if (!p) return rc;
  const PolicyDecl* policy = p->find_policy(o.policy);
  if (!policy) return fail_usage("unknown policy '" + o.policy + "'");
  Program inlined = SymbolicVerifier::inline_audit(*p, *policy);
  std::cout << format_program(inlined);
  if (!o.json_path.empty()) {
    std::ofstream out(o.json_path);
    out << format_program(inlined);
  }
  return 0;
}

int cmd_oracle(const CommonOpts& o) {
  int rc = 0;
  auto p = load_program(o, rc);
  if (!p) return rc;
  long long lo, hi;
  if (!parse_range(o.range, lo, hi)) return fail_usage("bad --range, expected LO..HI");
  Level attacker = o.attacker.empty() ? p->lattice.level("low")
                                      : p->lattice.level(o.attacker);
  VisibilityDirection dir = o.visibility == "paper" ? VisibilityDirection::Paper
                                                    : VisibilityDirection::Sound;
  const PolicyDecl* policy = nullptr;
  if (!o.policy.empty()) {
    policy = p->find_policy(o.policy);
    if (!policy) return fail_usage("unknown policy '" + o.policy + "'");
  }

  try {
    StateSpace space = make_state_space(*p, lo, hi, attacker, dir, o.entry);
    Json report = report_envelope("oracle", "pass");
    Json entries = Json::array();
    OracleReport agnostic = check_policy_agnostic(space, o.max_steps);
    entries.push_back(oracle_json(agnostic, p->lattice));
    bool violation = agnostic.status == OracleReport::Status::Violation;
    bool budget = agnostic.status == OracleReport::Status::Budget;
    if (policy) {
      OracleReport specific = check_policy_specific(space, *policy, o.max_steps);
      entries.push_back(oracle_json(specific, p->lattice));
      violation |= specific.status == OracleReport::Status::Violation;
      budget |= specific.status == OracleReport::Status::Budget;
    }
    report["oracle"] = entries;
    report["result"] = violation ? "violation" : budget ? "budget" : "pass";
    emit(report, o);
    return violation ? 1 : budget ? 2 : 0;
  } catch (const UsageError& e) {
    return fail_usage(e.what());
  } catch (const CapabilityError& e) {
    return fail_usage(e.what());
  }
}

int cmd_run(const CommonOpts& o) {
  int rc = 0;
  auto p = load_program(o, rc);
  if (!p) return rc;
  const ProcDecl& entry = resolve_entry(*p, o.entry);
  Configuration k = initial_configuration(*p, entry);
  RunsResult r = runs(k, o.max_steps, p->lattice);

  Json report = report_envelope("run", r.budget_exceeded ? "budget" : "done");
  Json entries = Json::array();
  std::optional<Level> vis;
  if (!o.visible_level.empty()) vis = p->lattice.level(o.visible_level);
  for (const auto& [sched, cfg] : r.entries) {
    Json e{{"schedule", schedule_json(sched, p->lattice)},
           {"config", config_json(cfg, p->lattice)}};
    if (vis)
      e["visible"] =
          schedule_json(visible(p->lattice, *vis, sched), p->lattice);
    entries.push_back(std::move(e));
  }
  report["runs"] = entries;
  report["budget_exceeded"] = r.budget_exceeded;
  emit(report, o);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verifier and knowledge oracle for declassifying concurrent programs"};
  app.require_subcommand(1);
  CommonOpts o;

  auto add_common = [&](CLI::App* cmd, bool needs_policy) {
    cmd->add_option("file", o.file, "input .vdc program")->required();
    auto* pol = cmd->add_option("--policy", o.policy, "policy name");
    if (needs_policy) pol->required();
    cmd->add_option("--attacker", o.attacker, "attacker level (default: all levels)");
    cmd->add_option("--solver", o.solver, "external SMT solver (or $VDC_SOLVER)");
    cmd->add_option("--timeout", o.timeout, "solver timeout in seconds");
    cmd->add_option("--range", o.range, "oracle value range LO..HI");
    cmd->add_option("--max-steps", o.max_steps, "step bound for runs");
    cmd->add_option("--visibility-direction", o.visibility,
                    "output visibility: sound|paper");
    cmd->add_option("--entry", o.entry, "entry procedure for oracle/run");
    cmd->add_option("--visible", o.visible_level, "also emit projections (run)");
    cmd->add_option("--json", o.json_path, "also write the report to this file");
  };

  auto* verify = app.add_subcommand("verify", "symbolically verify a program");
  add_common(verify, false);
  auto* audit = app.add_subcommand("audit", "verify and audit against a policy");
  add_common(audit, true);
  auto* inline_audit =
      app.add_subcommand("inline-audit", "inline a policy's audit checks");
  add_common(inline_audit, true);
  auto* oracle = app.add_subcommand("oracle", "exhaustive theorem checks");
  add_common(oracle, false);
  auto* run = app.add_subcommand("run", "enumerate concrete runs");
  add_common(run, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;  // usage errors share the parse-error exit code
  }

  try {
    if (verify->parsed()) return cmd_verify(o);
    if (audit->parsed()) return cmd_audit(o);
    if (inline_audit->parsed()) return cmd_inline_audit(o);
    if (oracle->parsed()) return cmd_oracle(o);
    if (run->parsed()) return cmd_run(o);
  } catch (const DefinitionError& e) {
    return fail_usage(e.what());
  } catch (const UsageError& e) {
    return fail_usage(e.what());
  } catch (const CapabilityError& e) {
    return fail_usage(e.what());
  } catch (const InternalSoundnessError& e) {
    std::cerr << "internal soundness error: " << e.what() << "\n";
    throw;
  }
  return 3;
}
