#pragma once

#include <string>

#include "json.hpp"
#include "vdc/oracle.hpp"
#include "vdc/symer.hpp"

namespace vdc {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

Json span_json(const SourceSpan& s);
Json countermodel_json(const Countermodel& m, const Lattice& lat);
Json vc_json(const VerificationCondition& vc, const Lattice& lat);
Json bundle_json(const VerdictBundle& b, const Lattice& lat);
Json audit_json(const AuditReport& r, const Lattice& lat);
Json state_json(const RelState& s, const Lattice& lat);
Json schedule_json(const Schedule& s, const Lattice& lat);
Json oracle_json(const OracleReport& r, const Lattice& lat);
Json config_json(const Configuration& k, const Lattice& lat);

// The envelope shared by every subcommand:
// {tool_version, command, result, vcs, audit, oracle}.
Json report_envelope(const std::string& command, const std::string& result);

}  // namespace vdc
