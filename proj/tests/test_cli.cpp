#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace {

std::string corpus(const std::string& name) {
  return std::string(VDC_CORPUS_DIR) + "/" + name;
}

int run_vdc(const std::string& args, std::string* output = nullptr) {
  std::string out_file = "/tmp/vdc_cli_test_out.json";
  std::string cmd = std::string(VDC_BIN) + " " + args + " > " + out_file + " 2>&1";
  int rc = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out_file);
    std::ostringstream os;
    os << in.rdbuf();
    *output = os.str();
  }
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("verify exit codes") {
  CHECK(run_vdc("verify " + corpus("avg.vdc")) == 0);
  CHECK(run_vdc("verify " + corpus("direct_leak.vdc")) == 1);
  CHECK(run_vdc("verify /nonexistent/missing.vdc") == 3);
  CHECK(run_vdc("verify " + corpus("avg.vdc") + " --attacker nosuchlevel") == 3);
}

TEST_CASE("verified reports carry no failing conditions") {
  std::string out;
  REQUIRE(run_vdc("verify " + corpus("avg.vdc"), &out) == 0);
  auto j = nlohmann::json::parse(out);
  CHECK(j["tool_version"].is_string());
  CHECK(j["result"] == "verified");
  for (const auto& vc : j["vcs"]) CHECK(vc["status"] == "valid");
}

TEST_CASE("refuted reports cite the failing condition") {
  std::string out;
  REQUIRE(run_vdc("verify " + corpus("secret_branch.vdc"), &out) == 1);
  auto j = nlohmann::json::parse(out);
  bool branch_low = false;
  for (const auto& vc : j["vcs"])
    if (vc["status"] == "invalid" && vc["kind"] == "branch-low") branch_low = true;
  CHECK(branch_low);
}

TEST_CASE("reports are valid JSON for every exit code") {
  for (const char* args : {"verify ", "audit --policy avg6 "}) {
    for (const char* file : {"avg.vdc", "avg_noguard.vdc"}) {
      std::string out;
      run_vdc(std::string(args) + corpus(file), &out);
      auto parsed = nlohmann::json::parse(out, nullptr, false);
      CHECK_FALSE(parsed.is_discarded());
    }
  }
}

TEST_CASE("audit requires a known policy") {
  CHECK(run_vdc("audit " + corpus("avg.vdc") + " --policy nosuch") == 3);
}

TEST_CASE("oracle exit codes") {
  CHECK(run_vdc("oracle " + corpus("assume_out.vdc") + " --max-steps 6") == 0);
  CHECK(run_vdc("oracle " + corpus("direct_leak.vdc")) == 1);
  // Budget exhaustion is distinct from a violation.
  std::string src = "proc main() requires: emp ensures: emp {"
                    " while (true) invariant (emp) { skip; } }";
  std::ofstream("/tmp/vdc_cli_loop.vdc") << src;
  CHECK(run_vdc("oracle /tmp/vdc_cli_loop.vdc --max-steps 4") == 2);
}

TEST_CASE("run serializes schedules and configurations") {
  std::string out;
  REQUIRE(run_vdc("run " + corpus("public_line.vdc") + " --max-steps 4", &out) == 0);
  auto j = nlohmann::json::parse(out);
  REQUIRE(j["runs"].is_array());
  CHECK(j["runs"].size() == 3);  // empty prefix, one step, two steps
  CHECK(j["budget_exceeded"] == false);
}

TEST_CASE("json flag duplicates the report to a file") {
  std::string out;
  run_vdc("verify " + corpus("avg.vdc") + " --json /tmp/vdc_cli_copy.json", &out);
  std::ifstream in("/tmp/vdc_cli_copy.json");
  std::ostringstream os;
  os << in.rdbuf();
  CHECK(os.str() == out);
}

TEST_CASE("solver environment variable is honored") {
  // A missing solver makes every condition unknown, never verified.
  std::string cmd = "VDC_SOLVER=/nonexistent/solver " + std::string(VDC_BIN) +
                    " verify " + corpus("avg.vdc") + " > /tmp/vdc_cli_env.json 2>&1";
  int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 2);
}

TEST_CASE("run records trace payloads that match the ingested input") {
  std::string out;
  REQUIRE(run_vdc("run " + corpus("avg_small.vdc") + " --max-steps 26", &out) == 0);
  auto j = nlohmann::json::parse(out);
  bool traced = false;
  for (const auto& r : j["runs"])
    for (const auto& a : r["schedule"])
      if (a.get<std::string>() == "trace(In(0))") traced = true;  // cells start at 0
  CHECK(traced);
}

TEST_CASE("the visibility-direction flag reaches the oracle") {
  // Sound default: the high output is invisible to low and nothing leaks.
  CHECK(run_vdc("oracle " + corpus("counter_par.vdc") + " --max-steps 12") == 0);
  // The flipped reading makes it visible, so the same program now leaks.
  CHECK(run_vdc("oracle " + corpus("counter_par.vdc") +
                " --max-steps 12 --visibility-direction paper") == 1);
}

TEST_CASE("usage errors exit with code 3") {
  CHECK(run_vdc("verify") == 3);            // missing file
  CHECK(run_vdc("nosuchcommand x") == 3);   // unknown subcommand
  CHECK(run_vdc("oracle " + corpus("avg.vdc")) == 3);  // ambiguous entry
  CHECK(run_vdc("oracle " + corpus("avg.vdc") + " --range nonsense") == 3);
}
