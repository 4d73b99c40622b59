#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vdc/ast.hpp"

namespace vdc {

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

// Parses a `.vdc` source text into a sort-checked Program. On any lexical,
// syntactic or sort error the result carries diagnostics and no program.
ParseResult parse_program(const std::string& text, const std::string& path = "<input>");

// Canonical rendering; reparsing yields a structurally equal Program.
std::string format_program(const Program& p);

std::string format_expr(const ExprPtr& e);
std::string format_assertion(const AssertionPtr& a);
std::string format_command(const CommandPtr& c, int indent = 0);

}  // namespace vdc
