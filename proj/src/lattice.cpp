#include "vdc/lattice.hpp"

#include <algorithm>
#include <sstream>

namespace vdc {

Lattice::Lattice() : Lattice({"low", "high"}, {{"low", "high"}}) {}

Lattice::Lattice(std::vector<std::string> names,
                 const std::vector<std::pair<std::string, std::string>>& order)
    : names_(std::move(names)) {
  if (names_.empty()) throw DefinitionError("lattice carrier is empty");
  for (size_t i = 0; i < names_.size(); ++i)
    for (size_t j = i + 1; j < names_.size(); ++j)
      if (names_[i] == names_[j])
        throw DefinitionError("duplicate lattice level '" + names_[i] + "'");
  if (!try_level("low") || !try_level("high"))
    throw DefinitionError("lattice must declare both 'low' and 'high'");

  int n = size();
  leq_.assign(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) leq_[i][i] = true;
  for (const auto& [lo, hi] : order) {
    Level a = level(lo), b = level(hi);
    if (a == b) throw DefinitionError("reflexive order pair '" + lo + " < " + hi + "'");
    leq_[a][b] = true;
  }
  close_and_check();
}

void Lattice::close_and_check() {
  int n = size();
  // Transitive closure.
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (leq_[i][k])
        for (int j = 0; j < n; ++j)
          if (leq_[k][j]) leq_[i][j] = true;
  // Antisymmetry.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && leq_[i][j] && leq_[j][i])
        throw DefinitionError("declared order has a cycle through '" + names_[i] +
                              "' and '" + names_[j] + "'");

  bottom_ = level("low");
  top_ = level("high");
  for (int i = 0; i < n; ++i) {
    if (!leq_[bottom_][i]) throw DefinitionError("'low' is not below '" + names_[i] + "'");
    if (!leq_[i][top_]) throw DefinitionError("'" + names_[i] + "' is not below 'high'");
  }

  // Unique least upper bound / greatest lower bound for every pair.
  join_.assign(n, std::vector<Level>(n, -1));
  meet_.assign(n, std::vector<Level>(n, -1));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      std::vector<Level> ubs, lbs;
      for (int c = 0; c < n; ++c) {
        if (leq_[a][c] && leq_[b][c]) ubs.push_back(c);
        if (leq_[c][a] && leq_[c][b]) lbs.push_back(c);
      }
      for (Level c : ubs) {
        bool least = std::all_of(ubs.begin(), ubs.end(),
                                 [&](Level d) { return leq_[c][d]; });
        if (least) { join_[a][b] = c; break; }
      }
      for (Level c : lbs) {
        bool greatest = std::all_of(lbs.begin(), lbs.end(),
                                    [&](Level d) { return leq_[d][c]; });
        if (greatest) { meet_[a][b] = c; break; }
      }
      if (join_[a][b] < 0 || meet_[a][b] < 0) {
        std::ostringstream os;
        os << "declared order is not a lattice: no unique "
           << (join_[a][b] < 0 ? "join" : "meet") << " for '" << names_[a]
           << "' and '" << names_[b] << "'";
        throw DefinitionError(os.str());
      }
    }
  }
}

Level Lattice::level(const std::string& name) const {
  auto l = try_level(name);
  if (!l) throw DefinitionError("undeclared security level '" + name + "'");
  return *l;
}

std::optional<Level> Lattice::try_level(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<Level>(i);
  return std::nullopt;
}

const std::string& Lattice::name(Level l) const {
  if (l < 0 || l >= size()) throw UsageError("level index out of range");
  return names_[l];
}

bool Lattice::leq(Level a, Level b) const {
  if (a < 0 || b < 0 || a >= size() || b >= size())
    throw UsageError("level index out of range");
  return leq_[a][b];
}

Level Lattice::join(Level a, Level b) const { return join_.at(a).at(b); }
Level Lattice::meet(Level a, Level b) const { return meet_.at(a).at(b); }

std::string SourceSpan::str() const {
  if (!valid()) return "<no position>";
  std::ostringstream os;
  os << begin.line << ":" << begin.column;
  return os.str();
}

std::string Diagnostic::str() const {
  std::ostringstream os;
  switch (severity) {
    case Severity::Error: os << "error"; break;
    case Severity::Warning: os << "warning"; break;
    case Severity::Note: os << "note"; break;
  }
  os << " at " << span.str() << ": " << message;
  return os.str();
}

}  // namespace vdc
