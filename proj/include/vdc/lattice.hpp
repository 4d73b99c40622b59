#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vdc/diagnostics.hpp"

namespace vdc {

// A concrete security level: index into the lattice carrier.
using Level = int;

// Finite security lattice, declared up front. `low` is bottom and `high`
// is top; the declared order is closed reflexively and transitively and
// must admit unique meets and joins.
class Lattice {
 public:
  // Default lattice {low < high}.
  Lattice();

  // Carrier names plus the declared strict order pairs (lo < hi).
  Lattice(std::vector<std::string> names,
          const std::vector<std::pair<std::string, std::string>>& order);

  Level level(const std::string& name) const;  // DefinitionError if undeclared
  std::optional<Level> try_level(const std::string& name) const;
  const std::string& name(Level l) const;
  int size() const { return static_cast<int>(names_.size()); }

  bool leq(Level a, Level b) const;
  Level join(Level a, Level b) const;
  Level meet(Level a, Level b) const;

  Level bottom() const { return bottom_; }  // low
  Level top() const { return top_; }        // high

  const std::vector<std::string>& carrier() const { return names_; }

  bool operator==(const Lattice& other) const {
    return names_ == other.names_ && leq_ == other.leq_;
  }

 private:
  void close_and_check();

  std::vector<std::string> names_;
  std::vector<std::vector<bool>> leq_;
  std::vector<std::vector<Level>> join_;
  std::vector<std::vector<Level>> meet_;
  Level bottom_ = 0;
  Level top_ = 0;
};

}  // namespace vdc
