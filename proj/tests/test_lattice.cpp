#include "doctest.h"
#include "vdc/lattice.hpp"

using namespace vdc;

TEST_CASE("default lattice is {low < high}") {
  Lattice lat;
  Level low = lat.level("low"), high = lat.level("high");
  CHECK(lat.leq(low, high));
  CHECK_FALSE(lat.leq(high, low));
  CHECK(lat.leq(low, low));
  CHECK(lat.leq(high, high));
  CHECK(lat.bottom() == low);
  CHECK(lat.top() == high);
}

TEST_CASE("diamond lattice with incomparable levels") {
  Lattice lat({"low", "alice", "bob", "high"},
              {{"low", "alice"}, {"low", "bob"}, {"alice", "high"}, {"bob", "high"}});
  Level alice = lat.level("alice"), bob = lat.level("bob");
  CHECK_FALSE(lat.leq(alice, bob));
  CHECK_FALSE(lat.leq(bob, alice));
  CHECK(lat.join(alice, bob) == lat.level("high"));
  CHECK(lat.meet(alice, bob) == lat.level("low"));
  // Transitivity through the closure.
  CHECK(lat.leq(lat.level("low"), lat.level("high")));
}

TEST_CASE("leq is a partial order on the carrier") {
  Lattice lat({"low", "mid", "high"}, {{"low", "mid"}, {"mid", "high"}});
  int n = lat.size();
  for (Level a = 0; a < n; ++a) {
    CHECK(lat.leq(a, a));
    for (Level b = 0; b < n; ++b) {
      if (lat.leq(a, b) && lat.leq(b, a)) CHECK(a == b);
      for (Level c = 0; c < n; ++c)
        if (lat.leq(a, b) && lat.leq(b, c)) CHECK(lat.leq(a, c));
    }
  }
}

TEST_CASE("every pair is ordered or incomparable, exclusively") {
  Lattice lat({"low", "alice", "bob", "high"},
              {{"low", "alice"}, {"low", "bob"}, {"alice", "high"}, {"bob", "high"}});
  for (Level a = 0; a < lat.size(); ++a)
    for (Level b = 0; b < lat.size(); ++b) {
      int cases = 0;
      if (lat.leq(a, b) && lat.leq(b, a)) ++cases;               // equal
      if (lat.leq(a, b) && !lat.leq(b, a)) ++cases;              // a < b
      if (!lat.leq(a, b) && lat.leq(b, a)) ++cases;              // b < a
      if (!lat.leq(a, b) && !lat.leq(b, a)) ++cases;             // incomparable
      CHECK(cases == 1);
    }
}

TEST_CASE("ill-formed lattices are rejected") {
  CHECK_THROWS_AS(Lattice({"low"}, {}), DefinitionError);
  CHECK_THROWS_AS(Lattice({"low", "high"}, {{"low", "high"}, {"high", "low"}}),
                  DefinitionError);
  // No unique join for a and b (two minimal upper bounds c and d).
  CHECK_THROWS_AS(Lattice({"low", "a", "b", "c", "d", "high"},
                          {{"low", "a"}, {"low", "b"},
                           {"a", "c"}, {"b", "c"}, {"a", "d"}, {"b", "d"},
                           {"c", "high"}, {"d", "high"}}),
                  DefinitionError);
  Lattice ok;
  CHECK_THROWS_AS((void)ok.level("secret"), DefinitionError);
}
