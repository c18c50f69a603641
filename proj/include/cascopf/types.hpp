#pragma once

#include <limits>
#include <set>
#include <map>
#include <string>

namespace cascopf {

// Element ids as they appear in case documents.
using Id = int;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Elements removed from the network (cumulative for a cascade step).
struct OutageSet {
  std::set<Id> buses;
  std::set<Id> branches;
  std::set<Id> generators;

  bool empty() const { return buses.empty() && branches.empty() && generators.empty(); }

  static OutageSet unite(const OutageSet& a, const OutageSet& b) {
    OutageSet u = a;
    u.buses.insert(b.buses.begin(), b.buses.end());
    u.branches.insert(b.branches.begin(), b.branches.end());
    u.generators.insert(b.generators.begin(), b.generators.end());
    return u;
  }
};

// branch id -> limit fraction in (0, 1]
using DeratingSet = std::map<Id, double>;

struct Finding {
  std::string where;
  std::string what;
};

}  // namespace cascopf
