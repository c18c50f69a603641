#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cascopf/types.hpp"

namespace cascopf {

struct CostModel {
  double alpha_sqr = 0.0;  // $/MW^2
  double alpha_lin = 0.0;  // $/MW
  double zeta = 0.0;       // $ fixed
  double kappa = 0.0;      // $/MW^2 inter-period ramp wear
  double eta_up = 0.0;     // $/MW contingency reserve prices
  double eta_down = 0.0;
  double mu_up = 0.0;      // $/MW load-following reserve prices
  double mu_down = 0.0;
};

struct Bus {
  Id id = 0;
  double demand = 0.0;                 // MW
  std::vector<double> demand_profile;  // optional, one entry per period

  double demand_at(int t) const {
    return demand_profile.empty() ? demand : demand_profile[static_cast<size_t>(t)];
  }
};

struct Branch {
  Id id = 0;
  Id from_bus = 0;
  Id to_bus = 0;
  double susceptance = 0.0;   // p.u., > 0
  double flow_limit = kInf;   // MW; infinity = unlimited
  double angle_shift = 0.0;   // rad
};

struct Generator {
  Id id = 0;
  Id bus = 0;
  double p_min = 0.0;  // MW
  double p_max = 0.0;
  CostModel cost;
  double w_max = kInf;      // ramp-up per period, MW
  double w_min = kInf;      // ramp-down per period, MW
  double r_max = kInf;      // upward contingency reserve cap, MW
  double r_min = kInf;      // downward contingency reserve cap, MW
  double delta_min = kInf;  // base-to-contingency downward transition bound, MW
  double delta_max = kInf;  // upward transition bound, MW
  double p0 = 0.0;          // initial dispatch, MW
};

struct GridCase {
  double base_mva = 100.0;
  int period_count = 1;
  int period_minutes = 15;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;

  const Bus* bus(Id id) const;
  const Branch* branch(Id id) const;
  const Generator* generator(Id id) const;
};

// One (period, contingency) view of the surviving network. All quantities
// are per-unit on the case's base_mva. Matrix rows/columns are positions in
// the sorted active-id vectors.
struct NetworkSnapshot {
  std::vector<Id> buses;       // active, ascending
  std::vector<Id> branches;
  std::vector<Id> generators;
  std::map<Id, int> bus_pos;
  std::map<Id, int> branch_pos;
  std::map<Id, int> gen_pos;

  Eigen::SparseMatrix<double> bus_susceptance;  // |V| x |V|
  Eigen::SparseMatrix<double> branch_flow;      // |E| x |V|
  Eigen::SparseMatrix<double> gen_incidence;    // |G| x |V|
  Eigen::VectorXd demand;                       // p.u.
  Eigen::VectorXd effective_limit;              // p.u., derating applied
  Eigen::VectorXd shift_offset;                 // p.u., -b * angle_shift

  std::vector<std::vector<Id>> islands;  // ordered by lowest member id
  std::vector<Id> reference_buses;       // lowest active id per island

  // construction inputs, kept so pruning can rebuild
  OutageSet outages;
  DeratingSet derates;
  int period = 0;

  bool bus_active(Id id) const { return bus_pos.count(id) > 0; }
};

struct PruneResult {
  NetworkSnapshot snapshot;
  double shed_load_mw = 0.0;
  OutageSet pruned;  // elements removed with the dead islands
};

// Throws std::runtime_error with a diagnostic naming the offending field.
GridCase parse_case(const std::string& text);

// Lenient variant used by `validate`: collects findings instead of throwing
// (malformed documents still throw).
GridCase parse_case_lenient(const std::string& text, std::vector<Finding>& findings);

// Invariant checks on an already-built case.
std::vector<Finding> validate_case(const GridCase& grid);

// Version-2 matrix case importer (bus/gen/branch/gencost tables, quadratic
// costs only).
GridCase import_matpower(const std::string& text);

NetworkSnapshot build_snapshot(const GridCase& grid, const OutageSet& outages,
                               const DeratingSet& derates, int period);

// Removes islands that contain no generator; their total demand is returned
// as shed load. Idempotent.
PruneResult prune_dead_islands(const GridCase& grid, const NetworkSnapshot& snap);

}  // namespace cascopf
