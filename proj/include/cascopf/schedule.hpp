#pragma once

#include <string>
#include <vector>

#include "cascopf/grid_model.hpp"
#include "cascopf/types.hpp"

namespace cascopf {

// How a batch expands into the per-step security contingency set: one
// single-outage case per newly failed element, or the whole group as one
// N-k case.
enum class Granularity { PerElement, Grouped };

struct ContingencyBatch {
  int index = 0;  // 1-based step number
  OutageSet elements;  // cumulative from step 1
};

struct HurricaneSchedule {
  std::vector<ContingencyBatch> batches;
  double derate_fraction = 0.7;
  Granularity granularity = Granularity::PerElement;
};

struct ContingencyCase {
  std::string label;
  OutageSet elements;
};

struct StepResolution {
  int step = 0;
  OutageSet applied_outages;                    // batch k, already in effect
  std::vector<ContingencyCase> contingencies;   // security cases beyond the base case
  DeratingSet derate_targets;                   // branches of batch k+1
};

// Schedule document: ordered batch list with buses[]/branches[]/generators[]
// id arrays plus top-level derate_fraction, granularity and cumulative flag.
// With cumulative=true (default) each batch must be a superset of the
// previous one; with cumulative=false the increments are accumulated.
HurricaneSchedule parse_schedule(const std::string& text);

std::vector<Finding> validate_schedule(const HurricaneSchedule& schedule, const GridCase& grid);

StepResolution resolve_step(const HurricaneSchedule& schedule, const GridCase& grid, int step);

}  // namespace cascopf
