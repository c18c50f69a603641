#include "cascopf/schedule.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace cascopf {

using nlohmann::json;

namespace {

std::set<Id> parse_ids(const json& j, const char* key) {
  std::set<Id> out;
  for (const auto& v : j.value(key, json::array())) out.insert(v.get<Id>());
  return out;
}

bool is_superset(const std::set<Id>& big, const std::set<Id>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::set<Id> set_minus(const std::set<Id>& a, const std::set<Id>& b) {
  std::set<Id> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
  return out;
}

}  // namespace

HurricaneSchedule parse_schedule(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed schedule document: ") + e.what());
  }
  HurricaneSchedule sched;
  sched.derate_fraction = doc.value("derate_fraction", 0.7);
  if (!(sched.derate_fraction > 0.0) || sched.derate_fraction > 1.0)
    throw std::runtime_error("derate_fraction must be in (0, 1]");
  const std::string gran = doc.value("granularity", "per-element");
  if (gran == "per-element") {
    sched.granularity = Granularity::PerElement;
  } else if (gran == "grouped") {
    sched.granularity = Granularity::Grouped;
  } else {
    throw std::runtime_error("granularity must be 'per-element' or 'grouped'");
  }
  const bool cumulative = doc.value("cumulative", true);

  if (!doc.contains("batches") || !doc.at("batches").is_array() || doc.at("batches").empty())
    throw std::runtime_error("schedule must list at least one batch");

  int index = 1;
  for (const auto& jb : doc.at("batches")) {
    ContingencyBatch batch;
    batch.index = index++;
    batch.elements.buses = parse_ids(jb, "buses");
    batch.elements.branches = parse_ids(jb, "branches");
    batch.elements.generators = parse_ids(jb, "generators");
    if (!sched.batches.empty()) {
      const OutageSet& prev = sched.batches.back().elements;
      if (cumulative) {
        if (!is_superset(batch.elements.buses, prev.buses) ||
            !is_superset(batch.elements.branches, prev.branches) ||
            !is_superset(batch.elements.generators, prev.generators))
          throw std::runtime_error("batch " + std::to_string(batch.index) +
                                   " is not a superset of batch " +
                                   std::to_string(batch.index - 1) +
                                   " (batches must be cumulative)");
      } else {
        batch.elements = OutageSet::unite(batch.elements, prev);
      }
    }
    sched.batches.push_back(std::move(batch));
  }
  return sched;
}

std::vector<Finding> validate_schedule(const HurricaneSchedule& schedule, const GridCase& grid) {
  std::vector<Finding> out;
  for (const auto& batch : schedule.batches) {
    const std::string where = "batch " + std::to_string(batch.index);
    for (Id id : batch.elements.buses) {
      if (grid.bus(id) == nullptr) out.push_back({where, "unknown bus " + std::to_string(id)});
    }
    for (Id id : batch.elements.branches) {
      if (grid.branch(id) == nullptr)
        out.push_back({where, "unknown branch " + std::to_string(id)});
    }
    for (Id id : batch.elements.generators) {
      if (grid.generator(id) == nullptr)
        out.push_back({where, "unknown generator " + std::to_string(id)});
    }
  }
  return out;
}

StepResolution resolve_step(const HurricaneSchedule& schedule, const GridCase& grid, int step) {
  if (step < 1 || step > static_cast<int>(schedule.batches.size()))
    throw std::out_of_range("step " + std::to_string(step) + " outside 1.." +
                            std::to_string(schedule.batches.size()));
  const OutageSet& current = schedule.batches[static_cast<size_t>(step - 1)].elements;
  const OutageSet empty;
  const OutageSet& previous =
      step > 1 ? schedule.batches[static_cast<size_t>(step - 2)].elements : empty;

  auto check_known = [&](const OutageSet& set) {
    for (Id id : set.buses)
      if (grid.bus(id) == nullptr)
        throw std::runtime_error("schedule references unknown bus " + std::to_string(id));
    for (Id id : set.branches)
      if (grid.branch(id) == nullptr)
        throw std::runtime_error("schedule references unknown branch " + std::to_string(id));
    for (Id id : set.generators)
      if (grid.generator(id) == nullptr)
        throw std::runtime_error("schedule references unknown generator " + std::to_string(id));
  };
  check_known(current);

  StepResolution res;
  res.step = step;
  res.applied_outages = current;

  OutageSet fresh;
  fresh.buses = set_minus(current.buses, previous.buses);
  fresh.branches = set_minus(current.branches, previous.branches);
  fresh.generators = set_minus(current.generators, previous.generators);

  if (schedule.granularity == Granularity::Grouped) {
    if (!fresh.empty()) {
      ContingencyCase group;
      group.label = "batch " + std::to_string(step) + " group";
      group.elements = fresh;
      res.contingencies.push_back(std::move(group));
    }
  } else {
    for (Id id : fresh.buses) {
      ContingencyCase cc;
      cc.label = "bus " + std::to_string(id);
      cc.elements.buses.insert(id);
      res.contingencies.push_back(std::move(cc));
    }
    for (Id id : fresh.branches) {
      ContingencyCase cc;
      cc.label = "branch " + std::to_string(id);
      cc.elements.branches.insert(id);
      res.contingencies.push_back(std::move(cc));
    }
    for (Id id : fresh.generators) {
      ContingencyCase cc;
      cc.label = "generator " + std::to_string(id);
      cc.elements.generators.insert(id);
      res.contingencies.push_back(std::move(cc));
    }
  }

  if (step < static_cast<int>(schedule.batches.size())) {
    const OutageSet& next = schedule.batches[static_cast<size_t>(step)].elements;
    check_known(next);
    for (Id id : set_minus(next.branches, current.branches))
      res.derate_targets[id] = schedule.derate_fraction;
  }
  return res;
}

}  // namespace cascopf
