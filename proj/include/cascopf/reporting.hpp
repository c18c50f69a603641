#pragma once

#include <string>
#include <vector>

#include "cascopf/cascade.hpp"

namespace cascopf {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;     // name -> path
  std::vector<std::pair<std::string, std::string>> overrides;  // flag -> value
  std::string output_dir;
  std::string timestamp;  // ISO-8601 UTC, filled at write time
  std::string tool_version = kToolVersion;
};

// cascade.csv: batch, lost_buses, lost_branches, lost_generators, status,
// operation_cost, shed_load_mw, rank1_residual, gap_percent
std::string csv_cascade(const CascadeReport& report);

// flows_<k>.csv: branch, pre- and post-mitigation flow, limit, effective limit
std::string csv_flows(const StepReport& step);

// sweep.csv: fraction, status, cost, frontier
std::string csv_sweep(const SweepReport& report);

// the full cascade report as a structured document
std::string cascade_report_json(const CascadeReport& report);

std::string manifest_json(const RunManifest& manifest);

// Write-then-rename so partially written files are never observed.
void write_atomic(const std::string& path, const std::string& content);

std::string format_money(double dollars);  // 2 decimals
std::string format_mw(double mw);          // 3 decimals

}  // namespace cascopf
