#include "cascopf/reporting.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cascopf {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

constexpr const char* kAbsent = "--";

}  // namespace

std::string format_money(double dollars) { return fixed(dollars, 2); }
std::string format_mw(double mw) { return fixed(mw, 3); }

std::string csv_cascade(const CascadeReport& report) {
  std::ostringstream out;
  out << "batch,lost_buses,lost_branches,lost_generators,status,operation_cost,"
         "shed_load_mw,rank1_residual,gap_percent\n";
  for (const auto& s : report.steps) {
    out << s.step << ',' << s.lost_buses << ',' << s.lost_branches << ',' << s.lost_generators
        << ',' << to_string(s.status) << ',';
    out << (s.operation_cost ? format_money(*s.operation_cost) : kAbsent) << ',';
    out << format_mw(s.shed_load_mw) << ',';
    out << (s.rank1_residual ? sci(*s.rank1_residual) : kAbsent) << ',';
    out << (s.gap_percent ? fixed(*s.gap_percent, 4) : kAbsent) << '\n';
  }
  return out.str();
}

std::string csv_flows(const StepReport& step) {
  std::ostringstream out;
  out << "branch,pre_mitigation_mw,post_mitigation_mw,limit_mw,effective_limit_mw\n";
  // merge pre/post rows on branch id; an infeasible side renders "--"
  std::map<Id, const BranchFlow*> pre, post;
  for (const auto& f : step.flows_pre) pre[f.branch] = &f;
  for (const auto& f : step.flows) post[f.branch] = &f;
  std::map<Id, std::pair<const BranchFlow*, const BranchFlow*>> merged;
  for (const auto& [id, f] : pre) merged[id].first = f;
  for (const auto& [id, f] : post) merged[id].second = f;
  for (const auto& [id, fs] : merged) {
    const BranchFlow* any = fs.second ? fs.second : fs.first;
    out << id << ',';
    out << (fs.first ? format_mw(fs.first->flow_mw) : kAbsent) << ',';
    out << (fs.second ? format_mw(fs.second->flow_mw) : kAbsent) << ',';
    out << (std::isfinite(any->limit_mw) ? format_mw(any->limit_mw) : kAbsent) << ',';
    out << (fs.second && std::isfinite(fs.second->effective_limit_mw)
                ? format_mw(fs.second->effective_limit_mw)
                : (std::isfinite(any->effective_limit_mw) ? format_mw(any->effective_limit_mw)
                                                          : kAbsent))
        << '\n';
  }
  return out.str();
}

std::string csv_sweep(const SweepReport& report) {
  std::ostringstream out;
  out << "fraction,status,cost,frontier\n";
  for (size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    out << fixed(e.fraction, 4) << ',' << to_string(e.status) << ',';
    out << (e.cost ? format_money(*e.cost) : kAbsent) << ',';
    out << (report.frontier_index && *report.frontier_index == i ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string cascade_report_json(const CascadeReport& report) {
  nlohmann::json doc;
  doc["case"] = report.case_label;
  doc["schedule"] = report.schedule_label;
  doc["config"] = {{"derate_fraction", report.config.derate_fraction},
                   {"mode", to_string(report.config.relax_mode)},
                   {"periods", report.config.periods},
                   {"prune_dead_islands", report.config.prune_dead_islands},
                   {"stop_on_infeasible", report.config.stop_on_infeasible}};
  doc["steps"] = nlohmann::json::array();
  for (const auto& s : report.steps) {
    nlohmann::json js{{"batch", s.step},
                      {"lost_buses", s.lost_buses},
                      {"lost_branches", s.lost_branches},
                      {"lost_generators", s.lost_generators},
                      {"status", to_string(s.status)},
                      {"shed_load_mw", s.shed_load_mw},
                      {"solve_seconds", s.solve_seconds}};
    if (s.operation_cost) js["operation_cost"] = *s.operation_cost;
    if (s.premitigation_cost) js["premitigation_cost"] = *s.premitigation_cost;
    if (s.rank1_residual) js["rank1_residual"] = *s.rank1_residual;
    if (s.gap_percent) js["gap_percent"] = *s.gap_percent;
    if (!s.diagnostics.empty()) js["diagnostics"] = s.diagnostics;
    doc["steps"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& manifest) {
  nlohmann::json doc;
  doc["command"] = manifest.command;
  for (const auto& [name, path] : manifest.inputs) doc["inputs"][name] = path;
  doc["overrides"] = nlohmann::json::object();
  for (const auto& [flag, value] : manifest.overrides) doc["overrides"][flag] = value;
  doc["output_dir"] = manifest.output_dir;
  doc["timestamp"] = manifest.timestamp;
  doc["tool_version"] = manifest.tool_version;
  return doc.dump(2) + "\n";
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace cascopf
