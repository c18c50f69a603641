#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cascopf/cascade.hpp"
#include "cascopf/log.hpp"
#include "cascopf/reporting.hpp"

namespace {

using namespace cascopf;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GridCase load_case(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 2 && path.substr(path.size() - 2) == ".m") return import_matpower(text);
  return parse_case(text);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CommonOpts {
  std::string case_path;
  std::string schedule_path;
  std::string out_dir = "out";
  double derate = -1.0;  // negative: keep the schedule's fraction
  std::string mode = "sdp";
  std::string granularity;
  int periods = 1;
  double tol = 1e-6;
  int max_iters = 100000;
  bool no_prune = false;
  bool stop_on_infeasible = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_schedule) {
  cmd->add_option("--case", opts.case_path, "case document (.json native or .m matrix case)")
      ->required();
  auto* sched = cmd->add_option("--schedule", opts.schedule_path, "hurricane schedule document");
  if (needs_schedule) sched->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--derate", opts.derate, "next-step line rating fraction in (0,1]");
  cmd->add_option("--mode", opts.mode, "relaxation mode: sdp | qp | both")
      ->check(CLI::IsMember({"sdp", "qp", "both"}));
  cmd->add_option("--granularity", opts.granularity,
                  "contingency granularity override: per-element | grouped")
      ->check(CLI::IsMember({"per-element", "grouped"}));
  cmd->add_option("--periods", opts.periods, "horizon periods per step")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", opts.tol, "solver tolerance");
  cmd->add_option("--max-iters", opts.max_iters, "solver iteration cap");
  cmd->add_flag("--no-prune", opts.no_prune, "keep generator-free islands instead of shedding them");
  cmd->add_flag("--stop-on-infeasible", opts.stop_on_infeasible, "stop the cascade at the first infeasible step");
}

CascadeConfig make_config(const CommonOpts& opts, const HurricaneSchedule& schedule) {
  CascadeConfig cfg;
  cfg.derate_fraction = opts.derate > 0 ? opts.derate : schedule.derate_fraction;
  if (opts.mode == "qp")
    cfg.relax_mode = RelaxMode::DirectQp;
  else if (opts.mode == "both")
    cfg.relax_mode = RelaxMode::Both;
  else
    cfg.relax_mode = RelaxMode::SdpRelaxation;
  cfg.prune_dead_islands = !opts.no_prune;
  cfg.stop_on_infeasible = opts.stop_on_infeasible;
  cfg.periods = opts.periods;
  cfg.solver.eps_primal = cfg.solver.eps_dual = cfg.solver.eps_gap = opts.tol;
  cfg.solver.max_iters = opts.max_iters;
  return cfg;
}

RunManifest make_manifest(const std::string& command, const CommonOpts& opts) {
  RunManifest mf;
  mf.command = command;
  mf.inputs.emplace_back("case", opts.case_path);
  if (!opts.schedule_path.empty()) mf.inputs.emplace_back("schedule", opts.schedule_path);
  mf.output_dir = opts.out_dir;
  mf.timestamp = utc_timestamp();
  if (opts.derate > 0) mf.overrides.emplace_back("derate", std::to_string(opts.derate));
  mf.overrides.emplace_back("mode", opts.mode);
  if (!opts.granularity.empty()) mf.overrides.emplace_back("granularity", opts.granularity);
  mf.overrides.emplace_back("periods", std::to_string(opts.periods));
  mf.overrides.emplace_back("tol", std::to_string(opts.tol));
  if (opts.no_prune) mf.overrides.emplace_back("no-prune", "true");
  return mf;
}

HurricaneSchedule load_schedule(const CommonOpts& opts) {
  HurricaneSchedule schedule = parse_schedule(read_file(opts.schedule_path));
  if (opts.granularity == "grouped") schedule.granularity = Granularity::Grouped;
  if (opts.granularity == "per-element") schedule.granularity = Granularity::PerElement;
  return schedule;
}

int cmd_run(const CommonOpts& opts) {
  const GridCase grid = load_case(opts.case_path);
  const HurricaneSchedule schedule = load_schedule(opts);
  CascadeConfig cfg = make_config(opts, schedule);
  cfg.case_label = opts.case_path;
  cfg.schedule_label = opts.schedule_path;

  const CascadeReport report = run_cascade(grid, schedule, cfg);
  namespace fs = std::filesystem;
  write_atomic((fs::path(opts.out_dir) / "cascade.csv").string(), csv_cascade(report));
  write_atomic((fs::path(opts.out_dir) / "cascade.json").string(), cascade_report_json(report));
  for (const auto& step : report.steps) {
    write_atomic((fs::path(opts.out_dir) / ("flows_" + std::to_string(step.step) + ".csv")).string(),
                 csv_flows(step));
  }
  write_atomic((fs::path(opts.out_dir) / "manifest.json").string(),
               manifest_json(make_manifest("run", opts)));

  bool any_infeasible = false;
  for (const auto& step : report.steps) {
    std::printf("batch %d: %s", step.step, to_string(step.status));
    if (step.operation_cost) std::printf("  cost $%s", format_money(*step.operation_cost).c_str());
    if (step.shed_load_mw > 0) std::printf("  shed %.3f MW", step.shed_load_mw);
    std::printf("\n");
    if (step.status != StepStatus::Feasible) any_infeasible = true;
  }
  return any_infeasible ? 2 : 0;
}

int cmd_solve_step(const CommonOpts& opts, int step) {
  const GridCase grid = load_case(opts.case_path);
  const HurricaneSchedule schedule = load_schedule(opts);
  CascadeConfig cfg = make_config(opts, schedule);
  cfg.case_label = opts.case_path;
  cfg.schedule_label = opts.schedule_path;

  // run the cascade up to the requested step so the basecase carries forward
  HurricaneSchedule truncated = schedule;
  if (step < 1 || step > static_cast<int>(schedule.batches.size()))
    throw std::runtime_error("step outside the schedule");
  truncated.batches.resize(static_cast<size_t>(step));
  const CascadeReport report = run_cascade(grid, truncated, cfg);
  const StepReport& sr = report.steps.back();

  namespace fs = std::filesystem;
  write_atomic((fs::path(opts.out_dir) / ("flows_" + std::to_string(step) + ".csv")).string(),
               csv_flows(sr));
  write_atomic((fs::path(opts.out_dir) / "manifest.json").string(),
               manifest_json(make_manifest("solve-step", opts)));

  std::printf("batch %d: %s", sr.step, to_string(sr.status));
  if (sr.operation_cost) std::printf("  cost $%s", format_money(*sr.operation_cost).c_str());
  if (sr.rank1_residual) std::printf("  rank1 %.3e", *sr.rank1_residual);
  std::printf("\n");
  return sr.status == StepStatus::Feasible ? 0 : 2;
}

int cmd_sweep(const CommonOpts& opts, int step, const std::vector<double>& fractions) {
  const GridCase grid = load_case(opts.case_path);
  const HurricaneSchedule schedule = load_schedule(opts);
  const CascadeConfig cfg = make_config(opts, schedule);

  std::vector<double> fracs = fractions;
  if (fracs.empty()) {
    for (int i = 20; i >= 1; --i) fracs.push_back(i * 0.05);
    std::sort(fracs.rbegin(), fracs.rend());
  }
  const SweepReport report = derate_sweep(grid, schedule, step, fracs, cfg);

  namespace fs = std::filesystem;
  write_atomic((fs::path(opts.out_dir) / "sweep.csv").string(), csv_sweep(report));
  write_atomic((fs::path(opts.out_dir) / "manifest.json").string(),
               manifest_json(make_manifest("sweep", opts)));

  for (size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    const std::string cost_note = e.cost ? " cost $" + format_money(*e.cost) : std::string();
    std::printf("fraction %.3f: %s%s%s\n", e.fraction, to_string(e.status), cost_note.c_str(),
                report.frontier_index && *report.frontier_index == i ? "  <- frontier" : "");
  }
  if (!report.frontier_index) return 2;
  return 0;
}

int cmd_validate(const CommonOpts& opts) {
  std::vector<Finding> findings;
  GridCase grid;
  bool parsed = false;
  try {
    const std::string text = read_file(opts.case_path);
    if (opts.case_path.size() >= 2 && opts.case_path.substr(opts.case_path.size() - 2) == ".m") {
      grid = import_matpower(text);
    } else {
      grid = parse_case_lenient(text, findings);
    }
    parsed = true;
  } catch (const std::exception& e) {
    findings.push_back({"case", e.what()});
  }
  if (parsed && !opts.schedule_path.empty()) {
    try {
      const HurricaneSchedule schedule = parse_schedule(read_file(opts.schedule_path));
      const auto sf = validate_schedule(schedule, grid);
      findings.insert(findings.end(), sf.begin(), sf.end());
    } catch (const std::exception& e) {
      findings.push_back({"schedule", e.what()});
    }
  }
  if (findings.empty()) {
    std::printf("ok: all invariants hold\n");
    return 0;
  }
  for (const auto& f : findings) std::printf("fail: %s: %s\n", f.where.c_str(), f.what.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-step contingency-cascade SCOPF with proactive line derating"};
  app.require_subcommand(1);

  CommonOpts run_opts, step_opts, sweep_opts, val_opts;
  int step_index = 1;
  int sweep_step = 1;
  std::vector<double> sweep_fractions;

  auto* run = app.add_subcommand("run", "run the full cascade and emit reports");
  add_common(run, run_opts, true);

  auto* solve_step = app.add_subcommand("solve-step", "solve a single cascade step");
  add_common(solve_step, step_opts, true);
  solve_step->add_option("--step", step_index, "1-based step index")->required();

  auto* sweep = app.add_subcommand("sweep", "derate fraction sweep on one step");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--step", sweep_step, "1-based step index")->required();
  sweep->add_option("--fractions", sweep_fractions, "descending fractions in (0,1]");

  auto* validate = app.add_subcommand("validate", "check case and schedule invariants");
  validate->add_option("--case", val_opts.case_path, "case document")->required();
  validate->add_option("--schedule", val_opts.schedule_path, "schedule document");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (solve_step->parsed()) return cmd_solve_step(step_opts, step_index);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_step, sweep_fractions);
    if (validate->parsed()) return cmd_validate(val_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
