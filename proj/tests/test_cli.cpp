#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const std::string kBin = CASCOPF_BIN;
const std::string kData = CASCOPF_DATA_DIR;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "cascopf_cli_stdout.txt";
  const std::string cmd = kBin + " " + args + " > " + out.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stdout_text = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run emits cascade.csv with -- rows and exit 2 when steps fail") {
  TempDir dir("cascopf_cli_run");
  const RunResult r = run_cli("run --case " + kData + "/cases/coast30.json --schedule " + kData +
                              "/schedules/coast30_hurricane.json --no-prune --mode qp --out " +
                              dir.path.string());
  CHECK(r.exit_code == 2);  // infeasible batches present

  const std::string csv = slurp(dir.path / "cascade.csv");
  CHECK(count_lines(csv) == 7);  // header + 6 batches
  CHECK(csv.find(",infeasible,--,") != std::string::npos);
  CHECK(fs::exists(dir.path / "manifest.json"));
  for (int k = 1; k <= 6; ++k)
    CHECK(fs::exists(dir.path / ("flows_" + std::to_string(k) + ".csv")));

  const std::string json = slurp(dir.path / "cascade.json");
  CHECK(json.find("\"status\": \"infeasible\"") != std::string::npos);
  CHECK(json.find("\"lost_branches\": 8") != std::string::npos);
}

TEST_CASE("run with pruning exits 0 and is byte-stable") {
  TempDir a("cascopf_cli_a"), b("cascopf_cli_b");
  const std::string common = "run --case " + kData + "/cases/coast30.json --schedule " + kData +
                             "/schedules/coast30_hurricane.json --mode qp --out ";
  CHECK(run_cli(common + a.path.string()).exit_code == 0);
  CHECK(run_cli(common + b.path.string()).exit_code == 0);
  CHECK(slurp(a.path / "cascade.csv") == slurp(b.path / "cascade.csv"));
  for (int k = 1; k <= 6; ++k) {
    const std::string name = "flows_" + std::to_string(k) + ".csv";
    CHECK(slurp(a.path / name) == slurp(b.path / name));
  }
}

TEST_CASE("derate 1.0 gives identical pre and post flow columns") {
  TempDir dir("cascopf_cli_derate1");
  const RunResult r = run_cli("run --case " + kData + "/cases/coast30.json --schedule " + kData +
                              "/schedules/coast30_hurricane.json --mode qp --derate 1.0 --out " +
                              dir.path.string());
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir.path / "flows_1.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 5);
    CHECK(cells[1] == cells[2]);  // pre == post
  }
}

TEST_CASE("sweep emits one frontier row") {
  TempDir dir("cascopf_cli_sweep");
  const RunResult r =
      run_cli("sweep --case " + kData + "/cases/coast30.json --schedule " + kData +
              "/schedules/coast30_hurricane.json --step 3 --mode qp --out " + dir.path.string());
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir.path / "sweep.csv");
  int frontier_rows = 0;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    if (line.size() >= 2 && line.substr(line.size() - 2) == ",1") ++frontier_rows;
  }
  CHECK(frontier_rows == 1);
}

TEST_CASE("sweep with no feasible fraction exits 2") {
  TempDir dir("cascopf_cli_sweep_bad");
  // step 1 of the chain schedule derates the only path to a loaded bus;
  // fractions far below the demand/limit ratio are all infeasible
  const fs::path case_path = dir.path / "case.json";
  const fs::path sched_path = dir.path / "sched.json";
  std::ofstream(case_path) << R"({
    "base_mva": 100, "period_count": 1,
    "buses": [{"id": 1}, {"id": 2, "demand": 60}],
    "branches": [{"id": 1, "from_bus": 1, "to_bus": 2, "susceptance": 10, "flow_limit": 100}],
    "generators": [{"id": 1, "bus": 1, "p_max": 100, "cost": {"alpha_lin": 10}}]
  })";
  std::ofstream(sched_path) << R"({"batches": [{"branches": []}, {"branches": [1]}]})";
  const RunResult r = run_cli("sweep --case " + case_path.string() + " --schedule " +
                              sched_path.string() +
                              " --step 1 --mode qp --fractions 0.5 0.4 0.3 --out " +
                              dir.path.string());
  CHECK(r.exit_code == 2);
  const std::string csv = slurp(dir.path / "sweep.csv");
  CHECK(csv.find(",1\n") == std::string::npos);  // no frontier flag
}

TEST_CASE("validate reports findings and exit codes") {
  TempDir dir("cascopf_cli_validate");
  const RunResult ok = run_cli("validate --case " + kData + "/cases/coast30.json --schedule " +
                               kData + "/schedules/coast30_hurricane.json");
  CHECK(ok.exit_code == 0);
  CHECK(ok.stdout_text.find("ok") != std::string::npos);

  const fs::path bad_case = dir.path / "bad.json";
  std::ofstream(bad_case) << R"({
    "buses": [{"id": 1}], "branches": [],
    "generators": [{"id": 9, "bus": 1, "p_min": 50, "p_max": 20, "p0": 50}]
  })";
  const RunResult bad = run_cli("validate --case " + bad_case.string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.stdout_text.find("generator 9") != std::string::npos);

  const fs::path bad_sched = dir.path / "bad_sched.json";
  std::ofstream(bad_sched) << R"({"batches": [{"branches": [999]}]})";
  const RunResult bs = run_cli("validate --case " + kData + "/cases/coast30.json --schedule " +
                               bad_sched.string());
  CHECK(bs.exit_code == 1);
  CHECK(bs.stdout_text.find("999") != std::string::npos);
  CHECK(bs.stdout_text.find("batch 1") != std::string::npos);
}

TEST_CASE("unreadable input exits 1 with a diagnostic") {
  const RunResult r = run_cli("run --case /nonexistent.json --schedule /nonexistent2.json");
  CHECK(r.exit_code == 1);
}

TEST_CASE("matrix case files are accepted directly") {
  const RunResult r = run_cli("validate --case " + kData + "/cases/case5a.m");
  CHECK(r.exit_code == 0);
}

TEST_CASE("solve-step solves one step and writes flows") {
  TempDir dir("cascopf_cli_step");
  const RunResult r =
      run_cli("solve-step --case " + kData + "/cases/coast30.json --schedule " + kData +
              "/schedules/coast30_hurricane.json --step 2 --mode both --out " + dir.path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("batch 2: feasible") != std::string::npos);
  CHECK(fs::exists(dir.path / "flows_2.csv"));
}
