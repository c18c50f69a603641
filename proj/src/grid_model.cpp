#include "cascopf/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cascopf {

using nlohmann::json;

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, Id id) {
  for (const auto& it : items) {
    if (it.id == id) return &it;
  }
  return nullptr;
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw std::runtime_error(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::string id_str(const char* kind, Id id) {
  return std::string(kind) + " " + std::to_string(id);
}

}  // namespace

const Bus* GridCase::bus(Id id) const { return find_by_id(buses, id); }
const Branch* GridCase::branch(Id id) const { return find_by_id(branches, id); }
const Generator* GridCase::generator(Id id) const { return find_by_id(generators, id); }

// ---------------------------------------------------------------------------
// Validation

std::vector<Finding> validate_case(const GridCase& grid) {
  std::vector<Finding> out;
  auto add = [&](const std::string& where, const std::string& what) {
    out.push_back({where, what});
  };

  if (grid.base_mva <= 0) add("case", "base_mva must be positive");
  if (grid.period_count < 1) add("case", "period_count must be >= 1");

  std::set<Id> bus_ids, branch_ids, gen_ids;
  for (const auto& b : grid.buses) {
    if (!bus_ids.insert(b.id).second) add(id_str("bus", b.id), "duplicate id");
    if (!b.demand_profile.empty() &&
        b.demand_profile.size() != static_cast<size_t>(grid.period_count))
      add(id_str("bus", b.id), "demand profile length must equal period_count");
  }
  for (const auto& br : grid.branches) {
    if (!branch_ids.insert(br.id).second) add(id_str("branch", br.id), "duplicate id");
    if (br.from_bus == br.to_bus) add(id_str("branch", br.id), "from_bus equals to_bus");
    if (!bus_ids.count(br.from_bus))
      add(id_str("branch", br.id), "from_bus " + std::to_string(br.from_bus) + " does not exist");
    if (!bus_ids.count(br.to_bus))
      add(id_str("branch", br.id), "to_bus " + std::to_string(br.to_bus) + " does not exist");
    if (!(br.susceptance > 0)) add(id_str("branch", br.id), "susceptance must be positive");
    if (!(br.flow_limit > 0)) add(id_str("branch", br.id), "flow_limit must be positive");
  }
  for (const auto& g : grid.generators) {
    if (!gen_ids.insert(g.id).second) add(id_str("generator", g.id), "duplicate id");
    if (!bus_ids.count(g.bus))
      add(id_str("generator", g.id), "bus " + std::to_string(g.bus) + " does not exist");
    if (g.p_min > g.p_max) add(id_str("generator", g.id), "p_min exceeds p_max");
    if (g.p0 < g.p_min - 1e-9 || g.p0 > g.p_max + 1e-9)
      add(id_str("generator", g.id), "p0 outside [p_min, p_max]");
    for (auto [v, name] : {std::pair{g.w_max, "w_max"}, {g.w_min, "w_min"},
                           {g.r_max, "r_max"}, {g.r_min, "r_min"},
                           {g.delta_min, "delta_min"}, {g.delta_max, "delta_max"}}) {
      if (v < 0) add(id_str("generator", g.id), std::string(name) + " must be >= 0");
    }
    if (g.cost.alpha_sqr < 0) add(id_str("generator", g.id), "cost.alpha_sqr must be >= 0");
    if (g.cost.kappa < 0) add(id_str("generator", g.id), "cost.kappa must be >= 0");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Native case document

namespace {

CostModel parse_cost(const json& j) {
  CostModel c;
  c.alpha_sqr = get_num(j, "alpha_sqr", 0.0);
  c.alpha_lin = get_num(j, "alpha_lin", 0.0);
  c.zeta = get_num(j, "zeta", 0.0);
  c.kappa = get_num(j, "kappa", 0.0);
  c.eta_up = get_num(j, "eta_up", 0.0);
  c.eta_down = get_num(j, "eta_down", 0.0);
  c.mu_up = get_num(j, "mu_up", 0.0);
  c.mu_down = get_num(j, "mu_down", 0.0);
  return c;
}

GridCase parse_case_json(const json& doc) {
  if (!doc.is_object()) throw std::runtime_error("case document must be an object");
  GridCase grid;
  grid.base_mva = get_num(doc, "base_mva", 100.0);
  grid.period_count = static_cast<int>(get_num(doc, "period_count", 1.0));
  grid.period_minutes = static_cast<int>(get_num(doc, "period_minutes", 15.0));

  for (const auto& jb : doc.value("buses", json::array())) {
    Bus b;
    b.id = static_cast<Id>(get_num(jb, "id", 0));
    if (jb.contains("demand") && jb.at("demand").is_array()) {
      for (const auto& v : jb.at("demand")) b.demand_profile.push_back(v.get<double>());
      b.demand = b.demand_profile.empty() ? 0.0 : b.demand_profile.front();
    } else {
      b.demand = get_num(jb, "demand", 0.0);
    }
    grid.buses.push_back(std::move(b));
  }
  for (const auto& jb : doc.value("branches", json::array())) {
    Branch br;
    br.id = static_cast<Id>(get_num(jb, "id", 0));
    br.from_bus = static_cast<Id>(get_num(jb, "from_bus", 0));
    br.to_bus = static_cast<Id>(get_num(jb, "to_bus", 0));
    br.susceptance = get_num(jb, "susceptance", 0.0);
    br.flow_limit = jb.contains("flow_limit") ? get_num(jb, "flow_limit", kInf) : kInf;
    br.angle_shift = get_num(jb, "angle_shift", 0.0);
    grid.branches.push_back(br);
  }
  for (const auto& jg : doc.value("generators", json::array())) {
    Generator g;
    g.id = static_cast<Id>(get_num(jg, "id", 0));
    g.bus = static_cast<Id>(get_num(jg, "bus", 0));
    g.p_min = get_num(jg, "p_min", 0.0);
    g.p_max = get_num(jg, "p_max", 0.0);
    g.w_max = get_num(jg, "w_max", kInf);
    g.w_min = get_num(jg, "w_min", kInf);
    g.r_max = get_num(jg, "r_max", kInf);
    g.r_min = get_num(jg, "r_min", kInf);
    g.delta_min = get_num(jg, "delta_min", kInf);
    g.delta_max = get_num(jg, "delta_max", kInf);
    g.p0 = get_num(jg, "p0", g.p_min);
    if (jg.contains("cost")) g.cost = parse_cost(jg.at("cost"));
    grid.generators.push_back(g);
  }
  return grid;
}

}  // namespace

GridCase parse_case_lenient(const std::string& text, std::vector<Finding>& findings) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed case document: ") + e.what());
  }
  GridCase grid = parse_case_json(doc);
  auto found = validate_case(grid);
  findings.insert(findings.end(), found.begin(), found.end());
  return grid;
}

GridCase parse_case(const std::string& text) {
  std::vector<Finding> findings;
  GridCase grid = parse_case_lenient(text, findings);
  if (!findings.empty())
    throw std::runtime_error("invalid case: " + findings.front().where + ": " +
                             findings.front().what);
  return grid;
}

// ---------------------------------------------------------------------------
// Matrix case importer

namespace {

// Strips % comments and extracts `mpc.<name> = [ rows ];` numeric tables.
struct MatCase {
  std::map<std::string, std::vector<std::vector<double>>> tables;
  std::map<std::string, double> scalars;
  std::string version;
};

MatCase parse_mat_text(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    auto pct = line.find('%');
    if (pct != std::string::npos) line.erase(pct);
    clean += line;
    clean += '\n';
  }

  MatCase mc;
  size_t pos = 0;
  while ((pos = clean.find("mpc.", pos)) != std::string::npos) {
    size_t name_start = pos + 4;
    size_t eq = clean.find('=', name_start);
    if (eq == std::string::npos) break;
    std::string name = clean.substr(name_start, eq - name_start);
    name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());

    size_t vstart = eq + 1;
    while (vstart < clean.size() && std::isspace(static_cast<unsigned char>(clean[vstart]))) ++vstart;
    if (vstart >= clean.size()) break;

    if (clean[vstart] == '[') {
      size_t vend = clean.find(']', vstart);
      if (vend == std::string::npos) throw std::runtime_error("unterminated matrix for mpc." + name);
      std::string body = clean.substr(vstart + 1, vend - vstart - 1);
      std::vector<std::vector<double>> rows;
      std::string rowtext;
      auto flush_row = [&]() {
        std::istringstream rs(rowtext);
        std::vector<double> row;
        double v;
        while (rs >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
        rowtext.clear();
      };
      for (char ch : body) {
        if (ch == ';' || ch == '\n') {
          flush_row();
        } else {
          rowtext += ch;
        }
      }
      flush_row();
      mc.tables[name] = std::move(rows);
      pos = vend + 1;
    } else if (clean[vstart] == '\'') {
      size_t vend = clean.find('\'', vstart + 1);
      if (vend == std::string::npos) throw std::runtime_error("unterminated string for mpc." + name);
      if (name == "version") mc.version = clean.substr(vstart + 1, vend - vstart - 1);
      pos = vend + 1;
    } else {
      size_t vend = clean.find(';', vstart);
      if (vend == std::string::npos) vend = clean.find('\n', vstart);
      if (vend == std::string::npos) vend = clean.size();
      try {
        mc.scalars[name] = std::stod(clean.substr(vstart, vend - vstart));
      } catch (...) {
        // non-numeric assignment, ignore
      }
      pos = vend;
    }
  }
  return mc;
}

}  // namespace

GridCase import_matpower(const std::string& text) {
  const MatCase mc = parse_mat_text(text);
  if (mc.version != "2")
    throw std::runtime_error("unsupported matrix case version '" + mc.version +
                             "' (version-2 layout required)");
  auto require_table = [&](const char* name) -> const std::vector<std::vector<double>>& {
    auto it = mc.tables.find(name);
    if (it == mc.tables.end() || it->second.empty())
      throw std::runtime_error(std::string("matrix case is missing the ") + name + " table");
    return it->second;
  };
  const auto& bus_tab = require_table("bus");
  const auto& gen_tab = require_table("gen");
  const auto& branch_tab = require_table("branch");
  const auto& cost_tab = require_table("gencost");

  GridCase grid;
  auto sc = mc.scalars.find("baseMVA");
  grid.base_mva = sc != mc.scalars.end() ? sc->second : 100.0;

  for (const auto& row : bus_tab) {
    if (row.size() < 3) throw std::runtime_error("bus table row has missing columns (need >= 3)");
    Bus b;
    b.id = static_cast<Id>(row[0]);
    b.demand = row[2];  // PD
    grid.buses.push_back(std::move(b));
  }

  Id next_branch = 1;
  for (const auto& row : branch_tab) {
    if (row.size() < 11)
      throw std::runtime_error("branch table row has missing columns (need >= 11)");
    if (row[10] <= 0) continue;  // out of service
    Branch br;
    br.id = next_branch++;
    br.from_bus = static_cast<Id>(row[0]);
    br.to_bus = static_cast<Id>(row[1]);
    const double x = row[3];
    if (x <= 0)
      throw std::runtime_error("branch " + std::to_string(br.id) +
                               ": non-positive reactance gives non-positive susceptance");
    br.susceptance = 1.0 / x;
    br.flow_limit = row[5] > 0 ? row[5] : kInf;  // RATE_A, 0 = unlimited
    br.angle_shift = row[9] * std::numbers::pi / 180.0;
    grid.branches.push_back(br);
  }

  if (cost_tab.size() < gen_tab.size())
    throw std::runtime_error("gencost table has fewer rows than the gen table");

  Id next_gen = 1;
  for (size_t i = 0; i < gen_tab.size(); ++i) {
    const auto& row = gen_tab[i];
    if (row.size() < 10) throw std::runtime_error("gen table row has missing columns (need >= 10)");
    if (row[7] <= 0) continue;  // GEN_STATUS
    Generator g;
    g.id = next_gen++;
    g.bus = static_cast<Id>(row[0]);
    g.p_max = row[8];
    g.p_min = row[9];
    g.p0 = std::clamp(row[1], g.p_min, g.p_max);  // PG

    const auto& cost = cost_tab[i];
    if (cost.size() < 4) throw std::runtime_error("gencost row has missing columns (need >= 4)");
    const int model = static_cast<int>(cost[0]);
    if (model == 1)
      throw std::runtime_error("unsupported piecewise-linear cost model (model 1) for generator " +
                               std::to_string(g.id) + "; only polynomial model 2 is supported");
    if (model != 2)
      throw std::runtime_error("unknown cost model " + std::to_string(model));
    const int ncost = static_cast<int>(cost[3]);
    if (ncost < 1 || ncost > 3)
      throw std::runtime_error("generator " + std::to_string(g.id) +
                               ": polynomial cost must have degree <= 2 (ncost in 1..3)");
    if (cost.size() < static_cast<size_t>(4 + ncost))
      throw std::runtime_error("gencost row has missing coefficient columns");
    // coefficients are listed highest degree first
    std::vector<double> coef(cost.begin() + 4, cost.begin() + 4 + ncost);
    g.cost.zeta = coef[ncost - 1];
    if (ncost >= 2) g.cost.alpha_lin = coef[ncost - 2];
    if (ncost >= 3) g.cost.alpha_sqr = coef[ncost - 3];
    grid.generators.push_back(g);
  }

  auto findings = validate_case(grid);
  if (!findings.empty())
    throw std::runtime_error("imported case is invalid: " + findings.front().where + ": " +
                             findings.front().what);
  return grid;
}

// ---------------------------------------------------------------------------
// Snapshots

NetworkSnapshot build_snapshot(const GridCase& grid, const OutageSet& outages,
                               const DeratingSet& derates, int period) {
  NetworkSnapshot snap;
  snap.outages = outages;
  snap.derates = derates;
  snap.period = period;

  for (const auto& b : grid.buses) {
    if (!outages.buses.count(b.id)) snap.buses.push_back(b.id);
  }
  std::sort(snap.buses.begin(), snap.buses.end());
  for (size_t i = 0; i < snap.buses.size(); ++i) snap.bus_pos[snap.buses[i]] = static_cast<int>(i);

  for (const auto& br : grid.branches) {
    if (outages.branches.count(br.id)) continue;
    if (!snap.bus_pos.count(br.from_bus) || !snap.bus_pos.count(br.to_bus)) continue;
    snap.branches.push_back(br.id);
  }
  std::sort(snap.branches.begin(), snap.branches.end());
  for (size_t i = 0; i < snap.branches.size(); ++i)
    snap.branch_pos[snap.branches[i]] = static_cast<int>(i);

  for (const auto& g : grid.generators) {
    if (outages.generators.count(g.id)) continue;
    if (!snap.bus_pos.count(g.bus)) continue;  // generators at outaged buses are outaged
    snap.generators.push_back(g.id);
  }
  std::sort(snap.generators.begin(), snap.generators.end());
  for (size_t i = 0; i < snap.generators.size(); ++i)
    snap.gen_pos[snap.generators[i]] = static_cast<int>(i);

  const int nv = static_cast<int>(snap.buses.size());
  const int ne = static_cast<int>(snap.branches.size());
  const int ng = static_cast<int>(snap.generators.size());
  const double base = grid.base_mva;

  // Off-diagonals first; each diagonal is then the negated sum of its row's
  // off-diagonals so row sums are exactly zero in floating point.
  std::vector<std::map<int, double>> offdiag(static_cast<size_t>(nv));
  snap.branch_flow.resize(ne, nv);
  snap.effective_limit.resize(ne);
  snap.shift_offset.resize(ne);
  std::vector<Eigen::Triplet<double>> flow_trip;
  for (int e = 0; e < ne; ++e) {
    const Branch& br = *grid.branch(snap.branches[e]);
    const int i = snap.bus_pos.at(br.from_bus);
    const int j = snap.bus_pos.at(br.to_bus);
    offdiag[static_cast<size_t>(i)][j] -= br.susceptance;
    offdiag[static_cast<size_t>(j)][i] -= br.susceptance;
    flow_trip.emplace_back(e, i, br.susceptance);
    flow_trip.emplace_back(e, j, -br.susceptance);
    double limit = br.flow_limit / base;
    auto dr = derates.find(br.id);
    if (dr != derates.end()) limit *= dr->second;
    snap.effective_limit[e] = limit;
    snap.shift_offset[e] = -br.susceptance * br.angle_shift;
  }
  snap.branch_flow.setFromTriplets(flow_trip.begin(), flow_trip.end());

  std::vector<Eigen::Triplet<double>> b_trip;
  for (int i = 0; i < nv; ++i) {
    double diag = 0.0;
    for (const auto& [j, v] : offdiag[static_cast<size_t>(i)]) {
      b_trip.emplace_back(i, j, v);
      diag -= v;
    }
    b_trip.emplace_back(i, i, diag);
  }
  snap.bus_susceptance.resize(nv, nv);
  snap.bus_susceptance.setFromTriplets(b_trip.begin(), b_trip.end());

  std::vector<Eigen::Triplet<double>> g_trip;
  for (int g = 0; g < ng; ++g) {
    const Generator& gen = *grid.generator(snap.generators[g]);
    g_trip.emplace_back(g, snap.bus_pos.at(gen.bus), 1.0);
  }
  snap.gen_incidence.resize(ng, nv);
  snap.gen_incidence.setFromTriplets(g_trip.begin(), g_trip.end());

  snap.demand.resize(nv);
  for (int i = 0; i < nv; ++i) snap.demand[i] = grid.bus(snap.buses[i])->demand_at(period) / base;

  // islands via breadth-first search over the active adjacency
  std::vector<std::vector<int>> adj(static_cast<size_t>(nv));
  for (int e = 0; e < ne; ++e) {
    const Branch& br = *grid.branch(snap.branches[e]);
    const int i = snap.bus_pos.at(br.from_bus);
    const int j = snap.bus_pos.at(br.to_bus);
    adj[static_cast<size_t>(i)].push_back(j);
    adj[static_cast<size_t>(j)].push_back(i);
  }
  std::vector<bool> seen(static_cast<size_t>(nv), false);
  for (int start = 0; start < nv; ++start) {
    if (seen[static_cast<size_t>(start)]) continue;
    std::vector<int> stack{start};
    seen[static_cast<size_t>(start)] = true;
    std::vector<Id> members;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      members.push_back(snap.buses[static_cast<size_t>(u)]);
      for (int w : adj[static_cast<size_t>(u)]) {
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = true;
          stack.push_back(w);
        }
      }
    }
    std::sort(members.begin(), members.end());
    snap.reference_buses.push_back(members.front());
    snap.islands.push_back(std::move(members));
  }
  return snap;
}

PruneResult prune_dead_islands(const GridCase& grid, const NetworkSnapshot& snap) {
  PruneResult result;
  std::set<Id> dead_buses;
  double shed_pu = 0.0;
  for (const auto& island : snap.islands) {
    bool has_gen = false;
    for (Id gid : snap.generators) {
      if (std::find(island.begin(), island.end(), grid.generator(gid)->bus) != island.end()) {
        has_gen = true;
        break;
      }
    }
    if (has_gen) continue;
    for (Id bid : island) {
      dead_buses.insert(bid);
      shed_pu += snap.demand[snap.bus_pos.at(bid)];
    }
  }
  if (dead_buses.empty()) {
    result.snapshot = snap;
    result.shed_load_mw = 0.0;
    return result;
  }
  OutageSet extended = snap.outages;
  for (Id bid : dead_buses) {
    extended.buses.insert(bid);
    result.pruned.buses.insert(bid);
  }
  for (Id brid : snap.branches) {
    const Branch& br = *grid.branch(brid);
    if (dead_buses.count(br.from_bus) || dead_buses.count(br.to_bus)) {
      extended.branches.insert(brid);
      result.pruned.branches.insert(brid);
    }
  }
  result.snapshot = build_snapshot(grid, extended, snap.derates, snap.period);
  result.shed_load_mw = shed_pu * grid.base_mva;
  return result;
}

}  // namespace cascopf
