#pragma once

// Trajectory dumps: one JSON document per simulated trial, split into a
// Trial_Overview (totals, cohorts, events) and Stage_Data (every analysis
// with the tables and rule trace behind its verdict). Plot-ready tables are
// derived from a dump without rerunning the simulation.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortplat/error.hpp"
#include "cohortplat/ocs.hpp"
#include "cohortplat/scenario.hpp"
#include "cohortplat/trial.hpp"

namespace cohortplat {

namespace detail {

using OJson = nlohmann::ordered_json;

inline OJson opt_index(const std::optional<std::size_t>& v) {
  if (v) return *v;
  return nullptr;
}

inline OJson tally_json(const ArmTally& t) {
  return {{"n", t.n},
          {"responders_interim", t.responders_interim()},
          {"responders_final", t.responders_final()},
          {"pairs", {{"0/0", t.pairs[0]}, {"0/1", t.pairs[1]}, {"1/0", t.pairs[2]}, {"1/1", t.pairs[3]}}}};
}

inline OJson table_json(const TwoByTwo& t) {
  return {{"t_resp", t.t_resp}, {"t_nonresp", t.t_nonresp}, {"c_resp", t.c_resp}, {"c_nonresp", t.c_nonresp}};
}

}  // namespace detail

inline nlohmann::ordered_json trajectory_json(const TrialResult& r, const std::string& scenario_id = {}) {
  using detail::OJson;
  OJson overview;
  if (!scenario_id.empty()) overview["Scenario"] = scenario_id;
  overview["Seed"] = r.seed;
  overview["Total_N"] = r.total_n;
  overview["Successes"] = r.successes;
  overview["Cohorts"] = r.cohorts.size();
  overview["First_Success_Index"] = detail::opt_index(r.first_success_index);
  overview["Entry_Closed_Index"] = detail::opt_index(r.entry_closed_index);
  overview["Recruitment_Halt_Index"] = detail::opt_index(r.recruitment_halt_index);

  OJson cohorts = OJson::array();
  for (const auto& c : r.cohorts) {
    OJson j;
    j["id"] = c.id;
    OJson arms = OJson::array();
    for (Arm a : kAllArms)
      if (c.arms[index(a)]) arms.push_back(std::string(arm_name(a)));
    j["arms"] = arms;
    j["truth"] = {{"comb", c.truth.pi_comb},
                  {"mono_a", c.truth.pi_mono_a},
                  {"mono_b", c.truth.pi_mono_b},
                  {"soc", c.truth.pi_soc},
                  {"clamped", c.truth.clamped}};
    j["truth_class"] = c.truth_class == TruthClass::superior ? "superior" : "futile";
    j["transform"] = c.transform_index;
    j["status"] = std::string(status_name(c.status));
    const auto conf = classify_decision(c);
    j["confusion"] = conf ? OJson(std::string(confusion_name(*conf))) : OJson(nullptr);
    j["open_index"] = c.open_index;
    j["close_index"] = detail::opt_index(c.close_index);
    j["size"] = c.size();
    OJson tallies;
    for (Arm a : kAllArms) tallies[std::string(arm_name(a))] = detail::tally_json(c.tally[index(a)]);
    j["arm_data"] = tallies;
    cohorts.push_back(j);
  }
  overview["Cohort_Summary"] = cohorts;

  OJson events = OJson::array();
  for (const auto& e : r.events) {
    OJson j{{"kind", e.kind}, {"patient_index", e.patient_index}};
    j["cohort"] = e.cohort == kUnlimited ? OJson(nullptr) : OJson(e.cohort);
    events.push_back(j);
  }
  overview["Events"] = events;

  OJson stages = OJson::array();
  for (const auto& c : r.cohorts) {
    for (const auto& a : c.analyses) {
      OJson j;
      j["cohort"] = c.id;
      j["stage"] = std::string(stage_name(a.stage));
      j["patient_counter"] = a.patient_counter;
      j["cohort_size"] = a.cohort_size;
      j["halted"] = a.halted;
      OJson own;
      for (Arm arm : kAllArms) {
        const auto& t = a.own[index(arm)];
        own[std::string(arm_name(arm))] = {{"n", t.n}, {"responders", t.responders(a.stage)}};
      }
      j["own_data"] = own;
      OJson sharing;
      for (Arm arm : {Arm::mono_b, Arm::soc})
        sharing[std::string(arm_name(arm))] = {{"external_n", a.external_n[index(arm)]},
                                               {"weight", a.sharing_weight[index(arm)]}};
      j["sharing"] = sharing;
      OJson tables;
      for (Comparison cmp : kAllComparisons) {
        const auto& in = a.data[index(cmp)];
        tables[std::string(comparison_name(cmp))] = {{"active", in.active}, {"table", detail::table_json(in.table)}};
      }
      j["tables"] = tables;
      j["verdict"] = std::string(verdict_name(a.decision.verdict));
      j["promising"] = a.decision.promising;
      j["reason"] = a.decision.reason;
      OJson trace = OJson::array();
      for (const auto& t : a.decision.trace) {
        trace.push_back({{"comparison", std::string(comparison_name(t.comparison))},
                         {"rule", std::string(rule_kind_name(t.kind))},
                         {"row", t.row},
                         {"statistic", t.statistic},
                         {"threshold", t.threshold},
                         {"satisfied", t.satisfied},
                         {"evaluated", t.evaluated}});
      }
      j["trace"] = trace;
      stages.push_back(j);
    }
  }

  OJson root;
  root["Trial_Overview"] = overview;
  root["Stage_Data"] = stages;
  return root;
}

inline std::string dump_trajectory(const TrialResult& r, const std::string& scenario_id = {}) {
  return trajectory_json(r, scenario_id).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Plot data

struct PlotArmRow {
  std::size_t cohort;
  Arm arm;
  std::size_t n;
  std::size_t responders_interim;
  std::size_t responders_final;
  double true_rate;
  std::array<std::size_t, 4> pairs;  // 0/0, 0/1, 1/0, 1/1

  std::optional<double> interim_rate() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(responders_interim) / static_cast<double>(n);
  }
  std::optional<double> final_rate() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(responders_final) / static_cast<double>(n);
  }
};

// Reads the per-cohort arm data of a dump. Throws RuntimeError on anything
// that does not look like a trajectory dump.
inline std::vector<PlotArmRow> load_plot_rows(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw RuntimeError(std::string("malformed trajectory dump: ") + e.what());
  }
  std::vector<PlotArmRow> rows;
  try {
    const auto& cohorts = j.at("Trial_Overview").at("Cohort_Summary");
    if (!cohorts.is_array()) throw RuntimeError("malformed trajectory dump: Cohort_Summary is not a list");
    for (const auto& c : cohorts) {
      const std::size_t id = c.at("id").get<std::size_t>();
      for (const auto& name : c.at("arms")) {
        const auto s = name.get<std::string>();
        std::optional<Arm> arm;
        for (Arm a : kAllArms)
          if (arm_name(a) == s) arm = a;
        if (!arm) throw RuntimeError("malformed trajectory dump: unknown arm " + s);
        const auto& d = c.at("arm_data").at(s);
        const auto& p = d.at("pairs");
        PlotArmRow row{id,
                       *arm,
                       d.at("n").get<std::size_t>(),
                       d.at("responders_interim").get<std::size_t>(),
                       d.at("responders_final").get<std::size_t>(),
                       c.at("truth").at(s).get<double>(),
                       {p.at("0/0").get<std::size_t>(), p.at("0/1").get<std::size_t>(),
                        p.at("1/0").get<std::size_t>(), p.at("1/1").get<std::size_t>()}};
        if (row.pairs[0] + row.pairs[1] + row.pairs[2] + row.pairs[3] != row.n)
          throw RuntimeError("malformed trajectory dump: pair counts do not sum to n for cohort " +
                             std::to_string(id) + " arm " + s);
        if (row.responders_final != row.pairs[1] + row.pairs[3] ||
            row.responders_interim != row.pairs[2] + row.pairs[3])
          throw RuntimeError("malformed trajectory dump: responder counts disagree with pair counts");
        rows.push_back(row);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError(std::string("malformed trajectory dump: ") + e.what());
  }
  return rows;
}

inline std::string plot_rates_csv(const std::vector<PlotArmRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
  std::string out = "cohort,arm,n,responders_interim,responders_final,rate_interim,rate_final,true_rate\n";
  for (const auto& r : rows) {
    out += std::to_string(r.cohort) + "," + std::string(arm_name(r.arm)) + "," + std::to_string(r.n) + "," +
           std::to_string(r.responders_interim) + "," + std::to_string(r.responders_final) + "," +
           opt(r.interim_rate()) + "," + opt(r.final_rate()) + "," + format_number(r.true_rate) + "\n";
  }
  return out;
}

inline std::string plot_pairs_csv(const std::vector<PlotArmRow>& rows) {
  std::string out = "cohort,arm,n_00,n_01,n_10,n_11\n";
  for (const auto& r : rows) {
    out += std::to_string(r.cohort) + "," + std::string(arm_name(r.arm));
    for (std::size_t k : r.pairs) out += "," + std::to_string(k);
    out += "\n";
  }
  return out;
}

}  // namespace cohortplat
