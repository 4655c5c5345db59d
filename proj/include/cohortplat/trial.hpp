#pragma once

// Simulation of a single platform trial trajectory.
//
// Time is the platform-wide patient counter. Each iteration allocates one
// randomization block to every enrolling cohort; after every included
// patient the safety stop and new-cohort entry are drawn.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohortplat/decision.hpp"
#include "cohortplat/efficacy.hpp"
#include "cohortplat/random.hpp"
#include "cohortplat/scenario.hpp"
#include "cohortplat/stats.hpp"

namespace cohortplat {

struct Patient {
  std::size_t enrollment_index;  // 1-based platform-wide counter value
  bool interim;
  bool final_outcome;
};

// Per-arm outcome counts. `pairs` is indexed by 2 * interim + final,
// i.e. (0/0, 0/1, 1/0, 1/1).
struct ArmTally {
  std::size_t n = 0;
  std::array<std::size_t, 4> pairs{};

  void add(bool interim, bool final_outcome) {
    ++n;
    ++pairs[(interim ? 2 : 0) + (final_outcome ? 1 : 0)];
  }
  std::size_t responders_interim() const noexcept { return pairs[2] + pairs[3]; }
  std::size_t responders_final() const noexcept { return pairs[1] + pairs[3]; }
  std::size_t responders(Stage s) const noexcept {
    return s == Stage::interim ? responders_interim() : responders_final();
  }

  friend bool operator==(const ArmTally&, const ArmTally&) = default;
};

enum class CohortStatus {
  enrolling,
  stopped_interim_futility,
  stopped_interim_efficacy,
  stopped_safety,
  completed_go,
  completed_unsuccessful,
  completed_futility,
  halted_recruitment,
};

constexpr std::string_view status_name(CohortStatus s) noexcept {
  switch (s) {
    case CohortStatus::enrolling: return "enrolling";
    case CohortStatus::stopped_interim_futility: return "stopped_interim_futility";
    case CohortStatus::stopped_interim_efficacy: return "stopped_interim_efficacy";
    case CohortStatus::stopped_safety: return "stopped_safety";
    case CohortStatus::completed_go: return "completed_go";
    case CohortStatus::completed_unsuccessful: return "completed_unsuccessful";
    case CohortStatus::completed_futility: return "completed_futility";
    case CohortStatus::halted_recruitment: return "halted_recruitment";
  }
  return "?";
}

enum class Confusion { tp, fp, tn, fn };

constexpr std::string_view confusion_name(Confusion c) noexcept {
  switch (c) {
    case Confusion::tp: return "TP";
    case Confusion::fp: return "FP";
    case Confusion::tn: return "TN";
    case Confusion::fn: return "FN";
  }
  return "?";
}

struct AnalysisRecord {
  Stage stage = Stage::interim;
  std::size_t patient_counter = 0;
  std::size_t cohort_size = 0;
  std::array<ArmTally, kNumArms> own;        // own data at the time of analysis
  ComparisonData data;                       // tables handed to the rules
  std::array<double, kNumArms> sharing_weight{};  // weight on external data per arm
  std::array<double, kNumArms> external_n{};      // external patients available per arm
  bool halted = false;                       // forced final after a platform halt
  CohortDecision decision;
};

struct CohortState {
  std::size_t id = 0;
  ArmPresence arms{};
  CohortTruth truth;
  TruthClass truth_class = TruthClass::futile;
  std::size_t transform_index = 0;
  std::array<std::vector<Patient>, kNumArms> ledger;
  std::array<ArmTally, kNumArms> tally;
  CohortStatus status = CohortStatus::enrolling;
  std::size_t open_index = 0;
  std::optional<std::size_t> close_index;
  std::vector<AnalysisRecord> analyses;
  bool has_interim = false;
  bool has_final = false;

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tally) n += t.n;
    return n;
  }
  bool enrolling() const noexcept { return status == CohortStatus::enrolling; }
};

struct PlatformEvent {
  std::string kind;  // cohort_open, cohort_close, safety_stop, entry_closed, recruitment_halt
  std::size_t patient_index;
  std::size_t cohort;  // kUnlimited for platform-wide events
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::size_t total_n = 0;
  std::size_t successes = 0;
  std::vector<CohortState> cohorts;
  std::vector<PlatformEvent> events;
  std::optional<std::size_t> first_success_index;
  std::size_t soc_patients_at_first_success = 0;
  std::size_t cohorts_at_first_success = 0;
  std::optional<std::size_t> entry_closed_index;
  std::optional<std::size_t> recruitment_halt_index;
  // Truths drawn for every cohort that could have entered (cohorts_max), and
  // the arm structure a cohort entering at the end would have had.
  std::vector<CohortTruth> planned_truths;
  ArmPresence arms_for_new_cohort{};
};

// ---------------------------------------------------------------------------

inline std::size_t block_size(const ArmPresence& arms, const AllocationRatio& ratio) {
  std::size_t n = 0;
  for (Arm a : kAllArms)
    if (arms[index(a)]) n += ratio[index(a)];
  return n;
}

// One randomization block: exactly ratio[a] patients per present arm, in
// uniformly random order.
inline std::vector<Arm> allocate_block(const ArmPresence& arms, const AllocationRatio& ratio,
                                       RandomStream& rng) {
  std::vector<Arm> block;
  block.reserve(block_size(arms, ratio));
  for (Arm a : kAllArms)
    if (arms[index(a)]) block.insert(block.end(), ratio[index(a)], a);
  rng.shuffle(std::span<Arm>(block));
  return block;
}

struct OutcomePair {
  bool interim;
  bool final_outcome;
};

inline OutcomePair gen_outcome_pair(double rr, const OutcomeTransform& transform, RandomStream& rng) {
  const OutcomeProbs p = transform(rr);
  const std::size_t k = rng.categorical(std::span<const double>(p));
  return {k >= 2, (k % 2) == 1};
}

inline std::optional<Confusion> classify_decision(const CohortState& c) {
  bool positive = false;
  switch (c.status) {
    case CohortStatus::stopped_interim_efficacy:
    case CohortStatus::completed_go: positive = true; break;
    case CohortStatus::stopped_interim_futility:
    case CohortStatus::completed_futility:
    case CohortStatus::completed_unsuccessful: positive = false; break;
    default: return std::nullopt;
  }
  if (c.truth_class == TruthClass::superior) return positive ? Confusion::tp : Confusion::fn;
  return positive ? Confusion::fp : Confusion::tn;
}

// Homogeneity weight for external data: the two-sided p-value of the
// two-proportion test between own and external counts.
inline double dynamic_borrowing_weight(const ArmCounts& own, const ArmCounts& external) {
  if (!(own.total > 0.0 && external.total > 0.0)) return 0.0;
  const TwoByTwo t{own.responders, own.total - own.responders, external.responders,
                   external.total - external.responders};
  const double p = one_sided_prop_test(t);
  return std::min(1.0, 2.0 * std::min(p, 1.0 - p));
}

// ---------------------------------------------------------------------------

class TrialEngine {
 public:
  TrialEngine(const ScenarioSpec& spec, RandomStream rng)
      : spec_(spec), truth_rng_(rng.split(1)), rng_(rng.split(2)) {
    result_.seed = rng.seed();
  }

  TrialResult run() {
    const auto& pf = spec_.platform;
    for (std::size_t k = 0; k < pf.cohorts_max; ++k) {
      result_.planned_truths.push_back(draw_cohort_truth(spec_.efficacy, truth_rng_));
      transform_plan_.push_back(rng_index(spec_.endpoint.probs));
    }
    for (std::size_t k = 0; k < pf.cohorts_initial; ++k) open_cohort();

    std::vector<std::size_t> active;
    while (true) {
      active.clear();
      for (const auto& c : result_.cohorts)
        if (c.enrolling()) active.push_back(c.id);
      if (active.empty()) break;

      for (std::size_t id : active) {
        if (!recruitment_open_) break;
        enroll_block(id);
      }
      for (std::size_t id : active) run_due_analyses(id);

      if (entry_open_ && result_.successes >= pf.sr_drugs_pos) {
        entry_open_ = false;
        result_.entry_closed_index = counter_;
        result_.events.push_back({"entry_closed", counter_, kUnlimited});
        if (!pf.run_out_active_cohorts) halt();
      }
      if (recruitment_open_ && counter_ >= pf.sr_pats) halt();
      if (!recruitment_open_) halt();
    }
    result_.total_n = counter_;
    result_.arms_for_new_cohort = arms_for_new_cohort();
    return std::move(result_);
  }

  // Builds the comparison tables for an analysis, sharing the comparator SoC
  // and backbone (mono B) cells across cohorts per the sharing type.
  static ComparisonData assemble_analysis_data(const std::vector<CohortState>& cohorts,
                                               const CohortState& cohort, SharingType mode,
                                               Stage stage, std::size_t counter,
                                               AnalysisRecord* record = nullptr) {
    std::array<ArmCounts, kNumArms> own{};
    for (Arm a : kAllArms) {
      const auto& t = cohort.tally[index(a)];
      own[index(a)] = {static_cast<double>(t.responders(stage)), static_cast<double>(t.n)};
    }
    std::array<ArmCounts, kNumArms> comparator = own;

    if (mode != SharingType::cohort) {
      for (Arm a : {Arm::mono_b, Arm::soc}) {
        if (!cohort.arms[index(a)]) continue;
        ArmCounts ext{};
        for (const auto& other : cohorts) {
          if (other.id == cohort.id || !other.arms[index(a)]) continue;
          if (mode == SharingType::concurrent) {
            for (const auto& p : other.ledger[index(a)]) {
              if (p.enrollment_index < cohort.open_index || p.enrollment_index > counter) continue;
              ext.total += 1.0;
              ext.responders += (stage == Stage::interim ? p.interim : p.final_outcome) ? 1.0 : 0.0;
            }
          } else {
            const auto& t = other.tally[index(a)];
            ext.total += static_cast<double>(t.n);
            ext.responders += static_cast<double>(t.responders(stage));
          }
        }
        const double w = mode == SharingType::dynamic ? dynamic_borrowing_weight(own[index(a)], ext)
                                                      : 1.0;
        comparator[index(a)].responders += w * ext.responders;
        comparator[index(a)].total += w * ext.total;
        if (record) {
          record->sharing_weight[index(a)] = ext.total > 0.0 ? w : 0.0;
          record->external_n[index(a)] = ext.total;
        }
      }
    }

    ComparisonData data;
    for (Comparison c : kAllComparisons) {
      const Arm num = numerator_arm(c);
      const Arm cmp = comparator_arm(c);
      auto& in = data[index(c)];
      in.active = cohort.arms[index(num)] && cohort.arms[index(cmp)];
      const auto& t = own[index(num)];
      const auto& k = comparator[index(cmp)];
      in.table = {t.responders, t.total - t.responders, k.responders, k.total - k.responders};
      in.numerator = t;
    }
    return data;
  }

 private:
  std::size_t rng_index(const std::vector<double>& w) {
    return truth_rng_.categorical(std::span<const double>(w));
  }

  ArmPresence arms_for_new_cohort() const {
    const auto& pf = spec_.platform;
    ArmPresence arms{};
    for (Arm a : kAllArms) arms[index(a)] = pf.allocation_ratio[index(a)] > 0;
    bool soc = false;
    switch (pf.trial_struc) {
      case TrialStructure::all_plac: soc = true; break;
      case TrialStructure::no_plac: soc = false; break;
      case TrialStructure::stop_post_mono: soc = !mono_sup_seen_; break;
      case TrialStructure::stop_post_back: soc = !back_sup_seen_; break;
    }
    arms[index(Arm::soc)] = arms[index(Arm::soc)] && soc;
    return arms;
  }

  void open_cohort() {
    CohortState c;
    c.id = result_.cohorts.size();
    c.arms = arms_for_new_cohort();
    c.truth = result_.planned_truths[c.id];
    c.truth_class = classify_truth(c.truth, spec_.target, c.arms);
    c.transform_index = transform_plan_[c.id];
    c.open_index = counter_;
    last_open_ = counter_;
    result_.events.push_back({"cohort_open", counter_, c.id});
    result_.cohorts.push_back(std::move(c));
  }

  bool may_open_cohort() const {
    const auto& pf = spec_.platform;
    return entry_open_ && recruitment_open_ && !(pf.sr_first_pos && result_.successes > 0) &&
           result_.cohorts.size() < pf.cohorts_max && counter_ - last_open_ >= pf.cohort_offset;
  }

  void close(CohortState& c, CohortStatus status) {
    c.status = status;
    c.close_index = counter_;
    result_.events.push_back({"cohort_close", counter_, c.id});
  }

  void enroll_block(std::size_t id) {
    const auto& pf = spec_.platform;
    const auto block = allocate_block(result_.cohorts[id].arms, pf.allocation_ratio, rng_);
    for (Arm a : block) {
      auto& c = result_.cohorts[id];
      const auto& transform = spec_.endpoint.transforms[c.transform_index];
      const auto outcome = gen_outcome_pair(c.truth.rate(a), transform, rng_);
      ++counter_;
      c.ledger[index(a)].push_back({counter_, outcome.interim, outcome.final_outcome});
      c.tally[index(a)].add(outcome.interim, outcome.final_outcome);

      const bool safety = rng_.bernoulli(pf.safety_prob);
      if (safety) {
        result_.events.push_back({"safety_stop", counter_, id});
        close(c, CohortStatus::stopped_safety);
      }
      if (may_open_cohort() && rng_.bernoulli(pf.cohort_random)) open_cohort();
      if (counter_ >= pf.sr_pats) {
        recruitment_open_ = false;
        return;
      }
      if (safety) return;
    }
  }

  void run_due_analyses(std::size_t id) {
    const auto& pf = spec_.platform;
    auto& c = result_.cohorts[id];
    if (!c.enrolling()) return;
    if (pf.n_int < pf.n_fin && !c.has_interim && c.size() >= pf.n_int)
      run_analysis(id, Stage::interim, false);
    if (result_.cohorts[id].enrolling() && result_.cohorts[id].size() >= pf.n_fin)
      run_analysis(id, Stage::final, false);
  }

  void run_analysis(std::size_t id, Stage stage, bool halted) {
    AnalysisRecord rec;
    {
      const auto& c = result_.cohorts[id];
      rec.stage = stage;
      rec.patient_counter = counter_;
      rec.cohort_size = c.size();
      rec.own = c.tally;
      rec.halted = halted;
      rec.data = assemble_analysis_data(result_.cohorts, c, spec_.platform.sharing_type, stage,
                                        counter_, &rec);
    }
    rec.decision = decide(spec_.rules.at(stage), rec.data, spec_.prior, stage);
    if (halted) rec.decision.reason += " (recruitment halted before the planned final size)";

    const auto& sup = rec.decision.comparison_superior;
    if (sup[index(Comparison::mono_b_vs_soc)]) back_sup_seen_ = mono_sup_seen_ = true;
    if (sup[index(Comparison::mono_a_vs_soc)]) mono_sup_seen_ = true;

    const Verdict v = rec.decision.verdict;
    auto& c = result_.cohorts[id];
    c.analyses.push_back(std::move(rec));
    if (stage == Stage::interim) {
      c.has_interim = true;
      if (v == Verdict::go) {
        close(c, CohortStatus::stopped_interim_efficacy);
        record_success();
      } else if (v == Verdict::stop_futility) {
        close(c, CohortStatus::stopped_interim_futility);
      }
    } else {
      c.has_final = true;
      if (v == Verdict::go) {
        close(c, CohortStatus::completed_go);
        record_success();
      } else if (v == Verdict::stop_futility) {
        close(c, CohortStatus::completed_futility);
      } else {
        close(c, CohortStatus::completed_unsuccessful);
      }
    }
  }

  void record_success() {
    ++result_.successes;
    if (result_.first_success_index) return;
    result_.first_success_index = counter_;
    std::size_t soc = 0;
    for (const auto& c : result_.cohorts) soc += c.tally[index(Arm::soc)].n;
    result_.soc_patients_at_first_success = soc;
    result_.cohorts_at_first_success = result_.cohorts.size();
  }

  // Stops recruitment everywhere; enrolling cohorts are analysed on the data
  // they have.
  void halt() {
    bool any = false;
    for (std::size_t id = 0; id < result_.cohorts.size(); ++id) {
      auto& c = result_.cohorts[id];
      if (!c.enrolling()) continue;
      any = true;
      bool analysable = true;
      for (Arm a : kAllArms)
        if (c.arms[index(a)] && c.tally[index(a)].n == 0) analysable = false;
      if (analysable) {
        run_analysis(id, Stage::final, true);
      } else {
        close(c, CohortStatus::halted_recruitment);
      }
    }
    if (recruitment_open_ || any) {
      if (!result_.recruitment_halt_index) {
        result_.recruitment_halt_index = counter_;
        result_.events.push_back({"recruitment_halt", counter_, kUnlimited});
      }
    }
    recruitment_open_ = false;
  }

  const ScenarioSpec& spec_;
  RandomStream truth_rng_;
  RandomStream rng_;
  TrialResult result_;
  std::vector<std::size_t> transform_plan_;
  std::size_t counter_ = 0;
  std::size_t last_open_ = 0;
  bool entry_open_ = true;
  bool recruitment_open_ = true;
  bool mono_sup_seen_ = false;
  bool back_sup_seen_ = false;
};

// Simulates one trajectory; the scenario must have passed validation.
inline TrialResult simulate_trial(const ScenarioSpec& spec, RandomStream rng) {
  return TrialEngine(spec, rng).run();
}

inline ComparisonData assemble_analysis_data(const TrialResult& trial, const CohortState& cohort,
                                             SharingType mode, Stage stage) {
  return TrialEngine::assemble_analysis_data(trial.cohorts, cohort, mode, stage, trial.total_n);
}

}  // namespace cohortplat
