#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "cohortplat/config.hpp"
#include "cohortplat/trajectory.hpp"
#include "cohortplat/trial.hpp"
#include "generators.hpp"

using namespace cohortplat;

namespace {

ScenarioSpec example_spec() { return load_scenario(COHORTPLAT_CONFIGS "/bayes_example.json"); }

bool terminal(CohortStatus s) { return s != CohortStatus::enrolling; }

bool is_go(CohortStatus s) {
  return s == CohortStatus::stopped_interim_efficacy || s == CohortStatus::completed_go;
}

void check_invariants(const ScenarioSpec& spec, const TrialResult& r) {
  const auto& pf = spec.platform;
  std::size_t ledger_total = 0, successes = 0;
  ASSERT_LE(r.cohorts.size(), pf.cohorts_max);
  ASSERT_GE(r.cohorts.size(), pf.cohorts_initial);
  for (const auto& c : r.cohorts) {
    EXPECT_TRUE(terminal(c.status)) << "cohort " << c.id;
    if (is_go(c.status)) ++successes;
    const std::size_t block = block_size(c.arms, pf.allocation_ratio);
    for (Arm a : kAllArms) {
      const auto& led = c.ledger[index(a)];
      EXPECT_EQ(led.size(), c.tally[index(a)].n);
      if (!c.arms[index(a)]) EXPECT_TRUE(led.empty());
      ledger_total += led.size();
      for (std::size_t k = 0; k < led.size(); ++k) {
        EXPECT_GT(led[k].enrollment_index, c.open_index);
        if (c.close_index) EXPECT_LE(led[k].enrollment_index, *c.close_index);
        if (k) EXPECT_GT(led[k].enrollment_index, led[k - 1].enrollment_index);
      }
    }
    std::size_t n_interim = 0, n_final = 0;
    std::size_t prev_size = 0;
    for (const auto& rec : c.analyses) {
      EXPECT_GE(rec.cohort_size, prev_size);
      prev_size = rec.cohort_size;
      if (rec.stage == Stage::interim) {
        ++n_interim;
        EXPECT_GE(rec.cohort_size, pf.n_int);
        EXPECT_LT(rec.cohort_size, pf.n_int + block);
        EXPECT_LT(pf.n_int, pf.n_fin);
      } else {
        ++n_final;
        if (!rec.halted) {
          EXPECT_GE(rec.cohort_size, pf.n_fin);
          EXPECT_LT(rec.cohort_size, pf.n_fin + block);
        } else {
          EXPECT_TRUE(r.recruitment_halt_index.has_value());
        }
      }
    }
    EXPECT_LE(n_interim, 1u);
    EXPECT_LE(n_final, 1u);
    if (c.status == CohortStatus::halted_recruitment) EXPECT_TRUE(r.recruitment_halt_index.has_value());
    if (c.status == CohortStatus::stopped_safety) EXPECT_GT(pf.safety_prob, 0.0);
    const auto conf = classify_decision(c);
    if (conf) {
      const bool positive = is_go(c.status);
      const bool sup = c.truth_class == TruthClass::superior;
      EXPECT_EQ(*conf, positive ? (sup ? Confusion::tp : Confusion::fp) : (sup ? Confusion::fn : Confusion::tn));
    }
    EXPECT_EQ(c.truth_class, classify_truth(c.truth, spec.target, c.arms));
    if (pf.sr_first_pos && r.first_success_index) EXPECT_LE(c.open_index, *r.first_success_index);
    if (pf.trial_struc == TrialStructure::no_plac) EXPECT_FALSE(c.arms[index(Arm::soc)]);
    if (pf.trial_struc == TrialStructure::all_plac)
      EXPECT_EQ(c.arms[index(Arm::soc)], pf.allocation_ratio[index(Arm::soc)] > 0);
  }
  EXPECT_EQ(r.total_n, ledger_total);
  EXPECT_EQ(r.successes, successes);
  EXPECT_EQ(r.planned_truths.size(), pf.cohorts_max);
}

CohortState make_cohort(std::size_t id, ArmPresence arms, std::size_t open_index) {
  CohortState c;
  c.id = id;
  c.arms = arms;
  c.open_index = open_index;
  return c;
}

void enroll(CohortState& c, Arm a, std::size_t counter, bool outcome) {
  c.ledger[index(a)].push_back({counter, outcome, outcome});
  c.tally[index(a)].add(outcome, outcome);
}

}  // namespace

TEST(AllocateBlock, WorkedExample) {
  RandomStream rng(1);
  const auto block = allocate_block(kAllArmsPresent, kAllocation2211, rng);
  ASSERT_EQ(block.size(), 6u);
  EXPECT_EQ(std::count(block.begin(), block.end(), Arm::comb), 2);
  EXPECT_EQ(std::count(block.begin(), block.end(), Arm::mono_a), 2);
  EXPECT_EQ(std::count(block.begin(), block.end(), Arm::mono_b), 1);
  EXPECT_EQ(std::count(block.begin(), block.end(), Arm::soc), 1);
}

TEST(AllocateBlock, AbsentArmRestricted) {
  RandomStream rng(2);
  const auto block = allocate_block({true, true, true, false}, kAllocation2211, rng);
  ASSERT_EQ(block.size(), 5u);
  EXPECT_EQ(std::count(block.begin(), block.end(), Arm::soc), 0);
}

TEST(AllocateBlock, ExactTotalsAndRandomOrder) {
  RandomStream rng(3);
  std::array<std::size_t, kNumArms> totals{};
  std::array<std::size_t, 6> first_is_soc{};
  for (int i = 0; i < 1000; ++i) {
    const auto block = allocate_block(kAllArmsPresent, kAllocation2211, rng);
    for (std::size_t k = 0; k < block.size(); ++k) {
      ++totals[index(block[k])];
      if (block[k] == Arm::soc) ++first_is_soc[k];
    }
  }
  EXPECT_EQ(totals, (std::array<std::size_t, kNumArms>{2000, 2000, 1000, 1000}));
  // SoC position uniform over 6 slots: expected 166.7 each, sd about 11.8
  for (auto n : first_is_soc) EXPECT_NEAR(static_cast<double>(n), 1000.0 / 6.0, 50.0);
}

TEST(GenOutcomePair, IdentityMeansEqualEndpoints) {
  RandomStream rng(4);
  for (int i = 0; i < 10000; ++i) {
    const auto p = gen_outcome_pair(0.37, OutcomeTransform::identity(), rng);
    EXPECT_EQ(p.interim, p.final_outcome);
  }
}

TEST(GenOutcomePair, ZeroRateNeverResponds) {
  RandomStream rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto p = gen_outcome_pair(0.0, OutcomeTransform::identity(), rng);
    EXPECT_FALSE(p.interim);
    EXPECT_FALSE(p.final_outcome);
  }
}

TEST(GenOutcomePair, FinalRateWithinThreeSigma) {
  for (const auto& t : {OutcomeTransform::identity(), OutcomeTransform::correlated(0.8, 0.9)}) {
    RandomStream rng(6);
    const double rr = 0.3;
    const int n = 100000;
    int hits = 0, interim = 0;
    for (int i = 0; i < n; ++i) {
      const auto p = gen_outcome_pair(rr, t, rng);
      hits += p.final_outcome;
      interim += p.interim;
    }
    EXPECT_NEAR(hits, n * rr, 3 * std::sqrt(n * rr * (1 - rr)));
    const double pi = t.sensitivity * rr + (1 - t.specificity) * (1 - rr);
    EXPECT_NEAR(interim, n * pi, 3 * std::sqrt(n * pi * (1 - pi)));
  }
}

TEST(CorrelatedTransform, KeepsFinalMarginal) {
  gen::Gen g(41);
  for (int i = 0; i < 500; ++i) {
    const auto t = OutcomeTransform::correlated(g.real(0, 1), g.real(0, 1));
    const double rr = g.real(0, 1);
    const auto p = t(rr);
    EXPECT_NEAR(p[1] + p[3], rr, 1e-15);
    EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-15);
    for (double x : p) EXPECT_GE(x, -1e-15);
  }
}

TEST(DynamicWeight, HomogeneityContract) {
  EXPECT_DOUBLE_EQ(dynamic_borrowing_weight({20, 100}, {20, 100}), 1.0);
  EXPECT_LT(dynamic_borrowing_weight({20, 200}, {180, 200}), 0.05);
  EXPECT_EQ(dynamic_borrowing_weight({0, 0}, {5, 10}), 0.0);
  // weight shrinks as the external rate moves away
  double prev = 1.0;
  for (double ext = 20; ext <= 60; ext += 5) {
    const double w = dynamic_borrowing_weight({20, 100}, {ext, 100});
    EXPECT_LE(w, prev + 1e-15);
    prev = w;
  }
}

TEST(Sharing, CohortModeIsOwnData) {
  const auto spec = example_spec();
  const auto r = simulate_trial(spec, RandomStream(11));
  for (const auto& c : r.cohorts) {
    const auto data = assemble_analysis_data(r, c, SharingType::cohort, Stage::final);
    for (Comparison cmp : kAllComparisons) {
      const auto& num = c.tally[index(numerator_arm(cmp))];
      const auto& den = c.tally[index(comparator_arm(cmp))];
      const auto& t = data[index(cmp)].table;
      EXPECT_EQ(t.t_resp, static_cast<double>(num.responders_final()));
      EXPECT_EQ(t.n_t(), static_cast<double>(num.n));
      EXPECT_EQ(t.c_resp, static_cast<double>(den.responders_final()));
      EXPECT_EQ(t.n_c(), static_cast<double>(den.n));
    }
  }
}

TEST(Sharing, AllAndConcurrentPoolComparatorCells) {
  std::vector<CohortState> cohorts{make_cohort(0, kAllArmsPresent, 0), make_cohort(1, kAllArmsPresent, 4)};
  // cohort 0: SoC patients at 1..6, three responders; cohort 1 opens at 4
  for (std::size_t k = 1; k <= 6; ++k) enroll(cohorts[0], Arm::soc, k, k <= 3);
  for (std::size_t k = 1; k <= 6; ++k) enroll(cohorts[0], Arm::mono_b, k, k % 2 == 0);
  for (std::size_t k = 7; k <= 9; ++k) enroll(cohorts[1], Arm::soc, k, true);
  for (std::size_t k = 7; k <= 9; ++k) enroll(cohorts[1], Arm::mono_b, k, false);
  for (std::size_t k = 7; k <= 9; ++k) enroll(cohorts[1], Arm::mono_a, k, true);
  for (std::size_t k = 7; k <= 9; ++k) enroll(cohorts[1], Arm::comb, k, true);

  const auto& c1 = cohorts[1];
  const auto own = TrialEngine::assemble_analysis_data(cohorts, c1, SharingType::cohort, Stage::final, 9);
  EXPECT_EQ(own[index(Comparison::mono_a_vs_soc)].table, (TwoByTwo{3, 0, 3, 0}));

  AnalysisRecord rec;
  const auto all = TrialEngine::assemble_analysis_data(cohorts, c1, SharingType::all, Stage::final, 9, &rec);
  // SoC pooled: own 3/3 plus external 3/6
  EXPECT_EQ(all[index(Comparison::mono_a_vs_soc)].table, (TwoByTwo{3, 0, 6, 3}));
  EXPECT_EQ(all[index(Comparison::mono_b_vs_soc)].table, (TwoByTwo{0, 3, 6, 3}));
  // monoB as comparator pooled: own 0/3 plus external 3/6
  EXPECT_EQ(all[index(Comparison::comb_vs_mono_b)].table, (TwoByTwo{3, 0, 3, 6}));
  // monoA is never shared
  EXPECT_EQ(all[index(Comparison::comb_vs_mono_a)].table, (TwoByTwo{3, 0, 3, 0}));
  EXPECT_EQ(rec.external_n[index(Arm::soc)], 6.0);
  EXPECT_EQ(rec.sharing_weight[index(Arm::soc)], 1.0);

  // concurrent: only external patients enrolled at or after cohort 1 opened (4, 5, 6)
  const auto conc = TrialEngine::assemble_analysis_data(cohorts, c1, SharingType::concurrent, Stage::final, 9);
  EXPECT_EQ(conc[index(Comparison::mono_a_vs_soc)].table, (TwoByTwo{3, 0, 3, 3}));

  // dynamic: weight from the homogeneity test, counts scaled
  AnalysisRecord drec;
  const auto dyn = TrialEngine::assemble_analysis_data(cohorts, c1, SharingType::dynamic, Stage::final, 9, &drec);
  const double w = dynamic_borrowing_weight({3, 3}, {3, 6});
  EXPECT_DOUBLE_EQ(drec.sharing_weight[index(Arm::soc)], w);
  const auto& t = dyn[index(Comparison::mono_a_vs_soc)].table;
  EXPECT_DOUBLE_EQ(t.c_resp, 3 + 3 * w);
  EXPECT_DOUBLE_EQ(t.n_c(), 3 + 6 * w);
}

TEST(Sharing, IdenticalExternalDataHasFullWeight) {
  std::vector<CohortState> cohorts{make_cohort(0, kAllArmsPresent, 0), make_cohort(1, kAllArmsPresent, 0)};
  for (std::size_t k = 1; k <= 20; ++k) {
    enroll(cohorts[0], Arm::soc, 2 * k - 1, k % 4 == 0);
    enroll(cohorts[1], Arm::soc, 2 * k, k % 4 == 0);
  }
  AnalysisRecord rec;
  TrialEngine::assemble_analysis_data(cohorts, cohorts[1], SharingType::dynamic, Stage::final, 40, &rec);
  EXPECT_DOUBLE_EQ(rec.sharing_weight[index(Arm::soc)], 1.0);
}

TEST(SimulateTrial, ExampleSpecInvariants) {
  const auto spec = example_spec();
  for (std::uint64_t s = 0; s < 200; ++s) check_invariants(spec, simulate_trial(spec, RandomStream::derive(9, 0, s)));
}

TEST(SimulateTrial, RandomSpecInvariants) {
  gen::Gen g(42);
  for (int i = 0; i < 300; ++i) {
    const auto spec = g.scenario();
    ASSERT_TRUE(validate(spec).ok()) << validate(spec).describe();
    SCOPED_TRACE("spec " + std::to_string(i));
    check_invariants(spec, simulate_trial(spec, RandomStream(static_cast<std::uint64_t>(i))));
  }
}

TEST(SimulateTrial, SingleSuccessClosesEntry) {
  auto spec = example_spec();
  spec.platform.cohort_random = 0.2;
  spec.platform.safety_prob = 0.0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    if (!r.first_success_index) continue;
    for (const auto& c : r.cohorts) EXPECT_LE(c.open_index, *r.first_success_index);
    ASSERT_TRUE(r.entry_closed_index.has_value());
  }
}

TEST(SimulateTrial, RunOutFalseHaltsOthers) {
  auto spec = example_spec();
  spec.platform.cohort_random = 0.2;
  spec.platform.run_out_active_cohorts = false;
  std::size_t seen = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    if (!r.entry_closed_index) continue;
    ++seen;
    EXPECT_EQ(r.total_n, *r.entry_closed_index);
  }
  EXPECT_GT(seen, 0u);
}

TEST(SimulateTrial, ZeroEntryProbabilityKeepsOneCohort) {
  auto spec = example_spec();
  spec.platform.cohort_random = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(simulate_trial(spec, RandomStream(s)).cohorts.size(), 1u);
}

TEST(SimulateTrial, EqualSizesGiveOneFinalAnalysis) {
  auto spec = example_spec();
  spec.platform.n_int = spec.platform.n_fin = 60;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    for (const auto& c : r.cohorts) {
      if (c.status == CohortStatus::stopped_safety) continue;
      ASSERT_EQ(c.analyses.size(), 1u);
      EXPECT_EQ(c.analyses[0].stage, Stage::final);
    }
  }
}

TEST(SimulateTrial, SafetyProbabilityExtremes) {
  auto spec = example_spec();
  spec.platform.cohort_random = 0.3;
  spec.platform.safety_prob = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (const auto& c : simulate_trial(spec, RandomStream(s)).cohorts)
      EXPECT_NE(c.status, CohortStatus::stopped_safety);
  spec.platform.safety_prob = 1.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    for (const auto& c : r.cohorts) {
      EXPECT_EQ(c.status, CohortStatus::stopped_safety);
      EXPECT_EQ(c.size(), 1u);
    }
  }
}

TEST(SimulateTrial, PatientCapHaltsRecruitment) {
  auto spec = example_spec();
  spec.platform.sr_pats = 37;
  spec.platform.safety_prob = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    EXPECT_LE(r.total_n, 37u);
    if (r.total_n == 37u) {
      ASSERT_TRUE(r.recruitment_halt_index.has_value());
      for (const auto& c : r.cohorts)
        EXPECT_TRUE(c.status == CohortStatus::halted_recruitment ||
                    (!c.analyses.empty() && c.analyses.back().halted));
    }
  }
}

TEST(SimulateTrial, FirstSuccessStopsEntry) {
  auto spec = example_spec();
  spec.platform.sr_first_pos = true;
  spec.platform.sr_drugs_pos = kUnlimited;
  spec.platform.cohort_random = 0.1;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    if (r.first_success_index)
      for (const auto& c : r.cohorts) EXPECT_LE(c.open_index, *r.first_success_index);
  }
}

TEST(SimulateTrial, NoPlaceboStructure) {
  auto spec = example_spec();
  spec.platform.trial_struc = TrialStructure::no_plac;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    for (const auto& c : r.cohorts) {
      EXPECT_FALSE(c.arms[index(Arm::soc)]);
      EXPECT_EQ(c.tally[index(Arm::soc)].n, 0u);
    }
  }
}

TEST(SimulateTrial, StopPostMonoDropsSocAfterMonoSuccess) {
  auto spec = example_spec();
  spec.platform.trial_struc = TrialStructure::stop_post_mono;
  spec.platform.cohort_random = 0.1;
  spec.platform.sr_drugs_pos = kUnlimited;
  std::size_t dropped = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = simulate_trial(spec, RandomStream(s));
    for (const auto& c : r.cohorts) {
      if (c.arms[index(Arm::soc)]) continue;
      ++dropped;
      bool earlier = false;
      for (const auto& o : r.cohorts)
        for (const auto& rec : o.analyses)
          if (rec.patient_counter <= c.open_index &&
              (rec.decision.comparison_superior[index(Comparison::mono_a_vs_soc)] ||
               rec.decision.comparison_superior[index(Comparison::mono_b_vs_soc)]))
            earlier = true;
      EXPECT_TRUE(earlier);
    }
  }
  EXPECT_GT(dropped, 0u);
}

TEST(SimulateTrial, Deterministic) {
  const auto spec = example_spec();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = simulate_trial(spec, RandomStream::derive(1, 0, s));
    const auto b = simulate_trial(spec, RandomStream::derive(1, 0, s));
    EXPECT_EQ(dump_trajectory(a), dump_trajectory(b));
  }
}

TEST(RandomStream, DeriveSeparatesCells) {
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
  EXPECT_EQ(derive_seed(5, 6, 7), derive_seed(5, 6, 7));
}

TEST(RandomStream, BelowIsUniform) {
  RandomStream rng(8);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 3 * std::sqrt(n * (1 / 7.0) * (6 / 7.0)) + 1);
}
