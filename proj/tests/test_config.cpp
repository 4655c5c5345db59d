#include <set>
#include <string>

#include <gtest/gtest.h>

#include "cohortplat/config.hpp"
#include "generators.hpp"

using namespace cohortplat;

namespace {

Json example_json() { return Json::parse(read_text_file(COHORTPLAT_CONFIGS "/bayes_example.json")); }

std::string error_field(const Json& j) {
  try {
    parse_scenario_json(j);
  } catch (const ConfigError& e) {
    return e.field() + ": " + e.constraint();
  }
  return "";
}

}  // namespace

TEST(ParseScenario, ExampleFields) {
  const auto s = load_scenario(COHORTPLAT_CONFIGS "/bayes_example.json");
  EXPECT_EQ(s.efficacy.comb, (DiscreteDist{{0.35, 0.40, 0.45}, {0.4, 0.4, 0.2}}));
  EXPECT_EQ(s.platform.n_int, 50u);
  EXPECT_EQ(s.platform.n_fin, 100u);
  EXPECT_EQ(s.platform.cohorts_max, 5u);
  EXPECT_EQ(s.platform.cohort_random, 0.02);
  EXPECT_EQ(s.platform.sr_drugs_pos, 1u);
  EXPECT_EQ(s.platform.sr_pats, kUnlimited);
  EXPECT_EQ(s.platform.safety_prob, 0.0001);
  EXPECT_EQ(s.platform.sharing_type, SharingType::cohort);
  EXPECT_EQ(s.target.margin_comb, 0.10);
  EXPECT_EQ(s.target.margin_mono, 0.05);
  EXPECT_EQ(s.target.scale, EffectScale::risk_difference);
  EXPECT_TRUE(s.platform.run_out_active_cohorts);
  EXPECT_EQ(s.platform.allocation_ratio, (AllocationRatio{2, 1, 1, 1}));
  const auto& sup = s.rules.interim[index(Comparison::mono_a_vs_soc)].bayes_sup;
  ASSERT_EQ(sup.size(), 1u);
  EXPECT_EQ(sup[0], (BayesSupRow{0.05, 0.80, 1.00}));
  EXPECT_TRUE(validate(s).ok());
  EXPECT_TRUE(validate(s).warnings.empty());
}

TEST(ParseScenario, AllocationPreset) {
  const auto s = load_scenario(COHORTPLAT_CONFIGS "/bayes_example_2211.json");
  EXPECT_EQ(s.platform.allocation_ratio, kAllocation2211);
}

TEST(ParseScenario, FrequentistExample) {
  const auto s = load_scenario(COHORTPLAT_CONFIGS "/freq_example.json");
  const auto& r = s.rules.final[index(Comparison::comb_vs_mono_a)];
  ASSERT_EQ(r.p_sup.size(), 1u);
  EXPECT_EQ(r.p_sup[0].p_adj, PAdjust::bonferroni_half);
}

TEST(ParseScenario, ProbsMustSumToOne) {
  auto j = example_json();
  j["efficacy"]["comb"] = {{"values", {0.3, 0.4}}, {"probs", {0.5, 0.6}}};
  const auto msg = error_field(j);
  EXPECT_NE(msg.find("efficacy.comb.probs"), std::string::npos) << msg;
  EXPECT_NE(msg.find("probs must sum to 1"), std::string::npos) << msg;
}

TEST(ParseScenario, InterimAboveFinal) {
  auto j = example_json();
  j["platform"]["n_int"] = 200;
  EXPECT_NE(error_field(j).find("platform.n_int"), std::string::npos);
}

TEST(ParseScenario, UnknownAndMissingKeys) {
  auto j = example_json();
  j["platform"]["n_intt"] = 5;
  EXPECT_EQ(error_field(j), "platform.n_intt: unknown key");
  j = example_json();
  j.erase("rules");
  EXPECT_EQ(error_field(j), "rules: missing required field");
  j = example_json();
  j["efficacy"]["comb"].erase("probs");
  EXPECT_NE(error_field(j).find("efficacy.comb.probs"), std::string::npos);
}

TEST(ParseScenario, TypeErrorsNameTheField) {
  auto j = example_json();
  j["platform"]["sharing_type"] = "pool";
  EXPECT_NE(error_field(j).find("platform.sharing_type"), std::string::npos);
  j = example_json();
  j["target"]["scale"] = 4;
  EXPECT_NE(error_field(j).find("target.scale"), std::string::npos);
  j = example_json();
  j["platform"]["allocation_ratio"] = "2:1:1";
  EXPECT_NE(error_field(j).find("platform.allocation_ratio"), std::string::npos);
  j = example_json();
  j["rules"]["final"]["comb_vs_mono_a"]["bayes_sup"] = {{0.1}};
  EXPECT_NE(error_field(j).find("rules.final.comb_vs_mono_a.bayes_sup"), std::string::npos);
}

TEST(ParseScenario, MalformedDocument) {
  try {
    parse_scenario("{\"id\": ");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "<document>");
  }
}

TEST(ParseScenario, SingleValueNeedsNoProbs) {
  auto j = example_json();
  j["efficacy"]["soc"] = {{"values", {0.1}}};
  EXPECT_EQ(parse_scenario_json(j).efficacy.soc, DiscreteDist::point(0.1));
}

TEST(ParseScenario, DefaultsWhenOmitted) {
  auto j = example_json();
  j.erase("endpoint");
  j.erase("prior");
  j["platform"].erase("sr_pats");
  const auto s = parse_scenario_json(j);
  EXPECT_EQ(s.endpoint.transforms.size(), 1u);
  EXPECT_EQ(s.endpoint.transforms[0].kind, OutcomeTransform::Kind::identity);
  EXPECT_EQ(s.prior, (BetaPrior{1.0, 1.0}));
  EXPECT_EQ(s.platform.sr_pats, kUnlimited);
  EXPECT_EQ(s.platform.cohorts_initial, 1u);
}

TEST(Validate, BadConfidenceIsOneViolation) {
  auto s = load_scenario(COHORTPLAT_CONFIGS "/bayes_example.json");
  s.rules.final[0].bayes_sup[0].confidence = 1.5;
  const auto r = validate(s);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].field, "rules.final.comb_vs_mono_a.bayes_sup[0].confidence");
}

TEST(Validate, OverlappingRulesWarnOnly) {
  auto s = load_scenario(COHORTPLAT_CONFIGS "/bayes_example.json");
  s.rules.final[0].bayes_sup = {{0.0, 0.5, 1.0}};
  s.rules.final[0].bayes_fut = {{0.0, 0.6}};
  const auto r = validate(s);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Validate, Pure) {
  gen::Gen g(51);
  for (int i = 0; i < 100; ++i) {
    auto s = g.scenario();
    if (g.coin()) s.platform.n_int = s.platform.n_fin + 1;
    if (g.coin()) s.prior.alpha = -1;
    const auto a = validate(s), b = validate(s);
    EXPECT_EQ(a.errors, b.errors);
    EXPECT_EQ(a.warnings, b.warnings);
  }
}

TEST(Serialize, RoundTripExample) {
  const auto s = load_scenario(COHORTPLAT_CONFIGS "/bayes_example.json");
  EXPECT_EQ(parse_scenario(serialize(s)), s);
}

TEST(Serialize, RoundTripRandomSpecs) {
  gen::Gen g(52);
  for (int i = 0; i < 500; ++i) {
    const auto s = g.scenario();
    ASSERT_TRUE(validate(s).ok()) << validate(s).describe();
    const auto text = serialize(s);
    ASSERT_EQ(parse_scenario(text), s) << text;
    EXPECT_EQ(serialize(parse_scenario(text)), text);
  }
}

TEST(Serialize, CustomTransformRefused) {
  auto s = load_scenario(COHORTPLAT_CONFIGS "/bayes_example.json");
  s.endpoint.transforms = {OutcomeTransform::custom("half", [](double rr) {
    return OutcomeProbs{1 - rr, 0, 0, rr};
  })};
  EXPECT_TRUE(validate(s).ok());
  EXPECT_THROW(serialize(s), ConfigError);
}

TEST(ExpandGrid, TwelveCells) {
  const auto base = load_scenario(COHORTPLAT_CONFIGS "/grid_base.json");
  const auto axes = parse_axes(read_text_file(COHORTPLAT_CONFIGS "/grid_axes.json"));
  const auto cells = expand_grid(base, axes);
  ASSERT_EQ(cells.size(), 12u);
  const double cr[] = {0.01, 0.02, 0.03};
  const std::size_t ni[] = {50, 100, 150, 200};
  std::set<std::string> ids;
  for (std::size_t k = 0; k < 12; ++k) {
    const auto& s = cells[k].spec;
    EXPECT_EQ(s.platform.cohort_random, cr[k / 4]);
    EXPECT_EQ(s.platform.n_int, ni[k % 4]);
    EXPECT_EQ(cells[k].assignment[0].second.get<double>(), cr[k / 4]);
    ids.insert(s.id);
    auto restored = s;
    restored.platform.cohort_random = base.platform.cohort_random;
    restored.platform.n_int = base.platform.n_int;
    restored.id = base.id;
    EXPECT_EQ(restored, base);
  }
  EXPECT_EQ(ids.size(), 12u);
}

TEST(ExpandGrid, EmptyAxesIsBase) {
  const auto base = load_scenario(COHORTPLAT_CONFIGS "/grid_base.json");
  const auto cells = expand_grid(base, {});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].spec, base);
}

TEST(ExpandGrid, ProductCardinality) {
  const auto base = load_scenario(COHORTPLAT_CONFIGS "/grid_base.json");
  const auto cells = expand_grid(base, parse_axes(R"({"platform.sharing_type": ["cohort", "all"],
                                                      "target.margin_comb": [0.05, 0.1, 0.15]})"));
  ASSERT_EQ(cells.size(), 6u);
  std::set<std::pair<SharingType, double>> pairs;
  for (const auto& c : cells) pairs.insert({c.spec.platform.sharing_type, c.spec.target.margin_comb});
  EXPECT_EQ(pairs.size(), 6u);
  EXPECT_EQ(cells[1].spec.id, base.id + "[platform.sharing_type=cohort,target.margin_comb=0.1]");
}

TEST(ExpandGrid, Errors) {
  const auto base = load_scenario(COHORTPLAT_CONFIGS "/grid_base.json");
  EXPECT_THROW(expand_grid(base, parse_axes(R"({"no_such_field": [1]})")), ConfigError);
  EXPECT_THROW(expand_grid(base, parse_axes(R"({"platform.nope": [1]})")), ConfigError);
  EXPECT_THROW(expand_grid(base, parse_axes(R"({"n_int": [500]})")), ConfigError);
  EXPECT_THROW(parse_axes("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_axes(R"({"n_int": []})"), ConfigError);
}
