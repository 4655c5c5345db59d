#pragma once

// Scenario description: design, efficacy assumptions, decision rules and
// platform stopping rules for one simulation setting.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace cohortplat {

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Arm : std::size_t { comb = 0, mono_a = 1, mono_b = 2, soc = 3 };
inline constexpr std::size_t kNumArms = 4;
inline constexpr std::array<Arm, kNumArms> kAllArms{Arm::comb, Arm::mono_a, Arm::mono_b, Arm::soc};

constexpr std::size_t index(Arm a) noexcept { return static_cast<std::size_t>(a); }

constexpr std::string_view arm_name(Arm a) noexcept {
  switch (a) {
    case Arm::comb: return "comb";
    case Arm::mono_a: return "mono_a";
    case Arm::mono_b: return "mono_b";
    case Arm::soc: return "soc";
  }
  return "?";
}

// The four pairwise comparisons in fixed order.
enum class Comparison : std::size_t {
  comb_vs_mono_a = 0,
  comb_vs_mono_b = 1,
  mono_a_vs_soc = 2,
  mono_b_vs_soc = 3,
};
inline constexpr std::size_t kNumComparisons = 4;
inline constexpr std::array<Comparison, kNumComparisons> kAllComparisons{
    Comparison::comb_vs_mono_a, Comparison::comb_vs_mono_b, Comparison::mono_a_vs_soc,
    Comparison::mono_b_vs_soc};

constexpr std::size_t index(Comparison c) noexcept { return static_cast<std::size_t>(c); }

constexpr Arm numerator_arm(Comparison c) noexcept {
  switch (c) {
    case Comparison::comb_vs_mono_a:
    case Comparison::comb_vs_mono_b: return Arm::comb;
    case Comparison::mono_a_vs_soc: return Arm::mono_a;
    case Comparison::mono_b_vs_soc: return Arm::mono_b;
  }
  return Arm::comb;
}

constexpr Arm comparator_arm(Comparison c) noexcept {
  switch (c) {
    case Comparison::comb_vs_mono_a: return Arm::mono_a;
    case Comparison::comb_vs_mono_b: return Arm::mono_b;
    case Comparison::mono_a_vs_soc:
    case Comparison::mono_b_vs_soc: return Arm::soc;
  }
  return Arm::soc;
}

constexpr std::string_view comparison_name(Comparison c) noexcept {
  switch (c) {
    case Comparison::comb_vs_mono_a: return "comb_vs_mono_a";
    case Comparison::comb_vs_mono_b: return "comb_vs_mono_b";
    case Comparison::mono_a_vs_soc: return "mono_a_vs_soc";
    case Comparison::mono_b_vs_soc: return "mono_b_vs_soc";
  }
  return "?";
}

enum class Stage { interim = 0, final = 1 };

constexpr std::string_view stage_name(Stage s) noexcept {
  return s == Stage::interim ? "interim" : "final";
}

// ---------------------------------------------------------------------------
// Efficacy assumptions

struct DiscreteDist {
  std::vector<double> values;
  std::vector<double> probs;

  static DiscreteDist point(double v) { return {{v}, {1.0}}; }

  friend bool operator==(const DiscreteDist&, const DiscreteDist&) = default;
};

// Scale on which relative effects compose with a base rate.
enum class EffectScale { risk_difference = 1, risk_ratio = 2, odds_ratio = 3 };

enum class RandomType { absolute, risk_difference, risk_ratio, odds_ratio };

struct EfficacySpec {
  // When false, the first support point of every distribution is used
  // without drawing.
  bool random = true;
  RandomType random_type = RandomType::absolute;
  DiscreteDist comb = DiscreteDist::point(0.4);
  DiscreteDist mono_a = DiscreteDist::point(0.2);
  DiscreteDist mono_b = DiscreteDist::point(0.2);
  DiscreteDist soc = DiscreteDist::point(0.1);

  friend bool operator==(const EfficacySpec&, const EfficacySpec&) = default;
};

// ---------------------------------------------------------------------------
// Endpoint model

// Joint (interim, final) outcome probabilities in the order
// (0/0, 0/1, 1/0, 1/1).
using OutcomeProbs = std::array<double, 4>;

struct OutcomeTransform {
  enum class Kind { identity, correlated, custom };

  Kind kind = Kind::identity;
  // correlated only: P(interim = 1 | final = 1) and P(interim = 0 | final = 0)
  double sensitivity = 1.0;
  double specificity = 1.0;
  // custom only; not representable in config files
  std::function<OutcomeProbs(double)> fn;
  std::string name;

  static OutcomeTransform identity() { return {}; }

  static OutcomeTransform correlated(double sens, double spec) {
    OutcomeTransform t;
    t.kind = Kind::correlated;
    t.sensitivity = sens;
    t.specificity = spec;
    return t;
  }

  static OutcomeTransform custom(std::string name, std::function<OutcomeProbs(double)> fn) {
    OutcomeTransform t;
    t.kind = Kind::custom;
    t.name = std::move(name);
    t.fn = std::move(fn);
    return t;
  }

  OutcomeProbs operator()(double rr) const {
    switch (kind) {
      case Kind::identity: return {1.0 - rr, 0.0, 0.0, rr};
      case Kind::correlated: {
        const double p11 = sensitivity * rr;
        const double p10 = (1.0 - specificity) * (1.0 - rr);
        return {(1.0 - rr) - p10, rr - p11, p10, p11};
      }
      case Kind::custom: return fn(rr);
    }
    return {1.0 - rr, 0.0, 0.0, rr};
  }

  friend bool operator==(const OutcomeTransform& a, const OutcomeTransform& b) {
    return a.kind == b.kind && a.sensitivity == b.sensitivity &&
           a.specificity == b.specificity && a.name == b.name;
  }
};

struct EndpointModel {
  std::vector<OutcomeTransform> transforms{OutcomeTransform::identity()};
  std::vector<double> probs{1.0};

  friend bool operator==(const EndpointModel&, const EndpointModel&) = default;
};

// ---------------------------------------------------------------------------
// Target product profile

struct TargetProfile {
  double margin_comb = 0.10;
  double margin_mono = 0.05;
  EffectScale scale = EffectScale::risk_difference;
  // Margins must be exceeded strictly when true, met when false.
  bool strict = true;

  friend bool operator==(const TargetProfile&, const TargetProfile&) = default;
};

// ---------------------------------------------------------------------------
// Platform rules

enum class TrialStructure { all_plac, no_plac, stop_post_back, stop_post_mono };
enum class SharingType { cohort, concurrent, dynamic, all };

using AllocationRatio = std::array<unsigned, kNumArms>;

struct PlatformRules {
  std::size_t cohorts_max = 5;
  std::size_t cohorts_initial = 1;
  double cohort_random = 0.02;
  std::size_t cohort_offset = 0;
  double safety_prob = 0.0;
  std::size_t sr_drugs_pos = kUnlimited;
  std::size_t sr_pats = kUnlimited;
  bool sr_first_pos = false;
  TrialStructure trial_struc = TrialStructure::all_plac;
  SharingType sharing_type = SharingType::cohort;
  std::size_t n_int = 50;
  std::size_t n_fin = 100;
  AllocationRatio allocation_ratio{2, 1, 1, 1};
  bool run_out_active_cohorts = true;

  friend bool operator==(const PlatformRules&, const PlatformRules&) = default;
};

inline constexpr AllocationRatio kAllocation2211{2, 2, 1, 1};

// ---------------------------------------------------------------------------
// Decision rules

struct BayesSupRow {
  double margin;
  double confidence;
  double promising;
  friend bool operator==(const BayesSupRow&, const BayesSupRow&) = default;
};

struct BayesFutRow {
  double margin;
  double confidence;
  friend bool operator==(const BayesFutRow&, const BayesFutRow&) = default;
};

struct SingleArmSupRow {
  double value;
  double confidence;
  double promising;
  friend bool operator==(const SingleArmSupRow&, const SingleArmSupRow&) = default;
};

struct SingleArmFutRow {
  double value;
  double confidence;
  friend bool operator==(const SingleArmFutRow&, const SingleArmFutRow&) = default;
};

enum class PAdjust { none, bonferroni_half };

// One-sided two-proportion test (treatment rate > comparator rate).
struct PropTestSpec {
  bool continuity_correction = false;
  friend bool operator==(const PropTestSpec&, const PropTestSpec&) = default;
};

struct FreqSupRule {
  PropTestSpec test;
  double p_sup;
  double p_prom;
  PAdjust p_adj = PAdjust::none;
  friend bool operator==(const FreqSupRule&, const FreqSupRule&) = default;
};

struct FreqFutRule {
  PropTestSpec test;
  double p_fut;
  PAdjust p_adj = PAdjust::none;
  friend bool operator==(const FreqFutRule&, const FreqFutRule&) = default;
};

enum class EstimateKind { AR, RR, OR };

constexpr std::string_view estimate_name(EstimateKind k) noexcept {
  switch (k) {
    case EstimateKind::AR: return "AR";
    case EstimateKind::RR: return "RR";
    case EstimateKind::OR: return "OR";
  }
  return "?";
}

struct EstSupFutRule {
  EstimateKind kind = EstimateKind::RR;  // RR or OR
  double p_hat_sup;
  double p_hat_fut;
  double p_hat_prom = kInf;
  friend bool operator==(const EstSupFutRule&, const EstSupFutRule&) = default;
};

// Threshold names follow the package parameters: GO when the upper bound
// reaches `lower_sup`, STOP when the lower bound falls to `upper_fut`.
struct CISupFutRule {
  EstimateKind kind = EstimateKind::RR;
  double level = 0.95;
  double lower_sup;
  double upper_fut;
  double lower_prom = kInf;
  friend bool operator==(const CISupFutRule&, const CISupFutRule&) = default;
};

struct ComparisonRules {
  std::vector<BayesSupRow> bayes_sup;
  std::vector<BayesFutRow> bayes_fut;
  std::vector<SingleArmSupRow> bayes_sa_sup;
  std::vector<SingleArmFutRow> bayes_sa_fut;
  std::vector<FreqSupRule> p_sup;
  std::vector<FreqFutRule> p_fut;
  std::vector<EstSupFutRule> est;
  std::vector<CISupFutRule> ci;

  bool empty() const noexcept {
    return bayes_sup.empty() && bayes_fut.empty() && bayes_sa_sup.empty() &&
           bayes_sa_fut.empty() && p_sup.empty() && p_fut.empty() && est.empty() && ci.empty();
  }

  bool has_superiority() const noexcept {
    return !bayes_sup.empty() || !bayes_sa_sup.empty() || !p_sup.empty() || !est.empty() ||
           !ci.empty();
  }

  friend bool operator==(const ComparisonRules&, const ComparisonRules&) = default;
};

using StageRules = std::array<ComparisonRules, kNumComparisons>;

struct DecisionRuleSet {
  StageRules interim;
  StageRules final;

  const StageRules& at(Stage s) const noexcept { return s == Stage::interim ? interim : final; }
  StageRules& at(Stage s) noexcept { return s == Stage::interim ? interim : final; }

  friend bool operator==(const DecisionRuleSet&, const DecisionRuleSet&) = default;
};

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
  friend bool operator==(const BetaPrior&, const BetaPrior&) = default;
};

struct ScenarioSpec {
  std::string id = "scenario";
  EfficacySpec efficacy;
  EndpointModel endpoint;
  DecisionRuleSet rules;
  TargetProfile target;
  PlatformRules platform;
  BetaPrior prior;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Issue {
  std::string field;
  std::string message;
  friend bool operator==(const Issue&, const Issue&) = default;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const noexcept { return errors.empty(); }

  std::string describe() const {
    std::string out;
    for (const auto& e : errors) out += "error: " + e.field + ": " + e.message + "\n";
    for (const auto& w : warnings) out += "warning: " + w.field + ": " + w.message + "\n";
    return out;
  }
};

namespace detail {

inline bool is_prob(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

inline std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  std::string s = std::to_string(x);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline void check_dist(const DiscreteDist& d, const std::string& path, ValidationReport& r) {
  if (d.values.empty()) r.errors.push_back({path + ".values", "must not be empty"});
  if (d.values.size() != d.probs.size()) {
    r.errors.push_back({path + ".probs", "must have the same length as values"});
    return;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    if (!std::isfinite(d.probs[i]) || d.probs[i] < 0.0)
      r.errors.push_back({path + ".probs[" + std::to_string(i) + "]", "must be >= 0"});
    if (!std::isfinite(d.values[i]))
      r.errors.push_back({path + ".values[" + std::to_string(i) + "]", "must be finite"});
    sum += d.probs[i];
  }
  if (!d.probs.empty() && std::abs(sum - 1.0) > 1e-9)
    r.errors.push_back({path + ".probs", "probs must sum to 1 (got " + num(sum) + ")"});
}

inline void check_values(const DiscreteDist& d, const std::string& path, bool probability,
                         ValidationReport& r) {
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    const double v = d.values[i];
    if (probability && !is_prob(v))
      r.errors.push_back({path + ".values[" + std::to_string(i) + "]", "must lie in [0, 1]"});
    if (!probability && !(v > 0.0))
      r.errors.push_back({path + ".values[" + std::to_string(i) + "]", "ratio must be > 0"});
  }
}

inline void check_conf(double c, const std::string& path, ValidationReport& r) {
  if (!is_prob(c)) r.errors.push_back({path, "must lie in [0, 1]"});
}

inline void check_rules(const ComparisonRules& c, const std::string& p, ValidationReport& r) {
  for (std::size_t i = 0; i < c.bayes_sup.size(); ++i) {
    const auto q = p + ".bayes_sup[" + std::to_string(i) + "]";
    if (!std::isfinite(c.bayes_sup[i].margin)) r.errors.push_back({q + ".margin", "must be finite"});
    check_conf(c.bayes_sup[i].confidence, q + ".confidence", r);
    check_conf(c.bayes_sup[i].promising, q + ".promising", r);
  }
  for (std::size_t i = 0; i < c.bayes_fut.size(); ++i) {
    const auto q = p + ".bayes_fut[" + std::to_string(i) + "]";
    if (!std::isfinite(c.bayes_fut[i].margin)) r.errors.push_back({q + ".margin", "must be finite"});
    check_conf(c.bayes_fut[i].confidence, q + ".confidence", r);
  }
  for (std::size_t i = 0; i < c.bayes_sa_sup.size(); ++i) {
    const auto q = p + ".bayes_sa_sup[" + std::to_string(i) + "]";
    check_conf(c.bayes_sa_sup[i].value, q + ".value", r);
    check_conf(c.bayes_sa_sup[i].confidence, q + ".confidence", r);
    check_conf(c.bayes_sa_sup[i].promising, q + ".promising", r);
  }
  for (std::size_t i = 0; i < c.bayes_sa_fut.size(); ++i) {
    const auto q = p + ".bayes_sa_fut[" + std::to_string(i) + "]";
    check_conf(c.bayes_sa_fut[i].value, q + ".value", r);
    check_conf(c.bayes_sa_fut[i].confidence, q + ".confidence", r);
  }
  for (std::size_t i = 0; i < c.p_sup.size(); ++i) {
    const auto q = p + ".p_sup[" + std::to_string(i) + "]";
    check_conf(c.p_sup[i].p_sup, q + ".p_sup", r);
    check_conf(c.p_sup[i].p_prom, q + ".p_prom", r);
  }
  for (std::size_t i = 0; i < c.p_fut.size(); ++i)
    check_conf(c.p_fut[i].p_fut, p + ".p_fut[" + std::to_string(i) + "].p_fut", r);
  for (std::size_t i = 0; i < c.est.size(); ++i) {
    const auto q = p + ".est[" + std::to_string(i) + "]";
    if (c.est[i].kind == EstimateKind::AR)
      r.errors.push_back({q + ".est", "point-estimate rules support RR or OR only"});
    if (std::isnan(c.est[i].p_hat_sup) || std::isnan(c.est[i].p_hat_fut) ||
        std::isnan(c.est[i].p_hat_prom))
      r.errors.push_back({q, "thresholds must not be NaN"});
  }
  for (std::size_t i = 0; i < c.ci.size(); ++i) {
    const auto q = p + ".ci[" + std::to_string(i) + "]";
    if (!(c.ci[i].level > 0.0 && c.ci[i].level < 1.0))
      r.errors.push_back({q + ".ci", "coverage must lie in (0, 1)"});
    if (std::isnan(c.ci[i].lower_sup) || std::isnan(c.ci[i].upper_fut) ||
        std::isnan(c.ci[i].lower_prom))
      r.errors.push_back({q, "thresholds must not be NaN"});
  }

  // Rules are allowed to contradict each other; flag obvious overlaps only.
  for (const auto& s : c.bayes_sup)
    for (const auto& f : c.bayes_fut)
      if (s.margin == f.margin && f.confidence > s.confidence)
        r.warnings.push_back({p, "bayes_sup confidence " + num(s.confidence) +
                                     " below bayes_fut confidence " + num(f.confidence) +
                                     " at margin " + num(s.margin) +
                                     ": superiority and futility regions overlap"});
  for (const auto& s : c.bayes_sa_sup)
    for (const auto& f : c.bayes_sa_fut)
      if (s.value == f.value && f.confidence > s.confidence)
        r.warnings.push_back({p, "bayes_sa_sup and bayes_sa_fut regions overlap at value " +
                                     num(s.value)});
  for (const auto& s : c.p_sup)
    for (const auto& f : c.p_fut)
      if (f.p_fut < s.p_sup)
        r.warnings.push_back({p, "p_fut " + num(f.p_fut) + " below p_sup " + num(s.p_sup) +
                                     ": superiority and futility regions overlap"});
  for (const auto& e : c.est)
    if (e.p_hat_sup <= e.p_hat_fut)
      r.warnings.push_back({p, "est p_hat_sup <= p_hat_fut: regions overlap"});
}

}  // namespace detail

// Checks every structural invariant of the scenario. Rules are not checked
// for logical consistency: overlapping superiority/futility regions are
// reported as warnings only.
inline ValidationReport validate(const ScenarioSpec& s) {
  using detail::check_dist;
  using detail::check_values;
  ValidationReport r;

  const auto& e = s.efficacy;
  check_dist(e.comb, "efficacy.comb", r);
  check_dist(e.mono_a, "efficacy.mono_a", r);
  check_dist(e.mono_b, "efficacy.mono_b", r);
  check_dist(e.soc, "efficacy.soc", r);
  check_values(e.soc, "efficacy.soc", true, r);
  switch (e.random_type) {
    case RandomType::absolute:
      check_values(e.comb, "efficacy.comb", true, r);
      check_values(e.mono_a, "efficacy.mono_a", true, r);
      check_values(e.mono_b, "efficacy.mono_b", true, r);
      break;
    case RandomType::risk_ratio:
    case RandomType::odds_ratio:
      check_values(e.comb, "efficacy.comb", false, r);
      check_values(e.mono_a, "efficacy.mono_a", false, r);
      check_values(e.mono_b, "efficacy.mono_b", false, r);
      break;
    case RandomType::risk_difference: break;
  }

  const auto& ep = s.endpoint;
  if (ep.transforms.empty()) r.errors.push_back({"endpoint.transforms", "must not be empty"});
  if (ep.transforms.size() != ep.probs.size()) {
    r.errors.push_back({"endpoint.probs", "must have one weight per transform"});
  } else {
    double sum = 0.0;
    for (double p : ep.probs) {
      if (!(p >= 0.0)) r.errors.push_back({"endpoint.probs", "weights must be >= 0"});
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) r.errors.push_back({"endpoint.probs", "probs must sum to 1"});
  }
  for (std::size_t i = 0; i < ep.transforms.size(); ++i) {
    const auto& t = ep.transforms[i];
    const auto path = "endpoint.transforms[" + std::to_string(i) + "]";
    if (t.kind == OutcomeTransform::Kind::correlated) {
      if (!detail::is_prob(t.sensitivity)) r.errors.push_back({path + ".sens", "must lie in [0, 1]"});
      if (!detail::is_prob(t.specificity)) r.errors.push_back({path + ".spec", "must lie in [0, 1]"});
    }
    if (t.kind == OutcomeTransform::Kind::custom && !t.fn)
      r.errors.push_back({path, "custom transform has no function"});
  }

  if (!std::isfinite(s.target.margin_comb))
    r.errors.push_back({"target.margin_comb", "must be finite"});
  if (!std::isfinite(s.target.margin_mono))
    r.errors.push_back({"target.margin_mono", "must be finite"});

  const auto& p = s.platform;
  if (p.cohorts_max < 1) r.errors.push_back({"platform.cohorts_max", "must be >= 1"});
  if (p.cohorts_initial < 1 || p.cohorts_initial > p.cohorts_max)
    r.errors.push_back({"platform.cohorts_initial", "must lie in [1, cohorts_max]"});
  if (!detail::is_prob(p.cohort_random))
    r.errors.push_back({"platform.cohort_random", "must lie in [0, 1]"});
  if (!detail::is_prob(p.safety_prob))
    r.errors.push_back({"platform.safety_prob", "must lie in [0, 1]"});
  if (p.sr_drugs_pos < 1) r.errors.push_back({"platform.sr_drugs_pos", "must be >= 1"});
  if (p.sr_pats < 1) r.errors.push_back({"platform.sr_pats", "must be >= 1"});
  if (p.n_int < 1) r.errors.push_back({"platform.n_int", "must be >= 1"});
  if (p.n_fin < 1) r.errors.push_back({"platform.n_fin", "must be >= 1"});
  if (p.n_int > p.n_fin) r.errors.push_back({"platform.n_int", "must not exceed n_fin"});
  if (p.allocation_ratio[index(Arm::comb)] == 0)
    r.errors.push_back({"platform.allocation_ratio", "combination entry must be > 0"});

  if (!(s.prior.alpha > 0.0) || !std::isfinite(s.prior.alpha))
    r.errors.push_back({"prior.alpha", "must be > 0"});
  if (!(s.prior.beta > 0.0) || !std::isfinite(s.prior.beta))
    r.errors.push_back({"prior.beta", "must be > 0"});

  for (Stage st : {Stage::interim, Stage::final})
    for (Comparison c : kAllComparisons)
      detail::check_rules(s.rules.at(st)[index(c)],
                          "rules." + std::string(stage_name(st)) + "." +
                              std::string(comparison_name(c)),
                          r);
  return r;
}

}  // namespace cohortplat
