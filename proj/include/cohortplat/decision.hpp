#pragma once

// Evaluation of the configured decision rules for one cohort at one analysis
// and their combination into a single verdict.
//
// Within a rule family every row (list element) must hold. Across families
// and comparisons, efficacy needs every superiority family to hold while any
// one futility family suffices to stop.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cohortplat/error.hpp"
#include "cohortplat/scenario.hpp"
#include "cohortplat/stats.hpp"

namespace cohortplat {

struct ArmCounts {
  double responders = 0.0;
  double total = 0.0;
  friend bool operator==(const ArmCounts&, const ArmCounts&) = default;
};

struct ComparisonInput {
  bool active = false;
  TwoByTwo table;        // numerator arm vs comparator arm
  ArmCounts numerator;   // own data of the numerator arm, for single-arm rules
  friend bool operator==(const ComparisonInput&, const ComparisonInput&) = default;
};

using ComparisonData = std::array<ComparisonInput, kNumComparisons>;

enum class Verdict { go, stop_futility, continue_enrolling, unsuccessful_max_n, stop_safety };

constexpr std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::go: return "GO";
    case Verdict::stop_futility: return "STOP_FUTILITY";
    case Verdict::continue_enrolling: return "CONTINUE";
    case Verdict::unsuccessful_max_n: return "UNSUCCESSFUL_MAX_N";
    case Verdict::stop_safety: return "STOP_SAFETY";
  }
  return "?";
}

enum class RuleKind {
  bayes_sup,
  bayes_fut,
  bayes_sa_sup,
  bayes_sa_fut,
  p_sup,
  p_fut,
  est_sup,
  est_fut,
  ci_sup,
  ci_fut,
};

constexpr std::string_view rule_kind_name(RuleKind k) noexcept {
  switch (k) {
    case RuleKind::bayes_sup: return "bayes_sup";
    case RuleKind::bayes_fut: return "bayes_fut";
    case RuleKind::bayes_sa_sup: return "bayes_sa_sup";
    case RuleKind::bayes_sa_fut: return "bayes_sa_fut";
    case RuleKind::p_sup: return "p_sup";
    case RuleKind::p_fut: return "p_fut";
    case RuleKind::est_sup: return "est_sup";
    case RuleKind::est_fut: return "est_fut";
    case RuleKind::ci_sup: return "ci_sup";
    case RuleKind::ci_fut: return "ci_fut";
  }
  return "?";
}

struct TraceEntry {
  Comparison comparison;
  RuleKind kind;
  std::size_t row;
  double statistic;  // posterior probability, p-value, estimate or CI bound
  double threshold;  // effective threshold the statistic was compared against
  bool satisfied;
  bool evaluated;    // false when the comparison was inactive
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

// Result of one rule family on one comparison.
struct RuleOutcome {
  bool superior = false;
  bool futile = false;
  bool promising = false;
  std::vector<TraceEntry> trace;
};

inline PosteriorBeta posterior(double responders, double total, const BetaPrior& prior) {
  return {prior.alpha + responders, prior.beta + (total - responders)};
}

inline RuleOutcome eval_bayes_sup(std::span<const BayesSupRow> rows, const TwoByTwo& data,
                                  const BetaPrior& prior, Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.superior = !rows.empty();
  bool prom = !rows.empty();
  const auto x = posterior(data.t_resp, data.n_t(), prior);
  const auto y = posterior(data.c_resp, data.n_c(), prior);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = prob_greater_by_margin(x, y, rows[i].margin);
    const bool ok = p > rows[i].confidence;
    out.superior = out.superior && ok;
    prom = prom && p > rows[i].promising;
    out.trace.push_back({cmp, RuleKind::bayes_sup, i, p, rows[i].confidence, ok, true});
  }
  out.promising = !out.superior && prom;
  return out;
}

inline RuleOutcome eval_bayes_fut(std::span<const BayesFutRow> rows, const TwoByTwo& data,
                                  const BetaPrior& prior, Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.futile = !rows.empty();
  const auto x = posterior(data.t_resp, data.n_t(), prior);
  const auto y = posterior(data.c_resp, data.n_c(), prior);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = prob_greater_by_margin(x, y, rows[i].margin);
    const bool ok = p < rows[i].confidence;
    out.futile = out.futile && ok;
    out.trace.push_back({cmp, RuleKind::bayes_fut, i, p, rows[i].confidence, ok, true});
  }
  return out;
}

inline RuleOutcome eval_bayes_sa_sup(std::span<const SingleArmSupRow> rows, const ArmCounts& arm,
                                     const BetaPrior& prior, Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.superior = !rows.empty();
  bool prom = !rows.empty();
  const auto x = posterior(arm.responders, arm.total, prior);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = prob_exceeds(x, rows[i].value);
    const bool ok = p > rows[i].confidence;
    out.superior = out.superior && ok;
    prom = prom && p > rows[i].promising;
    out.trace.push_back({cmp, RuleKind::bayes_sa_sup, i, p, rows[i].confidence, ok, true});
  }
  out.promising = !out.superior && prom;
  return out;
}

inline RuleOutcome eval_bayes_sa_fut(std::span<const SingleArmFutRow> rows, const ArmCounts& arm,
                                     const BetaPrior& prior, Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.futile = !rows.empty();
  const auto x = posterior(arm.responders, arm.total, prior);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = prob_exceeds(x, rows[i].value);
    const bool ok = p < rows[i].confidence;
    out.futile = out.futile && ok;
    out.trace.push_back({cmp, RuleKind::bayes_sa_fut, i, p, rows[i].confidence, ok, true});
  }
  return out;
}

inline double adjusted_level(double level, PAdjust adj) {
  return adj == PAdjust::bonferroni_half ? level / 2.0 : level;
}

inline RuleOutcome eval_freq_sup(std::span<const FreqSupRule> rules, const TwoByTwo& data,
                                 Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.superior = !rules.empty();
  bool prom = !rules.empty();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const double p = one_sided_prop_test(data, r.test);
    const double level = adjusted_level(r.p_sup, r.p_adj);
    const bool ok = p < level;
    out.superior = out.superior && ok;
    prom = prom && p < adjusted_level(r.p_prom, r.p_adj);
    out.trace.push_back({cmp, RuleKind::p_sup, i, p, level, ok, true});
  }
  out.promising = !out.superior && prom;
  return out;
}

inline RuleOutcome eval_freq_fut(std::span<const FreqFutRule> rules, const TwoByTwo& data,
                                 Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.futile = !rules.empty();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const double p = one_sided_prop_test(data, r.test);
    const double level = adjusted_level(r.p_fut, r.p_adj);
    const bool ok = p >= level;
    out.futile = out.futile && ok;
    out.trace.push_back({cmp, RuleKind::p_fut, i, p, level, ok, true});
  }
  return out;
}

inline RuleOutcome eval_est_rule(std::span<const EstSupFutRule> rules, const TwoByTwo& data,
                                 Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.superior = out.futile = !rules.empty();
  bool prom = !rules.empty();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const double e = point_estimate(data, r.kind).value;
    const bool sup = e >= r.p_hat_sup;
    const bool fut = e <= r.p_hat_fut;
    out.superior = out.superior && sup;
    out.futile = out.futile && fut;
    prom = prom && e >= r.p_hat_prom;
    out.trace.push_back({cmp, RuleKind::est_sup, i, e, r.p_hat_sup, sup, true});
    out.trace.push_back({cmp, RuleKind::est_fut, i, e, r.p_hat_fut, fut, true});
  }
  out.promising = !out.superior && prom;
  return out;
}

// GO when the upper bound reaches lower_sup, STOP when the lower bound falls
// to upper_fut.
inline RuleOutcome eval_ci_rule(std::span<const CISupFutRule> rules, const TwoByTwo& data,
                                Comparison cmp = Comparison::comb_vs_mono_a) {
  RuleOutcome out;
  out.superior = out.futile = !rules.empty();
  bool prom = !rules.empty();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    const Interval iv = ci(data, r.kind, r.level);
    const bool sup = iv.upper >= r.lower_sup;
    const bool fut = iv.lower <= r.upper_fut;
    out.superior = out.superior && sup;
    out.futile = out.futile && fut;
    prom = prom && iv.upper >= r.lower_prom;
    out.trace.push_back({cmp, RuleKind::ci_sup, i, iv.upper, r.lower_sup, sup, true});
    out.trace.push_back({cmp, RuleKind::ci_fut, i, iv.lower, r.upper_fut, fut, true});
  }
  out.promising = !out.superior && prom;
  return out;
}

// All families on one comparison.
struct ComparisonOutcome {
  bool active = false;
  bool has_superiority = false;
  bool has_futility = false;
  bool superior = false;                // every superiority family holds
  bool promising_or_superior = false;   // every superiority family holds or is promising
  bool futile = false;                  // some futility family holds
  std::vector<TraceEntry> trace;
};

namespace detail {

inline void skipped_trace(const ComparisonRules& r, Comparison cmp, std::vector<TraceEntry>& trace) {
  auto add = [&](RuleKind k, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) trace.push_back({cmp, k, i, 0.0, 0.0, false, false});
  };
  add(RuleKind::bayes_sup, r.bayes_sup.size());
  add(RuleKind::bayes_fut, r.bayes_fut.size());
  add(RuleKind::bayes_sa_sup, r.bayes_sa_sup.size());
  add(RuleKind::bayes_sa_fut, r.bayes_sa_fut.size());
  add(RuleKind::p_sup, r.p_sup.size());
  add(RuleKind::p_fut, r.p_fut.size());
  for (std::size_t i = 0; i < r.est.size(); ++i) {
    trace.push_back({cmp, RuleKind::est_sup, i, 0.0, 0.0, false, false});
    trace.push_back({cmp, RuleKind::est_fut, i, 0.0, 0.0, false, false});
  }
  for (std::size_t i = 0; i < r.ci.size(); ++i) {
    trace.push_back({cmp, RuleKind::ci_sup, i, 0.0, 0.0, false, false});
    trace.push_back({cmp, RuleKind::ci_fut, i, 0.0, 0.0, false, false});
  }
}

}  // namespace detail

inline ComparisonOutcome eval_comparison(const ComparisonRules& rules, const ComparisonInput& in,
                                         const BetaPrior& prior, Comparison cmp) {
  ComparisonOutcome out;
  out.active = in.active && !rules.empty();
  if (!out.active) {
    detail::skipped_trace(rules, cmp, out.trace);
    return out;
  }
  out.superior = true;
  out.promising_or_superior = true;

  auto sup_family = [&](RuleOutcome o) {
    out.has_superiority = true;
    out.superior = out.superior && o.superior;
    out.promising_or_superior = out.promising_or_superior && (o.superior || o.promising);
    out.trace.insert(out.trace.end(), o.trace.begin(), o.trace.end());
    return o;
  };
  auto fut_family = [&](RuleOutcome o) {
    out.has_futility = true;
    out.futile = out.futile || o.futile;
    out.trace.insert(out.trace.end(), o.trace.begin(), o.trace.end());
  };

  if (!rules.bayes_sup.empty()) sup_family(eval_bayes_sup(rules.bayes_sup, in.table, prior, cmp));
  if (!rules.bayes_fut.empty()) fut_family(eval_bayes_fut(rules.bayes_fut, in.table, prior, cmp));
  if (!rules.bayes_sa_sup.empty())
    sup_family(eval_bayes_sa_sup(rules.bayes_sa_sup, in.numerator, prior, cmp));
  if (!rules.bayes_sa_fut.empty())
    fut_family(eval_bayes_sa_fut(rules.bayes_sa_fut, in.numerator, prior, cmp));
  if (!rules.p_sup.empty()) sup_family(eval_freq_sup(rules.p_sup, in.table, cmp));
  if (!rules.p_fut.empty()) fut_family(eval_freq_fut(rules.p_fut, in.table, cmp));
  // Estimate and CI rules carry both directions in one element.
  if (!rules.est.empty()) {
    auto o = eval_est_rule(rules.est, in.table, cmp);
    out.has_futility = true;
    out.futile = out.futile || o.futile;
    o.futile = false;
    sup_family(std::move(o));
  }
  if (!rules.ci.empty()) {
    auto o = eval_ci_rule(rules.ci, in.table, cmp);
    out.has_futility = true;
    out.futile = out.futile || o.futile;
    o.futile = false;
    sup_family(std::move(o));
  }
  if (!out.has_superiority) out.superior = out.promising_or_superior = false;
  return out;
}

struct CohortDecision {
  Verdict verdict = Verdict::continue_enrolling;
  bool promising = false;
  std::string reason;
  // per comparison: every superiority family held (false when none configured)
  std::array<bool, kNumComparisons> comparison_superior{};
  std::vector<TraceEntry> trace;
};

// Combines per-comparison outcomes into a verdict. GO needs at least one
// configured superiority family; when GO and STOP hold together STOP wins.
inline CohortDecision combine(std::span<const ComparisonOutcome> results, Stage stage) {
  if (results.size() != kNumComparisons)
    throw DomainError("combine: expected one outcome per comparison");
  CohortDecision d;
  bool any_sup = false;
  bool all_sup = true;
  bool all_prom = true;
  bool any_fut = false;
  std::string fut_reason;
  for (std::size_t c = 0; c < results.size(); ++c) {
    const auto& r = results[c];
    d.trace.insert(d.trace.end(), r.trace.begin(), r.trace.end());
    if (!r.active) continue;
    d.comparison_superior[c] = r.has_superiority && r.superior;
    if (r.has_superiority) {
      any_sup = true;
      all_sup = all_sup && r.superior;
      all_prom = all_prom && r.promising_or_superior;
    }
    if (r.futile) {
      if (!any_fut) fut_reason = std::string(comparison_name(kAllComparisons[c]));
      any_fut = true;
    }
  }
  const bool go = any_sup && all_sup;
  if (any_fut) {
    d.verdict = Verdict::stop_futility;
    d.reason = "futility criterion met on " + fut_reason;
    if (go) d.reason += " (superiority also met; futility takes precedence)";
  } else if (go) {
    d.verdict = Verdict::go;
    d.reason = "all superiority criteria met";
  } else if (stage == Stage::interim) {
    d.verdict = Verdict::continue_enrolling;
    d.reason = "neither superiority nor futility criteria met";
  } else {
    d.verdict = Verdict::unsuccessful_max_n;
    d.reason = "not reaching the superiority criterion at the maximum sample size";
  }
  d.promising = d.verdict != Verdict::go && any_sup && all_prom;
  return d;
}

// Evaluates every configured rule of one stage and combines the results.
inline CohortDecision decide(const StageRules& rules, const ComparisonData& data,
                             const BetaPrior& prior, Stage stage) {
  std::array<ComparisonOutcome, kNumComparisons> outcomes;
  for (Comparison c : kAllComparisons)
    outcomes[index(c)] = eval_comparison(rules[index(c)], data[index(c)], prior, c);
  return combine(outcomes, stage);
}

}  // namespace cohortplat
