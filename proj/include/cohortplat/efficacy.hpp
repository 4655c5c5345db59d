#pragma once

// True response rates per cohort and their classification against the
// target product profile.

#include <algorithm>
#include <array>
#include <span>

#include "cohortplat/random.hpp"
#include "cohortplat/scenario.hpp"

namespace cohortplat {

struct CohortTruth {
  double pi_comb = 0.0;
  double pi_mono_a = 0.0;
  double pi_mono_b = 0.0;
  double pi_soc = 0.0;
  // set when a composed rate had to be clamped into [0, 1]
  bool clamped = false;

  double rate(Arm a) const noexcept {
    switch (a) {
      case Arm::comb: return pi_comb;
      case Arm::mono_a: return pi_mono_a;
      case Arm::mono_b: return pi_mono_b;
      case Arm::soc: return pi_soc;
    }
    return 0.0;
  }

  friend bool operator==(const CohortTruth&, const CohortTruth&) = default;
};

enum class TruthClass { superior, futile };

using ArmPresence = std::array<bool, kNumArms>;

inline constexpr ArmPresence kAllArmsPresent{true, true, true, true};

// Composes a relative effect with a base rate. Ratio scales require
// gamma > 0; the result is always a probability.
inline double apply_effect(double base, double gamma, EffectScale scale) {
  switch (scale) {
    case EffectScale::risk_difference: return std::clamp(base + gamma, 0.0, 1.0);
    case EffectScale::risk_ratio: return std::clamp(base * gamma, 0.0, 1.0);
    case EffectScale::odds_ratio: {
      if (base >= 1.0) return 1.0;
      if (base <= 0.0) return 0.0;
      const double odds = base / (1.0 - base) * gamma;
      return std::clamp(odds / (1.0 + odds), 0.0, 1.0);
    }
  }
  return base;
}

inline double draw_value(const DiscreteDist& d, RandomStream& rng) {
  return d.values[rng.categorical(std::span<const double>(d.probs))];
}

// Samples the true rates of one cohort. Relative modes compose effects on
// the SoC rate left to right, regardless of whether the cohort has a SoC arm.
inline CohortTruth draw_cohort_truth(const EfficacySpec& spec, RandomStream& rng) {
  auto pick = [&](const DiscreteDist& d) {
    return spec.random ? draw_value(d, rng) : d.values.front();
  };

  CohortTruth t;
  if (spec.random_type == RandomType::absolute) {
    t.pi_comb = pick(spec.comb);
    t.pi_mono_a = pick(spec.mono_a);
    t.pi_mono_b = pick(spec.mono_b);
    t.pi_soc = pick(spec.soc);
    return t;
  }

  const EffectScale scale = spec.random_type == RandomType::risk_difference ? EffectScale::risk_difference
                            : spec.random_type == RandomType::risk_ratio    ? EffectScale::risk_ratio
                                                                            : EffectScale::odds_ratio;
  t.pi_soc = pick(spec.soc);
  const double g_a = pick(spec.mono_a);
  const double g_b = pick(spec.mono_b);
  const double g_comb = pick(spec.comb);

  // Compose without clamping first so that clamping can be reported.
  auto raw = [scale](double base, double gamma) {
    switch (scale) {
      case EffectScale::risk_difference: return base + gamma;
      case EffectScale::risk_ratio: return base * gamma;
      case EffectScale::odds_ratio: return apply_effect(base, gamma, scale);
    }
    return base;
  };
  auto clamp = [&t](double v) {
    if (v < 0.0 || v > 1.0) t.clamped = true;
    return std::clamp(v, 0.0, 1.0);
  };
  t.pi_mono_a = clamp(raw(t.pi_soc, g_a));
  t.pi_mono_b = clamp(raw(t.pi_soc, g_b));
  double c = clamp(raw(t.pi_soc, g_a));
  c = clamp(raw(c, g_b));
  t.pi_comb = clamp(raw(c, g_comb));
  return t;
}

// True iff `rate` beats `reference` by `margin` on the target's scale.
inline bool exceeds_by_margin(double rate, double reference, double margin, const TargetProfile& target) {
  const double bar = apply_effect(reference, margin, target.scale);
  return target.strict ? rate > bar : rate >= bar;
}

// Superior iff the combination beats each present monotherapy by the
// combination margin and, when SoC is present, each present monotherapy
// beats SoC by the monotherapy margin.
inline TruthClass classify_truth(const CohortTruth& t, const TargetProfile& target,
                                 const ArmPresence& arms = kAllArmsPresent) {
  const bool has_a = arms[index(Arm::mono_a)];
  const bool has_b = arms[index(Arm::mono_b)];
  const bool has_soc = arms[index(Arm::soc)];
  bool ok = true;
  if (has_a) ok = ok && exceeds_by_margin(t.pi_comb, t.pi_mono_a, target.margin_comb, target);
  if (has_b) ok = ok && exceeds_by_margin(t.pi_comb, t.pi_mono_b, target.margin_comb, target);
  if (has_soc) {
    if (has_a) ok = ok && exceeds_by_margin(t.pi_mono_a, t.pi_soc, target.margin_mono, target);
    if (has_b) ok = ok && exceeds_by_margin(t.pi_mono_b, t.pi_soc, target.margin_mono, target);
  }
  return ok ? TruthClass::superior : TruthClass::futile;
}

}  // namespace cohortplat
