#pragma once

// Statistics primitives for binary-endpoint comparisons: Beta posterior
// probabilities, one-sided two-proportion tests, point estimates and
// confidence intervals for 2x2 tables.

#include <algorithm>
#include <cmath>
#include <utility>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "cohortplat/error.hpp"
#include "cohortplat/scenario.hpp"

namespace cohortplat {

namespace detail {
// Double precision throughout; default Boost policy promotes to long double,
// which is several times slower for no benefit at our tolerances.
using StatPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
}  // namespace detail

struct PosteriorBeta {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const noexcept { return alpha / (alpha + beta); }

  friend bool operator==(const PosteriorBeta&, const PosteriorBeta&) = default;
};

// Counts for a treatment arm (t) against its comparator (c). Counts may be
// fractional when external control data is down-weighted.
struct TwoByTwo {
  double t_resp = 0.0;
  double t_nonresp = 0.0;
  double c_resp = 0.0;
  double c_nonresp = 0.0;

  double n_t() const noexcept { return t_resp + t_nonresp; }
  double n_c() const noexcept { return c_resp + c_nonresp; }
  double rate_t() const noexcept { return t_resp / n_t(); }
  double rate_c() const noexcept { return c_resp / n_c(); }

  TwoByTwo swapped() const noexcept { return {c_resp, c_nonresp, t_resp, t_nonresp}; }

  friend bool operator==(const TwoByTwo&, const TwoByTwo&) = default;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double, detail::StatPolicy>(), p);
}

// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0, 1]");
  if (!(a > 0.0 && b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw DomainError("reg_inc_beta: a and b must be positive and finite");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return boost::math::ibeta(a, b, x, detail::StatPolicy());
}

// P(X > v) for X ~ Beta(alpha, beta).
inline double prob_exceeds(const PosteriorBeta& x, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError("prob_exceeds: v must lie in [0, 1]");
  if (v == 0.0) return 1.0;
  if (v == 1.0) return 0.0;
  return boost::math::ibetac(x.alpha, x.beta, v, detail::StatPolicy());
}

// P(X > Y + delta) for independent Beta variables, by adaptive Gauss-Kronrod
// quadrature of f_Y(y) * P(X > y + delta).
//
// The integral is restricted to the overlap of Y's effective support and the
// transition region of X's survival function (both cut at quantile 1e-14);
// below the transition P(X > y + delta) is 1 to that precision and the
// contribution is F_Y evaluated in closed form. Shape parameters below 1 give
// endpoint singularities, which go to tanh-sinh instead of Gauss-Kronrod.
inline double prob_greater_by_margin(const PosteriorBeta& x, const PosteriorBeta& y, double delta) {
  namespace bm = boost::math;
  constexpr double eps = 1e-14;
  const detail::StatPolicy pol;

  const double y_lo = bm::ibeta_inv(y.alpha, y.beta, eps, pol);
  const double y_hi = bm::ibetac_inv(y.alpha, y.beta, eps, pol);
  const double t_lo = bm::ibeta_inv(x.alpha, x.beta, eps, pol) - delta;
  const double t_hi = bm::ibetac_inv(x.alpha, x.beta, eps, pol) - delta;

  double p = 0.0;
  if (t_lo >= 1.0) {
    p = 1.0;
  } else if (t_lo > 0.0) {
    p = bm::ibeta(y.alpha, y.beta, t_lo, pol);
  }

  const double a = std::max(y_lo, t_lo);
  const double b = std::min(y_hi, t_hi);
  if (a < b) {
    const double log_norm = bm::lgamma(y.alpha + y.beta, pol) - bm::lgamma(y.alpha, pol) -
                            bm::lgamma(y.beta, pol);
    auto integrand = [&](double u) {
      if (u <= 0.0 || u >= 1.0) return 0.0;
      const double dens =
          std::exp(log_norm + (y.alpha - 1.0) * std::log(u) + (y.beta - 1.0) * std::log1p(-u));
      const double t = u + delta;
      const double surv = t <= 0.0 ? 1.0 : t >= 1.0 ? 0.0 : bm::ibetac(x.alpha, x.beta, t, pol);
      return dens * surv;
    };
    const bool singular = std::min({x.alpha, x.beta, y.alpha, y.beta}) < 1.0;
    if (singular) {
      thread_local bm::quadrature::tanh_sinh<double> tanh_sinh;
      p += tanh_sinh.integrate(integrand, a, b, 1e-10);
    } else {
      p += bm::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 18, 1e-10);
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

// One-sided two-proportion test of H1: treatment rate > comparator rate,
// using the pooled z statistic (the signed root of the uncorrected
// chi-square statistic). With continuity correction, the Yates-adjusted
// chi-square is used, matching R's prop.test(correct = TRUE).
//
// Zero pooled variance (all responders or none) carries no information and
// returns 0.5; so does an empty arm.
inline double one_sided_prop_test(const TwoByTwo& t, const PropTestSpec& spec = {}) {
  const double nt = t.n_t();
  const double nc = t.n_c();
  if (!(nt > 0.0 && nc > 0.0)) return 0.5;
  const double pt = t.t_resp / nt;
  const double pc = t.c_resp / nc;
  const double pooled = (t.t_resp + t.c_resp) / (nt + nc);
  if (pooled <= 0.0 || pooled >= 1.0) return 0.5;

  double z = 0.0;
  if (!spec.continuity_correction) {
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / nt + 1.0 / nc));
    z = (pt - pc) / se;
  } else {
    const double delta = pt - pc;
    const double yates = std::min(0.5, std::abs(delta) / (1.0 / nt + 1.0 / nc));
    const double obs[4] = {t.t_resp, t.t_nonresp, t.c_resp, t.c_nonresp};
    const double exp[4] = {nt * pooled, nt * (1.0 - pooled), nc * pooled, nc * (1.0 - pooled)};
    double stat = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double d = std::abs(obs[i] - exp[i]) - yates;
      stat += d * d / exp[i];
    }
    z = (delta > 0.0 ? 1.0 : delta < 0.0 ? -1.0 : 0.0) * std::sqrt(stat);
  }
  return 1.0 - normal_cdf(z);
}

struct PointEstimate {
  double value;
  bool corrected;  // 0.5 added to every cell because one was empty
};

// Risk ratio or odds ratio of treatment over comparator.
inline PointEstimate point_estimate(const TwoByTwo& t, EstimateKind kind) {
  if (kind == EstimateKind::AR) {
    return {t.rate_t() - t.rate_c(), false};
  }
  TwoByTwo c = t;
  const bool zero_cell =
      t.t_resp == 0.0 || t.t_nonresp == 0.0 || t.c_resp == 0.0 || t.c_nonresp == 0.0;
  if (zero_cell) c = {t.t_resp + 0.5, t.t_nonresp + 0.5, t.c_resp + 0.5, t.c_nonresp + 0.5};
  if (kind == EstimateKind::RR) return {c.rate_t() / c.rate_c(), zero_cell};
  return {(c.t_resp * c.c_nonresp) / (c.t_nonresp * c.c_resp), zero_cell};
}

struct Interval {
  double lower;
  double upper;
};

// Two-sided confidence interval at coverage `level`.
//   AR: Wald interval for the risk difference.
//   RR: log interval on 0.5-adjusted cells.
//   OR: Woolf logit interval on 0.5-adjusted cells.
inline Interval ci(const TwoByTwo& t, EstimateKind kind, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("ci: level must lie in (0, 1)");
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  switch (kind) {
    case EstimateKind::AR: {
      const double pt = t.rate_t();
      const double pc = t.rate_c();
      const double se = std::sqrt(pt * (1.0 - pt) / t.n_t() + pc * (1.0 - pc) / t.n_c());
      return {pt - pc - z * se, pt - pc + z * se};
    }
    case EstimateKind::RR: {
      const double a = t.t_resp + 0.5, n1 = t.n_t() + 1.0;
      const double c = t.c_resp + 0.5, n0 = t.n_c() + 1.0;
      const double log_rr = std::log((a / n1) / (c / n0));
      const double se = std::sqrt(1.0 / a - 1.0 / n1 + 1.0 / c - 1.0 / n0);
      return {std::exp(log_rr - z * se), std::exp(log_rr + z * se)};
    }
    case EstimateKind::OR: {
      const double a = t.t_resp + 0.5, b = t.t_nonresp + 0.5;
      const double c = t.c_resp + 0.5, d = t.c_nonresp + 0.5;
      const double log_or = std::log((a * d) / (b * c));
      const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
      return {std::exp(log_or - z * se), std::exp(log_or + z * se)};
    }
  }
  return {0.0, 0.0};
}

}  // namespace cohortplat
