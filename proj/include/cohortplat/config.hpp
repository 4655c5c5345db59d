#pragma once

// JSON scenario files: parsing with strict key checking, serialization, and
// grid expansion over scalar fields.
//
// Infinite values are written as the strings "Inf" / "-Inf". Unknown keys are
// errors so that typos in a scenario file cannot silently fall back to
// defaults.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortplat/error.hpp"
#include "cohortplat/scenario.hpp"

namespace cohortplat {

using Json = nlohmann::ordered_json;

namespace detail {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(sub(it.key()), "unknown key");
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(sub(key), "missing required field");
    return j_.at(key);
  }

  template <typename F>
  void opt(const std::string& key, F&& read) {
    if (has(key)) read(j_.at(key), sub(key));
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double as_real(const Json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "Inf" || s == "inf" || s == "Infinity") return kInf;
    if (s == "-Inf" || s == "-inf" || s == "-Infinity") return -kInf;
  }
  throw ConfigError(path, "must be a number or \"Inf\"");
}

inline std::size_t as_count(const Json& v, const std::string& path, bool allow_inf = false) {
  if (allow_inf && v.is_string() && as_real(v, path) == kInf) return kUnlimited;
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(path, "must be >= 0");
    return static_cast<std::size_t>(v.get<std::int64_t>());
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1e18) return static_cast<std::size_t>(d);
  }
  throw ConfigError(path, allow_inf ? "must be a non-negative integer or \"Inf\""
                                    : "must be a non-negative integer");
}

inline bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "must be true or false");
  return v.get<bool>();
}

inline std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "must be a string");
  return v.get<std::string>();
}

inline std::vector<double> as_reals(const Json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(path, "must be a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_real(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename E>
E as_enum(const Json& v, const std::string& path, std::initializer_list<std::pair<const char*, E>> names) {
  const auto s = as_string(v, path);
  std::string allowed;
  for (const auto& [n, e] : names) {
    if (s == n) return e;
    allowed += allowed.empty() ? n : std::string(", ") + n;
  }
  throw ConfigError(path, "must be one of: " + allowed);
}

inline Json real_json(double x) {
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  return x;
}

inline Json count_json(std::size_t n) {
  if (n == kUnlimited) return "Inf";
  return n;
}

inline constexpr std::initializer_list<std::pair<const char*, RandomType>> kRandomTypes{
    {"absolute", RandomType::absolute},
    {"risk_difference", RandomType::risk_difference},
    {"risk_ratio", RandomType::risk_ratio},
    {"odds_ratio", RandomType::odds_ratio}};

inline constexpr std::initializer_list<std::pair<const char*, TrialStructure>> kTrialStructures{
    {"all_plac", TrialStructure::all_plac},
    {"no_plac", TrialStructure::no_plac},
    {"stop_post_back", TrialStructure::stop_post_back},
    {"stop_post_mono", TrialStructure::stop_post_mono}};

inline constexpr std::initializer_list<std::pair<const char*, SharingType>> kSharingTypes{
    {"cohort", SharingType::cohort},
    {"concurrent", SharingType::concurrent},
    {"dynamic", SharingType::dynamic},
    {"all", SharingType::all}};

inline constexpr std::initializer_list<std::pair<const char*, PAdjust>> kPAdjust{
    {"none", PAdjust::none}, {"bonferroni_half", PAdjust::bonferroni_half}, {"B", PAdjust::bonferroni_half}};

inline constexpr std::initializer_list<std::pair<const char*, EstimateKind>> kEstimates{
    {"AR", EstimateKind::AR}, {"RR", EstimateKind::RR}, {"OR", EstimateKind::OR}};

template <typename E>
std::string enum_string(E e, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [n, v] : names)
    if (v == e) return n;
  return "?";
}

inline DiscreteDist parse_dist(const Json& j, const std::string& path) {
  Reader r(j, path);
  DiscreteDist d;
  d.values = as_reals(r.at("values"), r.sub("values"));
  if (r.has("probs")) {
    d.probs = as_reals(r.at("probs"), r.sub("probs"));
  } else if (d.values.size() == 1) {
    d.probs = {1.0};
  } else {
    throw ConfigError(r.sub("probs"), "missing required field (needed when values has more than one entry)");
  }
  return d;
}

inline Json dist_json(const DiscreteDist& d) {
  Json j;
  Json v = Json::array(), p = Json::array();
  for (double x : d.values) v.push_back(real_json(x));
  for (double x : d.probs) p.push_back(real_json(x));
  j["values"] = v;
  j["probs"] = p;
  return j;
}

inline std::vector<double> row(const Json& v, const std::string& path, std::size_t min_len,
                               std::size_t max_len) {
  if (!v.is_array() || v.size() < min_len || v.size() > max_len)
    throw ConfigError(path, "must be a list of " + std::to_string(min_len) +
                                (min_len == max_len ? "" : " to " + std::to_string(max_len)) +
                                " numbers");
  return as_reals(v, path);
}

template <typename F>
void each(const Json& v, const std::string& path, F&& f) {
  if (!v.is_array()) throw ConfigError(path, "must be a list");
  for (std::size_t i = 0; i < v.size(); ++i) f(v[i], path + "[" + std::to_string(i) + "]");
}

inline ComparisonRules parse_comparison(const Json& j, const std::string& path) {
  Reader r(j, path);
  ComparisonRules c;
  r.opt("bayes_sup", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      const auto x = row(e, q, 2, 3);
      c.bayes_sup.push_back({x[0], x[1], x.size() > 2 ? x[2] : 1.0});
    });
  });
  r.opt("bayes_fut", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      const auto x = row(e, q, 2, 2);
      c.bayes_fut.push_back({x[0], x[1]});
    });
  });
  r.opt("bayes_sa_sup", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      const auto x = row(e, q, 2, 3);
      c.bayes_sa_sup.push_back({x[0], x[1], x.size() > 2 ? x[2] : 1.0});
    });
  });
  r.opt("bayes_sa_fut", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      const auto x = row(e, q, 2, 2);
      c.bayes_sa_fut.push_back({x[0], x[1]});
    });
  });
  r.opt("p_sup", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      Reader er(e, q);
      FreqSupRule f{};
      f.p_sup = as_real(er.at("p_sup"), er.sub("p_sup"));
      f.p_prom = f.p_sup;
      er.opt("p_prom", [&](const Json& x, const std::string& s) { f.p_prom = as_real(x, s); });
      er.opt("p_adj", [&](const Json& x, const std::string& s) { f.p_adj = as_enum(x, s, kPAdjust); });
      er.opt("continuity_correction", [&](const Json& x, const std::string& s) {
        f.test.continuity_correction = as_bool(x, s);
      });
      c.p_sup.push_back(f);
    });
  });
  r.opt("p_fut", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      Reader er(e, q);
      FreqFutRule f{};
      f.p_fut = as_real(er.at("p_fut"), er.sub("p_fut"));
      er.opt("p_adj", [&](const Json& x, const std::string& s) { f.p_adj = as_enum(x, s, kPAdjust); });
      er.opt("continuity_correction", [&](const Json& x, const std::string& s) {
        f.test.continuity_correction = as_bool(x, s);
      });
      c.p_fut.push_back(f);
    });
  });
  r.opt("est", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      Reader er(e, q);
      EstSupFutRule f{};
      f.kind = as_enum(er.at("est"), er.sub("est"), kEstimates);
      f.p_hat_sup = as_real(er.at("p_hat_sup"), er.sub("p_hat_sup"));
      f.p_hat_fut = as_real(er.at("p_hat_fut"), er.sub("p_hat_fut"));
      er.opt("p_hat_prom", [&](const Json& x, const std::string& s) { f.p_hat_prom = as_real(x, s); });
      c.est.push_back(f);
    });
  });
  r.opt("ci", [&](const Json& v, const std::string& p) {
    each(v, p, [&](const Json& e, const std::string& q) {
      Reader er(e, q);
      CISupFutRule f{};
      f.kind = as_enum(er.at("est"), er.sub("est"), kEstimates);
      er.opt("ci", [&](const Json& x, const std::string& s) { f.level = as_real(x, s); });
      f.lower_sup = as_real(er.at("p_hat_lower_sup"), er.sub("p_hat_lower_sup"));
      f.upper_fut = as_real(er.at("p_hat_upper_fut"), er.sub("p_hat_upper_fut"));
      er.opt("p_hat_lower_prom", [&](const Json& x, const std::string& s) { f.lower_prom = as_real(x, s); });
      c.ci.push_back(f);
    });
  });
  return c;
}

inline Json comparison_json(const ComparisonRules& c) {
  Json j = Json::object();
  auto rows = [](auto const& v, auto&& to_row) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back(to_row(x));
    return a;
  };
  if (!c.bayes_sup.empty())
    j["bayes_sup"] = rows(c.bayes_sup, [](const BayesSupRow& r) {
      return Json::array({real_json(r.margin), real_json(r.confidence), real_json(r.promising)});
    });
  if (!c.bayes_fut.empty())
    j["bayes_fut"] = rows(c.bayes_fut, [](const BayesFutRow& r) {
      return Json::array({real_json(r.margin), real_json(r.confidence)});
    });
  if (!c.bayes_sa_sup.empty())
    j["bayes_sa_sup"] = rows(c.bayes_sa_sup, [](const SingleArmSupRow& r) {
      return Json::array({real_json(r.value), real_json(r.confidence), real_json(r.promising)});
    });
  if (!c.bayes_sa_fut.empty())
    j["bayes_sa_fut"] = rows(c.bayes_sa_fut, [](const SingleArmFutRow& r) {
      return Json::array({real_json(r.value), real_json(r.confidence)});
    });
  if (!c.p_sup.empty())
    j["p_sup"] = rows(c.p_sup, [](const FreqSupRule& r) {
      Json e;
      e["p_sup"] = real_json(r.p_sup);
      e["p_prom"] = real_json(r.p_prom);
      e["p_adj"] = enum_string(r.p_adj, kPAdjust);
      e["continuity_correction"] = r.test.continuity_correction;
      return e;
    });
  if (!c.p_fut.empty())
    j["p_fut"] = rows(c.p_fut, [](const FreqFutRule& r) {
      Json e;
      e["p_fut"] = real_json(r.p_fut);
      e["p_adj"] = enum_string(r.p_adj, kPAdjust);
      e["continuity_correction"] = r.test.continuity_correction;
      return e;
    });
  if (!c.est.empty())
    j["est"] = rows(c.est, [](const EstSupFutRule& r) {
      Json e;
      e["est"] = enum_string(r.kind, kEstimates);
      e["p_hat_sup"] = real_json(r.p_hat_sup);
      e["p_hat_fut"] = real_json(r.p_hat_fut);
      e["p_hat_prom"] = real_json(r.p_hat_prom);
      return e;
    });
  if (!c.ci.empty())
    j["ci"] = rows(c.ci, [](const CISupFutRule& r) {
      Json e;
      e["est"] = enum_string(r.kind, kEstimates);
      e["ci"] = real_json(r.level);
      e["p_hat_lower_sup"] = real_json(r.lower_sup);
      e["p_hat_upper_fut"] = real_json(r.upper_fut);
      e["p_hat_lower_prom"] = real_json(r.lower_prom);
      return e;
    });
  return j;
}

inline StageRules parse_stage(const Json& j, const std::string& path) {
  Reader r(j, path);
  StageRules s;
  for (Comparison c : kAllComparisons) {
    const std::string key(comparison_name(c));
    r.opt(key, [&](const Json& v, const std::string& p) { s[index(c)] = parse_comparison(v, p); });
  }
  return s;
}

inline Json stage_json(const StageRules& s) {
  Json j = Json::object();
  for (Comparison c : kAllComparisons)
    if (!s[index(c)].empty()) j[std::string(comparison_name(c))] = comparison_json(s[index(c)]);
  return j;
}

inline AllocationRatio parse_allocation(const Json& v, const std::string& path) {
  AllocationRatio a{};
  if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ':')) {
      if (i >= kNumArms) throw ConfigError(path, "must have four entries (comb:mono_a:mono_b:soc)");
      try {
        std::size_t used = 0;
        const long n = std::stol(part, &used);
        if (used != part.size() || n < 0) throw std::invalid_argument(part);
        a[i++] = static_cast<unsigned>(n);
      } catch (const std::exception&) {
        throw ConfigError(path, "entries must be non-negative integers");
      }
    }
    if (i != kNumArms) throw ConfigError(path, "must have four entries (comb:mono_a:mono_b:soc)");
    return a;
  }
  if (!v.is_array() || v.size() != kNumArms)
    throw ConfigError(path, "must be a list of four integers or a string \"c:a:b:s\"");
  for (std::size_t i = 0; i < kNumArms; ++i)
    a[i] = static_cast<unsigned>(as_count(v[i], path + "[" + std::to_string(i) + "]"));
  return a;
}

inline OutcomeTransform parse_transform(const Json& j, const std::string& path) {
  Reader r(j, path);
  const auto kind = as_string(r.at("kind"), r.sub("kind"));
  if (kind == "identity") return OutcomeTransform::identity();
  if (kind == "correlated") {
    const double sens = as_real(r.at("sens"), r.sub("sens"));
    const double spec = as_real(r.at("spec"), r.sub("spec"));
    return OutcomeTransform::correlated(sens, spec);
  }
  throw ConfigError(r.sub("kind"), "must be one of: identity, correlated");
}

}  // namespace detail

// Parses and validates a scenario. Throws ConfigError naming the first
// offending field; semantic rule overlaps are not errors.
inline ScenarioSpec parse_scenario_json(const Json& root) {
  using namespace detail;
  ScenarioSpec s;
  {
    Reader r(root, "");
    r.opt("id", [&](const Json& v, const std::string& p) { s.id = as_string(v, p); });

    {
      Reader e(r.at("efficacy"), "efficacy");
      e.opt("random", [&](const Json& v, const std::string& p) { s.efficacy.random = as_bool(v, p); });
      e.opt("random_type", [&](const Json& v, const std::string& p) {
        s.efficacy.random_type = as_enum(v, p, kRandomTypes);
      });
      s.efficacy.comb = parse_dist(e.at("comb"), e.sub("comb"));
      s.efficacy.mono_a = parse_dist(e.at("mono_a"), e.sub("mono_a"));
      s.efficacy.mono_b = parse_dist(e.at("mono_b"), e.sub("mono_b"));
      s.efficacy.soc = parse_dist(e.at("soc"), e.sub("soc"));
    }

    r.opt("endpoint", [&](const Json& v, const std::string& p) {
      Reader e(v, p);
      s.endpoint.transforms.clear();
      each(e.at("transforms"), e.sub("transforms"), [&](const Json& t, const std::string& q) {
        s.endpoint.transforms.push_back(parse_transform(t, q));
      });
      if (e.has("probs")) {
        s.endpoint.probs = as_reals(e.at("probs"), e.sub("probs"));
      } else {
        s.endpoint.probs.assign(s.endpoint.transforms.size(),
                                1.0 / static_cast<double>(std::max<std::size_t>(1, s.endpoint.transforms.size())));
      }
    });

    r.opt("target", [&](const Json& v, const std::string& p) {
      Reader t(v, p);
      t.opt("margin_comb", [&](const Json& x, const std::string& q) { s.target.margin_comb = as_real(x, q); });
      t.opt("margin_mono", [&](const Json& x, const std::string& q) { s.target.margin_mono = as_real(x, q); });
      t.opt("scale", [&](const Json& x, const std::string& q) {
        const auto n = as_count(x, q);
        if (n < 1 || n > 3) throw ConfigError(q, "must be 1 (risk difference), 2 (risk ratio) or 3 (odds ratio)");
        s.target.scale = static_cast<EffectScale>(n);
      });
      t.opt("strict", [&](const Json& x, const std::string& q) { s.target.strict = as_bool(x, q); });
    });

    r.opt("platform", [&](const Json& v, const std::string& p) {
      Reader t(v, p);
      auto& pf = s.platform;
      t.opt("cohorts_max", [&](const Json& x, const std::string& q) { pf.cohorts_max = as_count(x, q); });
      t.opt("cohorts_initial", [&](const Json& x, const std::string& q) { pf.cohorts_initial = as_count(x, q); });
      t.opt("cohort_random", [&](const Json& x, const std::string& q) { pf.cohort_random = as_real(x, q); });
      t.opt("cohort_offset", [&](const Json& x, const std::string& q) { pf.cohort_offset = as_count(x, q); });
      t.opt("safety_prob", [&](const Json& x, const std::string& q) { pf.safety_prob = as_real(x, q); });
      t.opt("sr_drugs_pos", [&](const Json& x, const std::string& q) { pf.sr_drugs_pos = as_count(x, q, true); });
      t.opt("sr_pats", [&](const Json& x, const std::string& q) { pf.sr_pats = as_count(x, q, true); });
      t.opt("sr_first_pos", [&](const Json& x, const std::string& q) { pf.sr_first_pos = as_bool(x, q); });
      t.opt("trial_struc", [&](const Json& x, const std::string& q) { pf.trial_struc = as_enum(x, q, kTrialStructures); });
      t.opt("sharing_type", [&](const Json& x, const std::string& q) { pf.sharing_type = as_enum(x, q, kSharingTypes); });
      t.opt("n_int", [&](const Json& x, const std::string& q) { pf.n_int = as_count(x, q); });
      t.opt("n_fin", [&](const Json& x, const std::string& q) { pf.n_fin = as_count(x, q); });
      t.opt("allocation_ratio", [&](const Json& x, const std::string& q) { pf.allocation_ratio = parse_allocation(x, q); });
      t.opt("run_out_active_cohorts", [&](const Json& x, const std::string& q) { pf.run_out_active_cohorts = as_bool(x, q); });
    });

    r.opt("prior", [&](const Json& v, const std::string& p) {
      Reader t(v, p);
      t.opt("alpha", [&](const Json& x, const std::string& q) { s.prior.alpha = as_real(x, q); });
      t.opt("beta", [&](const Json& x, const std::string& q) { s.prior.beta = as_real(x, q); });
    });

    {
      Reader t(r.at("rules"), "rules");
      t.opt("interim", [&](const Json& x, const std::string& q) { s.rules.interim = parse_stage(x, q); });
      t.opt("final", [&](const Json& x, const std::string& q) { s.rules.final = parse_stage(x, q); });
    }
  }

  const auto report = validate(s);
  if (!report.ok()) throw ConfigError(report.errors.front().field, report.errors.front().message);
  return s;
}

inline ScenarioSpec parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario_json(j);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ScenarioSpec load_scenario(const std::string& path) { return parse_scenario(read_text_file(path)); }

inline Json to_json(const ScenarioSpec& s) {
  using namespace detail;
  Json j;
  j["id"] = s.id;

  Json e;
  e["random"] = s.efficacy.random;
  e["random_type"] = enum_string(s.efficacy.random_type, kRandomTypes);
  e["comb"] = dist_json(s.efficacy.comb);
  e["mono_a"] = dist_json(s.efficacy.mono_a);
  e["mono_b"] = dist_json(s.efficacy.mono_b);
  e["soc"] = dist_json(s.efficacy.soc);
  j["efficacy"] = e;

  Json ep;
  Json ts = Json::array();
  for (const auto& t : s.endpoint.transforms) {
    Json x;
    switch (t.kind) {
      case OutcomeTransform::Kind::identity: x["kind"] = "identity"; break;
      case OutcomeTransform::Kind::correlated:
        x["kind"] = "correlated";
        x["sens"] = t.sensitivity;
        x["spec"] = t.specificity;
        break;
      case OutcomeTransform::Kind::custom:
        throw ConfigError("endpoint.transforms", "custom transform \"" + t.name + "\" cannot be serialized");
    }
    ts.push_back(x);
  }
  ep["transforms"] = ts;
  ep["probs"] = s.endpoint.probs;
  j["endpoint"] = ep;

  Json t;
  t["margin_comb"] = real_json(s.target.margin_comb);
  t["margin_mono"] = real_json(s.target.margin_mono);
  t["scale"] = static_cast<int>(s.target.scale);
  t["strict"] = s.target.strict;
  j["target"] = t;

  const auto& pf = s.platform;
  Json p;
  p["cohorts_max"] = pf.cohorts_max;
  p["cohorts_initial"] = pf.cohorts_initial;
  p["cohort_random"] = pf.cohort_random;
  p["cohort_offset"] = pf.cohort_offset;
  p["safety_prob"] = pf.safety_prob;
  p["sr_drugs_pos"] = count_json(pf.sr_drugs_pos);
  p["sr_pats"] = count_json(pf.sr_pats);
  p["sr_first_pos"] = pf.sr_first_pos;
  p["trial_struc"] = enum_string(pf.trial_struc, kTrialStructures);
  p["sharing_type"] = enum_string(pf.sharing_type, kSharingTypes);
  p["n_int"] = pf.n_int;
  p["n_fin"] = pf.n_fin;
  p["allocation_ratio"] = pf.allocation_ratio;
  p["run_out_active_cohorts"] = pf.run_out_active_cohorts;
  j["platform"] = p;

  j["prior"] = {{"alpha", real_json(s.prior.alpha)}, {"beta", real_json(s.prior.beta)}};
  j["rules"] = {{"interim", stage_json(s.rules.interim)}, {"final", stage_json(s.rules.final)}};
  return j;
}

inline std::string serialize(const ScenarioSpec& s) { return to_json(s).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Grid expansion

struct GridAxis {
  std::string path;          // as given by the user
  std::vector<Json> values;
};

struct GridCell {
  ScenarioSpec spec;
  std::vector<std::pair<std::string, Json>> assignment;  // axis path -> value
};

namespace detail {

// Resolves an axis path to a JSON pointer into a serialized spec. Accepts a
// dotted path ("platform.n_int") or a bare key that is unique in the tree
// ("n_int").
inline Json::json_pointer resolve_axis(const Json& tree, const std::string& path) {
  auto scalar = [](const Json& v) { return v.is_primitive(); };
  if (path.find('.') != std::string::npos) {
    std::string ptr;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) ptr += "/" + part;
    const Json::json_pointer jp(ptr);
    if (!tree.contains(jp) || !scalar(tree.at(jp))) throw ConfigError(path, "unknown scalar field path");
    return jp;
  }
  std::vector<Json::json_pointer> hits;
  for (auto it = tree.begin(); it != tree.end(); ++it) {
    if (!it->is_object()) {
      if (it.key() == path && scalar(*it)) hits.emplace_back("/" + it.key());
      continue;
    }
    for (auto jt = it->begin(); jt != it->end(); ++jt)
      if (jt.key() == path && scalar(*jt)) hits.emplace_back("/" + it.key() + "/" + jt.key());
  }
  if (hits.empty()) throw ConfigError(path, "unknown scalar field path");
  if (hits.size() > 1) throw ConfigError(path, "ambiguous field name; use a dotted path");
  return hits.front();
}

inline std::string value_label(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return num(v.get<double>());
  return v.dump();
}

}  // namespace detail

inline std::vector<GridAxis> parse_axes(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<axes>", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<axes>", "must be an object mapping field paths to value lists");
  std::vector<GridAxis> axes;
  for (auto it = j.begin(); it != j.end(); ++it) {
    GridAxis a{it.key(), {}};
    if (it->is_array()) {
      for (const auto& v : *it) a.values.push_back(v);
    } else {
      a.values.push_back(*it);
    }
    if (a.values.empty()) throw ConfigError(it.key(), "axis must have at least one value");
    axes.push_back(std::move(a));
  }
  return axes;
}

// Cartesian product of the axes, row-major in declaration order (the last
// axis varies fastest). Each cell is re-parsed and validated.
inline std::vector<GridCell> expand_grid(const ScenarioSpec& base, const std::vector<GridAxis>& axes) {
  const Json tree = to_json(base);
  std::vector<Json::json_pointer> ptrs;
  for (const auto& a : axes) ptrs.push_back(detail::resolve_axis(tree, a.path));

  std::size_t total = 1;
  for (const auto& a : axes) total *= a.values.size();

  std::vector<GridCell> out;
  out.reserve(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    Json cell = tree;
    GridCell g;
    std::string label;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const Json& v = axes[k].values[idx[k]];
      cell[ptrs[k]] = v;
      g.assignment.emplace_back(axes[k].path, v);
      label += (label.empty() ? "" : ",") + axes[k].path + "=" + detail::value_label(v);
    }
    if (!axes.empty()) cell["id"] = base.id + "[" + label + "]";
    try {
      g.spec = parse_scenario_json(cell);
    } catch (const ConfigError& e) {
      throw ConfigError(e.field(), e.constraint() + " (grid cell " + std::to_string(n) + ": " + label + ")");
    }
    if (axes.empty()) g.spec = base;
    out.push_back(std::move(g));

    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++idx[k] < axes[k].values.size()) break;
      idx[k] = 0;
    }
  }
  return out;
}

}  // namespace cohortplat
