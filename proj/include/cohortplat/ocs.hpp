#pragma once

// Operating characteristics over many simulated trials.
//
// Each trial is reduced to a TrialDigest as soon as it finishes. Digests are
// kept keyed by iteration index, so merging partial accumulators from any
// number of workers and finalizing in index order gives identical results.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohortplat/efficacy.hpp"
#include "cohortplat/error.hpp"
#include "cohortplat/scenario.hpp"
#include "cohortplat/trial.hpp"

namespace cohortplat {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct RateMoments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  friend bool operator==(const RateMoments&, const RateMoments&) = default;
};

// Everything the aggregate needs from one trial.
struct TrialDigest {
  std::size_t total_n = 0;
  std::array<std::size_t, kNumArms> n{};
  std::array<std::size_t, kNumArms> resp_final{};
  std::array<std::size_t, kNumArms> resp_interim{};
  std::array<RateMoments, kNumArms> true_rates;  // present arms of opened cohorts
  std::size_t cohorts = 0;
  ConfusionCounts confusion;
  std::size_t unsuccessful_final = 0;
  bool any_truly_futile = false;
  bool any_truly_superior = false;
  std::size_t safety_stops = 0;
  std::size_t interim_stops = 0;
  std::size_t interim_gos = 0;
  double perc_sup_th = 0.0;
  double perc_sup_real = 0.0;
  std::size_t soc_until_first_success = 0;
  std::size_t cohorts_until_first_success = 0;
  double soc_pool = 0.0;

  friend bool operator==(const TrialDigest&, const TrialDigest&) = default;
};

namespace detail {

// Share of allocation weight on arms whose true rate beats SoC by the
// monotherapy margin.
inline double superior_share(const CohortTruth& t, const ArmPresence& arms, const AllocationRatio& ratio,
                             const TargetProfile& target) {
  double sup = 0.0, all = 0.0;
  for (Arm a : kAllArms) {
    if (!arms[index(a)]) continue;
    const double w = ratio[index(a)];
    all += w;
    if (a != Arm::soc && exceeds_by_margin(t.rate(a), t.pi_soc, target.margin_mono, target)) sup += w;
  }
  return all > 0.0 ? sup / all : 0.0;
}

}  // namespace detail

inline TrialDigest digest(const TrialResult& r, const ScenarioSpec& spec) {
  const auto& ratio = spec.platform.allocation_ratio;
  TrialDigest d;
  d.total_n = r.total_n;
  d.cohorts = r.cohorts.size();
  std::size_t sup_patients = 0;
  double ratio_total = 0.0;
  for (Arm a : kAllArms) ratio_total += ratio[index(a)];

  for (const auto& c : r.cohorts) {
    for (Arm a : kAllArms) {
      const auto& t = c.tally[index(a)];
      d.n[index(a)] += t.n;
      d.resp_final[index(a)] += t.responders_final();
      d.resp_interim[index(a)] += t.responders_interim();
      if (c.arms[index(a)]) d.true_rates[index(a)].add(c.truth.rate(a));
      if (a != Arm::soc &&
          exceeds_by_margin(c.truth.rate(a), c.truth.pi_soc, spec.target.margin_mono, spec.target))
        sup_patients += t.n;
    }
    if (c.truth_class == TruthClass::futile) d.any_truly_futile = true;
    if (c.truth_class == TruthClass::superior) d.any_truly_superior = true;
    if (const auto conf = classify_decision(c)) {
      switch (*conf) {
        case Confusion::tp: ++d.confusion.tp; break;
        case Confusion::fp: ++d.confusion.fp; break;
        case Confusion::tn: ++d.confusion.tn; break;
        case Confusion::fn: ++d.confusion.fn; break;
      }
    }
    switch (c.status) {
      case CohortStatus::stopped_safety: ++d.safety_stops; break;
      case CohortStatus::stopped_interim_futility: ++d.interim_stops; break;
      case CohortStatus::stopped_interim_efficacy: ++d.interim_gos; break;
      case CohortStatus::completed_unsuccessful: ++d.unsuccessful_final; break;
      default: break;
    }
    d.soc_pool += ratio_total > 0.0 ? static_cast<double>(c.size()) * ratio[index(Arm::soc)] / ratio_total : 0.0;
  }

  // Theoretical share: cohorts that never opened are assumed to enter with
  // the arm structure in force at the end of the trial.
  double th = 0.0;
  const std::size_t planned = r.planned_truths.size();
  for (std::size_t k = 0; k < planned; ++k) {
    const auto& arms = k < r.cohorts.size() ? r.cohorts[k].arms : r.arms_for_new_cohort;
    th += detail::superior_share(r.planned_truths[k], arms, ratio, spec.target);
  }
  d.perc_sup_th = planned > 0 ? th / static_cast<double>(planned) : 0.0;
  d.perc_sup_real = r.total_n > 0 ? static_cast<double>(sup_patients) / static_cast<double>(r.total_n) : 0.0;

  if (r.first_success_index) {
    d.soc_until_first_success = r.soc_patients_at_first_success;
    d.cohorts_until_first_success = r.cohorts_at_first_success;
  } else {
    d.soc_until_first_success = d.n[index(Arm::soc)];
    d.cohorts_until_first_success = d.cohorts;
  }
  return d;
}

class OcsAccumulator {
 public:
  void add(std::size_t iteration, TrialDigest d) {
    if (!digests_.emplace(iteration, std::move(d)).second)
      throw RuntimeError("OcsAccumulator: iteration " + std::to_string(iteration) + " added twice");
  }

  // Combines two accumulators built from disjoint iteration sets.
  void merge(const OcsAccumulator& other) {
    for (const auto& [k, v] : other.digests_)
      if (digests_.count(k))
        throw RuntimeError("OcsAccumulator::merge: overlapping iteration index " + std::to_string(k));
    for (const auto& [k, v] : other.digests_) digests_.emplace(k, v);
  }

  std::size_t size() const noexcept { return digests_.size(); }
  bool empty() const noexcept { return digests_.empty(); }
  const std::map<std::size_t, TrialDigest>& digests() const noexcept { return digests_; }

  friend bool operator==(const OcsAccumulator&, const OcsAccumulator&) = default;

 private:
  std::map<std::size_t, TrialDigest> digests_;
};

inline OcsAccumulator merge(OcsAccumulator a, const OcsAccumulator& b) {
  a.merge(b);
  return a;
}

struct OcValue {
  std::string name;
  double value;
  bool undefined;  // 0/0; value reported as 0
};

struct OperatingCharacteristics {
  std::size_t iterations = 0;
  std::vector<OcValue> values;  // fixed column order
  // per-trial vectors in iteration order; nullopt where undefined
  std::vector<std::pair<std::string, std::vector<std::optional<double>>>> dists;
  std::vector<std::size_t> iteration_index;

  const OcValue& at(const std::string& name) const {
    for (const auto& v : values)
      if (v.name == name) return v;
    throw RuntimeError("unknown operating characteristic " + name);
  }
  double operator[](const std::string& name) const { return at(name).value; }

  const std::vector<std::optional<double>>& dist(const std::string& name) const {
    for (const auto& d : dists)
      if (d.first == name) return d.second;
    throw RuntimeError("unknown distribution " + name);
  }
};

inline const std::vector<std::string>& oc_column_names() {
  static const std::vector<std::string> names{
      "Avg_Pat", "Avg_Pat_Comb", "Avg_Pat_Mono", "Avg_Pat_Back", "Avg_Pat_Plac",
      "Avg_RR_Comb", "Avg_RR_Mono", "Avg_RR_Back", "Avg_RR_Plac",
      "SD_RR_Comb", "SD_RR_Mono", "SD_RR_Back", "SD_RR_Plac",
      "Avg_Suc_Hist", "Avg_Suc_Hist_Comb", "Avg_Suc_Hist_Mono", "Avg_Suc_Hist_Back", "Avg_Suc_Hist_Plac",
      "Avg_Suc_Bio", "Avg_Suc_Bio_Comb", "Avg_Suc_Bio_Mono", "Avg_Suc_Bio_Back", "Avg_Suc_Bio_Plac",
      "Avg_Cohorts", "Avg_TP", "Avg_FP", "Avg_TN", "Avg_FN",
      "FDR", "PTP", "PTT1ER", "FWER", "FWER_BA", "Disj_Power", "Disj_Power_BA",
      "Avg_Perc_Pat_Sup_Plac_Th", "Avg_Perc_Pat_Sup_Plac_Real",
      "Avg_Pat_Plac_First_Suc", "Avg_Pat_Plac_Pool", "Avg_Cohorts_First_Suc", "Avg_any_P",
      "Coh_Safety_STOP_Perc", "Coh_Int_STOP_Perc", "Coh_Int_GO_Perc",
      "Avg_Safety_STOP_Trial", "Avg_Int_STOP_Trial", "Avg_Int_GO_Trial",
      "Avg_PTP_Trial", "Avg_PTT1ER_Trial", "Avg_FDR_Trial",
      "Avg_Unsuc_Final",
  };
  return names;
}

inline const std::vector<std::string>& oc_dist_names() {
  static const std::vector<std::string> names{"Dist_FWER", "Dist_FDR", "Dist_PTT1ER", "Dist_PTP",
                                              "Dist_Disj_Power"};
  return names;
}

namespace detail {

struct Ratio {
  double value;
  bool undefined;
};

inline Ratio ratio(double num, double den) {
  if (den == 0.0) return {0.0, true};
  return {num / den, false};
}

inline std::optional<double> opt_ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace detail

inline OperatingCharacteristics finalize(const OcsAccumulator& acc) {
  if (acc.empty()) throw RuntimeError("finalize: no trials to aggregate");
  using detail::ratio;
  const auto& ds = acc.digests();
  const double trials = static_cast<double>(ds.size());

  double total_n = 0, cohorts = 0, unsuccessful = 0;
  std::array<double, kNumArms> n{}, hist{}, bio{};
  std::array<RateMoments, kNumArms> rr;
  ConfusionCounts sum;
  double fwer_num = 0, fwer_den = 0, disj_num = 0, disj_den = 0;
  double th = 0, real = 0, soc_first = 0, coh_first = 0, pool = 0;
  double safety = 0, int_stop = 0, int_go = 0;
  double ptp_trial = 0, ptp_trial_n = 0, t1_trial = 0, t1_trial_n = 0, fdr_trial = 0, fdr_trial_n = 0;

  OperatingCharacteristics oc;
  oc.iterations = ds.size();
  std::vector<std::optional<double>> d_fwer, d_fdr, d_t1, d_ptp, d_disj;

  for (const auto& [iter, d] : ds) {
    oc.iteration_index.push_back(iter);
    total_n += static_cast<double>(d.total_n);
    cohorts += static_cast<double>(d.cohorts);
    unsuccessful += static_cast<double>(d.unsuccessful_final);
    for (std::size_t a = 0; a < kNumArms; ++a) {
      n[a] += static_cast<double>(d.n[a]);
      hist[a] += static_cast<double>(d.resp_final[a]);
      bio[a] += static_cast<double>(d.resp_interim[a]);
      rr[a].sum += d.true_rates[a].sum;
      rr[a].sum_sq += d.true_rates[a].sum_sq;
      rr[a].count += d.true_rates[a].count;
    }
    const auto& c = d.confusion;
    sum.tp += c.tp;
    sum.fp += c.fp;
    sum.tn += c.tn;
    sum.fn += c.fn;
    if (c.fp > 0) fwer_num += 1;
    if (d.any_truly_futile) fwer_den += 1;
    if (c.tp > 0) disj_num += 1;
    if (d.any_truly_superior) disj_den += 1;
    th += d.perc_sup_th;
    real += d.perc_sup_real;
    soc_first += static_cast<double>(d.soc_until_first_success);
    coh_first += static_cast<double>(d.cohorts_until_first_success);
    pool += d.soc_pool;
    safety += static_cast<double>(d.safety_stops);
    int_stop += static_cast<double>(d.interim_stops);
    int_go += static_cast<double>(d.interim_gos);

    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    const auto ptp = detail::opt_ratio(tp, tp + fn);
    const auto t1 = detail::opt_ratio(fp, fp + tn);
    const auto fdr = detail::opt_ratio(fp, fp + tp);
    if (ptp) ptp_trial += *ptp, ptp_trial_n += 1;
    if (t1) t1_trial += *t1, t1_trial_n += 1;
    if (fdr) fdr_trial += *fdr, fdr_trial_n += 1;
    d_ptp.push_back(ptp);
    d_t1.push_back(t1);
    d_fdr.push_back(fdr);
    d_fwer.push_back(d.any_truly_futile ? std::optional<double>(c.fp > 0 ? 1.0 : 0.0) : std::nullopt);
    d_disj.push_back(d.any_truly_superior ? std::optional<double>(c.tp > 0 ? 1.0 : 0.0) : std::nullopt);
  }

  auto put = [&](const char* name, detail::Ratio r) { oc.values.push_back({name, r.value, r.undefined}); };
  auto avg = [&](const char* name, double total) { put(name, {total / trials, false}); };

  avg("Avg_Pat", total_n);
  avg("Avg_Pat_Comb", n[0]);
  avg("Avg_Pat_Mono", n[1]);
  avg("Avg_Pat_Back", n[2]);
  avg("Avg_Pat_Plac", n[3]);
  const char* avg_rr[] = {"Avg_RR_Comb", "Avg_RR_Mono", "Avg_RR_Back", "Avg_RR_Plac"};
  const char* sd_rr[] = {"SD_RR_Comb", "SD_RR_Mono", "SD_RR_Back", "SD_RR_Plac"};
  for (std::size_t a = 0; a < kNumArms; ++a) put(avg_rr[a], ratio(rr[a].sum, static_cast<double>(rr[a].count)));
  for (std::size_t a = 0; a < kNumArms; ++a) {
    const double k = static_cast<double>(rr[a].count);
    if (rr[a].count < 2) {
      put(sd_rr[a], {0.0, true});
    } else {
      const double mean = rr[a].sum / k;
      const double var = std::max(0.0, (rr[a].sum_sq - k * mean * mean) / (k - 1.0));
      put(sd_rr[a], {std::sqrt(var), false});
    }
  }
  avg("Avg_Suc_Hist", hist[0] + hist[1] + hist[2] + hist[3]);
  avg("Avg_Suc_Hist_Comb", hist[0]);
  avg("Avg_Suc_Hist_Mono", hist[1]);
  avg("Avg_Suc_Hist_Back", hist[2]);
  avg("Avg_Suc_Hist_Plac", hist[3]);
  avg("Avg_Suc_Bio", bio[0] + bio[1] + bio[2] + bio[3]);
  avg("Avg_Suc_Bio_Comb", bio[0]);
  avg("Avg_Suc_Bio_Mono", bio[1]);
  avg("Avg_Suc_Bio_Back", bio[2]);
  avg("Avg_Suc_Bio_Plac", bio[3]);
  avg("Avg_Cohorts", cohorts);

  const double tp = static_cast<double>(sum.tp), fp = static_cast<double>(sum.fp);
  const double tn = static_cast<double>(sum.tn), fn = static_cast<double>(sum.fn);
  avg("Avg_TP", tp);
  avg("Avg_FP", fp);
  avg("Avg_TN", tn);
  avg("Avg_FN", fn);
  put("FDR", ratio(fp, fp + tp));
  put("PTP", ratio(tp, tp + fn));
  put("PTT1ER", ratio(fp, fp + tn));
  put("FWER", ratio(fwer_num, fwer_den));
  put("FWER_BA", ratio(fwer_num, trials));
  put("Disj_Power", ratio(disj_num, disj_den));
  put("Disj_Power_BA", ratio(disj_num, trials));
  avg("Avg_Perc_Pat_Sup_Plac_Th", th);
  avg("Avg_Perc_Pat_Sup_Plac_Real", real);
  avg("Avg_Pat_Plac_First_Suc", soc_first);
  avg("Avg_Pat_Plac_Pool", pool);
  avg("Avg_Cohorts_First_Suc", coh_first);
  avg("Avg_any_P", disj_den);
  put("Coh_Safety_STOP_Perc", ratio(safety, cohorts));
  put("Coh_Int_STOP_Perc", ratio(int_stop, cohorts));
  put("Coh_Int_GO_Perc", ratio(int_go, cohorts));
  avg("Avg_Safety_STOP_Trial", safety);
  avg("Avg_Int_STOP_Trial", int_stop);
  avg("Avg_Int_GO_Trial", int_go);
  put("Avg_PTP_Trial", ratio(ptp_trial, ptp_trial_n));
  put("Avg_PTT1ER_Trial", ratio(t1_trial, t1_trial_n));
  put("Avg_FDR_Trial", ratio(fdr_trial, fdr_trial_n));
  avg("Avg_Unsuc_Final", unsuccessful);

  oc.dists = {{"Dist_FWER", std::move(d_fwer)},
              {"Dist_FDR", std::move(d_fdr)},
              {"Dist_PTT1ER", std::move(d_t1)},
              {"Dist_PTP", std::move(d_ptp)},
              {"Dist_Disj_Power", std::move(d_disj)}};
  return oc;
}

// ---------------------------------------------------------------------------
// Serialization

// Shortest representation that round-trips; locale independent.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Leading columns (scenario id, grid axes) followed by every OC column.
struct CsvPrefix {
  std::vector<std::pair<std::string, std::string>> columns;
};

inline std::string oc_csv_header(const CsvPrefix& prefix = {}) {
  std::string line;
  for (const auto& [k, v] : prefix.columns) line += csv_escape(k) + ",";
  line += "Iterations";
  for (const auto& name : oc_column_names()) line += "," + name;
  return line + "\n";
}

inline std::string oc_csv_row(const OperatingCharacteristics& oc, const CsvPrefix& prefix = {}) {
  std::string line;
  for (const auto& [k, v] : prefix.columns) line += csv_escape(v) + ",";
  line += std::to_string(oc.iterations);
  for (const auto& v : oc.values) line += "," + format_number(v.value);
  return line + "\n";
}

inline nlohmann::ordered_json oc_json(const OperatingCharacteristics& oc, const std::string& scenario_id) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_id;
  j["iterations"] = oc.iterations;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  nlohmann::ordered_json undefined = nlohmann::ordered_json::array();
  for (const auto& v : oc.values) {
    values[v.name] = v.value;
    if (v.undefined) undefined.push_back(v.name);
  }
  j["ocs"] = values;
  j["undefined"] = undefined;
  nlohmann::ordered_json dists = nlohmann::ordered_json::object();
  for (const auto& [name, vec] : oc.dists) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& x : vec) {
      if (x) a.push_back(*x);
      else a.push_back(nullptr);
    }
    dists[name] = a;
  }
  j["dists"] = dists;
  return j;
}

}  // namespace cohortplat
