// Command-line front end: single trajectories, operating characteristics,
// grid sweeps and plot data.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cohortplat/cohortplat.hpp"

namespace fs = std::filesystem;
using namespace cohortplat;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << content;
  if (!out) throw RuntimeError("failed writing " + path.string());
}

std::size_t parse_workers(const std::string& s) {
  if (s == "auto") return 0;
  try {
    std::size_t used = 0;
    const long n = std::stol(s, &used);
    if (used == s.size() && n >= 1) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  throw ConfigError("--workers", "must be a positive integer or \"auto\"");
}

struct Formats {
  bool csv = true;
  bool json = true;
};

Formats parse_formats(const std::vector<std::string>& given) {
  if (given.empty()) return {};
  Formats f{false, false};
  for (const auto& g : given) {
    if (g == "csv") f.csv = true;
    else if (g == "json") f.json = true;
    else throw ConfigError("--format", "must be csv or json");
  }
  return f;
}

class Progress {
 public:
  Progress(std::string label, bool enabled) : label_(std::move(label)), enabled_(enabled) {}

  void operator()(std::size_t done, std::size_t total) {
    if (!enabled_) return;
    const std::size_t step = std::max<std::size_t>(1, total / 10);
    if (done % step == 0 || done == total)
      std::fprintf(stderr, "%s: %zu/%zu trials\n", label_.c_str(), done, total);
  }

 private:
  std::string label_;
  bool enabled_;
};

nlohmann::ordered_json manifest(const std::string& command, const ScenarioSpec& spec, std::uint64_t seed,
                                std::size_t iterations) {
  nlohmann::ordered_json m;
  m["tool"] = "cohortplat";
  m["version"] = kVersion;
  m["command"] = command;
  m["scenario"] = spec.id;
  m["spec_hash"] = hex64(fnv1a(serialize(spec)));
  m["seed"] = seed;
  m["iterations"] = iterations;
  return m;
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "cohortplat_out";
  std::size_t iterations = 1000;
  std::string workers = "auto";
  std::vector<std::string> formats;
  std::size_t dump = 0;
  bool quiet = false;
};

int cmd_simulate(const Common& o) {
  const ScenarioSpec spec = load_scenario(o.config);
  const auto result = simulate_trial(spec, RandomStream::derive(o.seed, 0, 0));
  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "trajectory.json", dump_trajectory(result, spec.id));

  std::cout << "Total_N: " << result.total_n << "\n";
  std::cout << "Successes: " << result.successes << "\n";
  for (const auto& c : result.cohorts) {
    const auto conf = classify_decision(c);
    std::cout << "cohort " << c.id << ": " << status_name(c.status) << " n=" << c.size()
              << " truth=" << (c.truth_class == TruthClass::superior ? "superior" : "futile")
              << " decision=" << (conf ? confusion_name(*conf) : std::string_view("-")) << "\n";
  }
  return 0;
}

void write_ocs(const fs::path& dir, const std::string& stem, const OperatingCharacteristics& oc,
               const ScenarioSpec& spec, const Formats& f, const CsvPrefix& prefix = {}) {
  if (f.csv) write_file(dir / (stem + ".csv"), oc_csv_header(prefix) + oc_csv_row(oc, prefix));
  if (f.json) write_file(dir / (stem + ".json"), oc_json(oc, spec.id).dump(2) + "\n");
}

RunOptions run_options(const Common& o, std::size_t scenario_index, const fs::path& dump_dir,
                       const std::string& id, Progress& progress) {
  RunOptions opt;
  opt.iterations = o.iterations;
  opt.seed = o.seed;
  opt.workers = parse_workers(o.workers);
  opt.scenario_index = scenario_index;
  opt.on_progress = [&progress](std::size_t d, std::size_t t) { progress(d, t); };
  if (o.dump > 0) {
    fs::create_directories(dump_dir);
    const std::size_t limit = o.dump;
    opt.on_trial = [dump_dir, limit, id](std::size_t k, const TrialResult& r) {
      if (k < limit) write_file(dump_dir / ("trial_" + std::to_string(k) + ".json"), dump_trajectory(r, id));
    };
  }
  return opt;
}

int cmd_ocs(const Common& o) {
  const ScenarioSpec spec = load_scenario(o.config);
  const Formats formats = parse_formats(o.formats);
  if (o.iterations < 1) throw ConfigError("--iterations", "must be >= 1");
  const fs::path dir(o.out);
  fs::create_directories(dir);

  Progress progress("ocs " + spec.id, !o.quiet);
  const auto oc = run_ocs(spec, run_options(o, 0, dir / "trajectories", spec.id, progress));
  write_ocs(dir, "ocs", oc, spec, formats);

  auto m = manifest("ocs", spec, o.seed, o.iterations);
  m["status"] = "ok";
  write_file(dir / "manifest.json", m.dump(2) + "\n");

  std::cout << "PTP: " << format_number(oc["PTP"]) << "\n";
  std::cout << "Disj_Power: " << format_number(oc["Disj_Power"]) << "\n";
  std::cout << "FWER_BA: " << format_number(oc["FWER_BA"]) << "\n";
  return 0;
}

int cmd_grid(const Common& o, const std::string& axes_path) {
  const ScenarioSpec base = load_scenario(o.config);
  const auto axes = axes_path.empty() ? std::vector<GridAxis>{} : parse_axes(read_text_file(axes_path));
  const auto cells = expand_grid(base, axes);
  const Formats formats = parse_formats(o.formats);
  if (o.iterations < 1) throw ConfigError("--iterations", "must be >= 1");

  const fs::path dir(o.out);
  fs::create_directories(dir / "scenarios");

  auto prefix_for = [&](const GridCell& c) {
    CsvPrefix p;
    p.columns.emplace_back("scenario", c.spec.id);
    for (const auto& [k, v] : c.assignment) p.columns.emplace_back(k, detail::value_label(v));
    return p;
  };

  std::string csv = oc_csv_header(prefix_for(cells.front()));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  auto m = manifest("grid", base, o.seed, o.iterations);
  nlohmann::ordered_json done = nlohmann::ordered_json::array();

  auto flush = [&]() {
    if (formats.csv) write_file(dir / "grid.csv", csv);
    if (formats.json) write_file(dir / "grid.json", rows.dump(2) + "\n");
    m["completed"] = done;
    write_file(dir / "manifest.json", m.dump(2) + "\n");
  };

  for (std::size_t s = 0; s < cells.size(); ++s) {
    const auto& cell = cells[s];
    try {
      Progress progress("grid " + std::to_string(s + 1) + "/" + std::to_string(cells.size()), !o.quiet);
      const auto oc = run_ocs(
          cell.spec, run_options(o, s, dir / "trajectories" / std::to_string(s), cell.spec.id, progress));
      const auto prefix = prefix_for(cell);
      csv += oc_csv_row(oc, prefix);
      auto j = oc_json(oc, cell.spec.id);
      nlohmann::ordered_json a = nlohmann::ordered_json::object();
      for (const auto& [k, v] : cell.assignment) a[k] = v;
      j["axes"] = a;
      rows.push_back(j);
      write_ocs(dir / "scenarios", std::to_string(s), oc, cell.spec, formats, prefix);
      done.push_back({{"index", s}, {"scenario", cell.spec.id}, {"spec_hash", hex64(fnv1a(serialize(cell.spec)))}});
    } catch (const std::exception& e) {
      m["status"] = "failed";
      m["error"] = {{"index", s}, {"scenario", cell.spec.id}, {"message", e.what()}};
      flush();
      throw;
    }
  }
  m["status"] = "ok";
  flush();
  std::cout << "scenarios: " << cells.size() << "\n";
  return 0;
}

int cmd_plot(const std::string& dump_path, const std::string& out) {
  std::string text;
  {
    std::ifstream in(dump_path, std::ios::binary);
    if (!in) throw RuntimeError("cannot open " + dump_path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto rows = load_plot_rows(text);
  fs::create_directories(out);
  write_file(fs::path(out) / "rates.csv", plot_rates_csv(rows));
  write_file(fs::path(out) / "pairs.csv", plot_pairs_csv(rows));
  std::cout << "rows: " << rows.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulation of cohort platform trials"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common sim, ocs, grid;
  std::string axes, dump_path, plot_out = "cohortplat_out";

  auto* s = app.add_subcommand("simulate", "Simulate one trial and write its trajectory dump");
  s->add_option("--config", sim.config, "Scenario file")->required();
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--out", sim.out, "Output directory");

  auto add_run = [](CLI::App* c, Common& o) {
    c->add_option("--config", o.config, "Scenario file")->required();
    c->add_option("--iterations", o.iterations, "Trials per scenario");
    c->add_option("--seed", o.seed, "Master seed");
    c->add_option("--workers", o.workers, "Worker threads or \"auto\"");
    c->add_option("--out", o.out, "Output directory");
    c->add_option("--format", o.formats, "Output formats (csv, json); default both")->delimiter(',');
    c->add_option("--dump-trajectories", o.dump, "Write trajectory dumps of the first N trials");
    c->add_flag("--quiet", o.quiet, "No progress output");
  };
  auto* o = app.add_subcommand("ocs", "Operating characteristics over many trials");
  add_run(o, ocs);
  auto* g = app.add_subcommand("grid", "Operating characteristics over a scenario grid");
  add_run(g, grid);
  g->add_option("--axes", axes, "Axes file mapping field paths to value lists");

  auto* p = app.add_subcommand("plot-data", "Plot-ready tables from a trajectory dump");
  p->add_option("dump", dump_path, "Trajectory dump")->required();
  p->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*o) return cmd_ocs(ocs);
    if (*g) return cmd_grid(grid, axes);
    if (*p) return cmd_plot(dump_path, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.field() << ": " << e.constraint() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
