// Command-line front end: placement, clustering, simulation and FDLA runs.
#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pmufdl/campaign.hpp"
#include "pmufdl/grid_io.hpp"
#include "pmufdl/placement.hpp"
#include "pmufdl/stream_io.hpp"

namespace fs = std::filesystem;
using namespace pmufdl;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kMalformed = 1;
constexpr int kRejected = 2;

/// Failure that maps to exit code 2.
class Rejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string grid;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string monitored;
  NoiseParams noise;
  bool verify = false;
};

GridModel loadGridOrThrow(const Globals& g) {
  if (g.grid.empty()) throw ModelError("--grid is required");
  return loadGrid(g.grid);
}

NodeSet parseNodeList(const std::string& text) {
  std::vector<NodeId> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ModelError("bad node id '" + item + "' in node list");
    }
  }
  return NodeSet(std::move(ids));
}

NodeSet monitoredSet(const Globals& g, const GridModel& grid) {
  NodeSet set = g.monitored.empty() ? grid.monitoredNodes() : parseNodeList(g.monitored);
  for (NodeId id : set) {
    if (id < 1 || id > static_cast<NodeId>(grid.nodeCount())) {
      throw ModelError("monitored node " + std::to_string(id) + " is not in the grid");
    }
  }
  return set;
}

std::string joinIds(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + std::to_string(ids[i]);
  return s;
}

std::string lineName(const GridModel& grid, BranchId id) {
  const Branch& b = grid.branch(id);
  return std::to_string(b.from) + "-" + std::to_string(b.to);
}

fs::path outDir(const Globals& g) {
  fs::create_directories(g.out);
  return fs::path(g.out);
}

void writeJson(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  out << doc.dump(1) << '\n';
}

void printClusters(const GridModel& grid, const ClusterPartition& p) {
  std::cout << "clusters: " << p.count() << " (hypotheses " << p.hypothesisCount() << ")\n";
  for (std::size_t c = 0; c < p.count(); ++c) {
    std::cout << "  C" << c + 1 << (p.is_hypothesis[c] ? "" : " [no eligible line]") << ":";
    for (BranchId b : p.clusters[c]) std::cout << ' ' << lineName(grid, b);
    std::cout << '\n';
  }
  if (!p.single_line_ufcs.empty()) {
    std::cout << "single-line clusters (fake nodes):";
    for (BranchId b : p.single_line_ufcs) std::cout << ' ' << lineName(grid, b);
    std::cout << '\n';
  }
}

json clustersJson(const GridModel& grid, const ClusterPartition& p) {
  json list = json::array();
  for (std::size_t c = 0; c < p.count(); ++c) {
    json lines = json::array();
    for (BranchId b : p.clusters[c]) lines.push_back(lineName(grid, b));
    list.push_back({{"branches", p.clusters[c]},
                    {"lines", lines},
                    {"hypothesis", static_cast<bool>(p.is_hypothesis[c])},
                    {"representative", p.representative[c]}});
  }
  return list;
}

void requireHypothesisObservability(const GridModel& grid, const NodeSet& monitored) {
  const ObservabilityCheck t1 = checkHypothesisObservability(grid, monitored);
  if (!t1.ok) {
    throw Rejected("placement violates the observability condition at nodes " +
                   joinIds(t1.violations));
  }
}

// ---- place ----------------------------------------------------------------

struct PlaceArgs {
  std::string cost = "resolution";
  std::string force_split;
};

int cmdPlace(const Globals& g, const PlaceArgs& a) {
  const GridModel grid = loadGridOrThrow(g);
  CostOption option = CostOption::kResolution;
  if (a.cost == "uniform") {
    option = CostOption::kUniform;
  } else if (a.cost != "resolution") {
    throw ModelError("--cost must be uniform or resolution");
  }
  const auto start = std::chrono::steady_clock::now();
  const PlacementProblem problem = buildProblem(grid, option, parseNodeList(a.force_split));
  PlacementSolution s = solvePlacement(problem);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!s.feasible) throw Rejected("placement problem is infeasible");
  const NodeSet monitored = s.monitored();
  const ClusterPartition p = computeClusters(grid, monitored);
  s.r = static_cast<int>(p.count());

  std::vector<int> ids(monitored.begin(), monitored.end());
  std::cout << "cost option: " << a.cost << "\n"
            << "monitored: " << joinIds(ids) << "\n"
            << "d = " << s.d << "  cost = " << s.cost << "  r = " << s.r
            << (s.optimal ? "  (optimal)" : "") << "\n"
            << "solve time: " << std::fixed << std::setprecision(3) << seconds << " s\n"
            << std::defaultfloat;
  printClusters(grid, p);
  if (g.verify) {
    const PlacementSolution oracle = exhaustiveOracle(problem);
    const bool same = std::abs(oracle.cost - s.cost) < 1e-9;
    std::cout << "exhaustive check: " << (same ? "agrees" : "DISAGREES") << " (cost "
              << oracle.cost << ")\n";
    if (!same) throw Rejected("solver and exhaustive enumeration disagree");
  }
  const fs::path dir = outDir(g);
  writeJson(dir / "placement.json", {{"cost_option", a.cost},
                                      {"gamma", s.gamma},
                                      {"monitored", ids},
                                      {"d", s.d},
                                      {"cost", s.cost},
                                      {"r", s.r},
                                      {"clusters", clustersJson(grid, p)}});
  return kOk;
}

// ---- clusters / check-observability ---------------------------------------

int cmdClusters(const Globals& g, int trials) {
  const GridModel grid = loadGridOrThrow(g);
  const NodeSet monitored = monitoredSet(g, grid);
  requireHypothesisObservability(grid, monitored);
  const ClusterPartition p = computeClusters(grid, monitored);
  printClusters(grid, p);
  json doc{{"clusters", clustersJson(grid, p)}, {"r", p.count()}};
  int code = kOk;
  if (g.verify) {
    const EmpiricalClusterResult emp = empiricalClusterOracle(grid, monitored, trials, g.seed);
    const bool same = samePartition(eligibleRestriction(p, grid), emp.partition);
    std::cout << "empirical WMR grouping (" << trials << " trials): "
              << (same ? "agrees" : "DISAGREES") << ", max spread inside a group "
              << emp.max_relative_spread << "\n";
    doc["empirical_agrees"] = same;
    if (!same) code = kRejected;
  }
  writeJson(outDir(g) / "clusters.json", doc);
  return code;
}

int cmdCheckObservability(const Globals& g) {
  const GridModel grid = loadGridOrThrow(g);
  const NodeSet monitored = monitoredSet(g, grid);
  const ObservabilityCheck l1 = checkSufficientCondition(grid, monitored);
  const ObservabilityCheck t1 = checkHypothesisObservability(grid, monitored);
  std::cout << "sufficient condition (original grid): " << (l1.ok ? "holds" : "fails");
  if (!l1.ok) std::cout << " at nodes " << joinIds(l1.violations);
  std::cout << "\nall fault hypotheses observable: " << (t1.ok ? "yes" : "no");
  if (!t1.ok) std::cout << ", violations at nodes " << joinIds(t1.violations);
  std::cout << '\n';
  if (g.verify) {
    std::cout << "rank test (original grid): "
              << (rankObservabilityOracle(grid, monitored) ? "observable" : "unobservable")
              << '\n';
    int bad = 0;
    for (const Branch& b : grid.branches()) {
      if (!b.eligible) continue;
      if (!rankObservabilityOracle(extendWithVirtualNode(grid, b.id), monitored)) {
        std::cout << "  virtual node on " << lineName(grid, b.id) << ": unobservable\n";
        ++bad;
      }
    }
    std::cout << "rank test with virtual nodes: " << bad << " unobservable hypotheses\n";
  }
  return t1.ok ? kOk : kRejected;
}

// ---- simulate / run-fdla / campaign ---------------------------------------

struct ScenarioArgs {
  std::string file;
  std::size_t index = 0;
  std::string line;
  double position = 0.5;
  std::string type = "3-phase";
  double resistance = 100.0;
  double fault_time = 0.5;
  double duration = 0.5;
  std::size_t calibration = 50;
};

FaultScenario pickScenario(const ScenarioArgs& a, const GridModel& grid) {
  json entry;
  if (!a.file.empty()) {
    const auto list = loadScenarios(a.file, grid);
    if (a.index >= list.size()) throw ModelError("scenario index out of range");
    return list[a.index];
  }
  if (a.line.empty()) throw ModelError("give --scenarios FILE or --line A-B");
  entry = {{"line", a.line},         {"position", a.position},
           {"type", a.type},         {"resistance", a.resistance},
           {"fault_time", a.fault_time}, {"duration", a.duration}};
  return parseScenarios(json::array({entry}), grid).front();
}

int cmdSimulate(const Globals& g, const ScenarioArgs& a) {
  const GridModel grid = loadGridOrThrow(g);
  const NodeSet monitored = monitoredSet(g, grid);
  const FaultScenario sc = pickScenario(a, grid);
  const GridModel fault_grid = gridForFault(grid, sc.type);
  const SteadyState pre = solveSteadyState(fault_grid);
  const SteadyState post = solveSteadyState(fault_grid, sc);
  const MeasurementLayout layout(grid.nodeCount(), monitored);
  const double dt = g.noise.sample_period;
  auto samples = synthesizeMeasurements(pre, std::nullopt, 0.0, layout, g.noise,
                                        -static_cast<double>(a.calibration) * dt,
                                        a.calibration, deriveSeed(g.seed, 0));
  const auto count =
      static_cast<std::size_t>(std::llround((sc.fault_time + sc.duration) / dt)) + 1;
  const auto stream = synthesizeMeasurements(pre, post, sc.fault_time, layout, g.noise, 0.0,
                                             count, deriveSeed(g.seed, 1));
  samples.insert(samples.end(), stream.begin(), stream.end());

  const fs::path dir = outDir(g);
  std::ofstream csv(dir / "stream.csv");
  writeStream(csv, samples, layout);
  json truth{{"scenario", sc.label},
             {"line", lineName(grid, sc.branch)},
             {"type", toString(sc.type)},
             {"calibration_samples", a.calibration},
             {"fault_current_A",
              {std::abs(post.fault_current(0)), std::abs(post.fault_current(1)),
               std::abs(post.fault_current(2))}},
             {"kcl_residual", std::max(pre.kcl_residual, post.kcl_residual)}};
  writeJson(dir / "truth.json", truth);
  std::cout << "scenario: " << sc.label << "\n"
            << "fault current |I_A|,|I_B|,|I_C| = " << std::abs(post.fault_current(0)) << ", "
            << std::abs(post.fault_current(1)) << ", " << std::abs(post.fault_current(2))
            << " A\n"
            << "wrote " << samples.size() << " samples (" << a.calibration
            << " calibration) to " << (dir / "stream.csv").string() << "\n";
  return kOk;
}

int cmdRunFdla(const Globals& g, const std::string& stream_path, std::size_t calibration,
               const FdlaConfig& base_config) {
  const GridModel grid = loadGridOrThrow(g);
  const NodeSet monitored = monitoredSet(g, grid);
  requireHypothesisObservability(grid, monitored);
  const ClusterPartition partition = computeClusters(grid, monitored);
  const MeasurementLayout layout(grid.nodeCount(), monitored);
  const MeasurementStream stream = readStreamFile(stream_path, layout);
  if (stream.times.size() <= calibration) {
    throw ModelError(stream_path + ": needs more than " + std::to_string(calibration) +
                     " samples");
  }
  std::vector<Eigen::VectorXd> calib;
  Eigen::VectorXd op = Eigen::VectorXd::Zero(layout.measurementSize());
  for (std::size_t k = 0; k < calibration; ++k) {
    if (!stream.samples[k]) throw ModelError("calibration sample " + std::to_string(k) +
                                             " has missing channels");
    calib.push_back(*stream.samples[k]);
    op += *stream.samples[k];
  }
  op /= static_cast<double>(calibration);
  FdlaConfig config = base_config;
  config.calibration_window = calibration;
  config.mean_window = std::min(config.mean_window, calibration);

  const EstimatorBank bank(grid, monitored, partition, g.noise, op);
  FaultDetector detector(bank, config);
  detector.calibrate(calib);
  for (std::size_t k = calibration; k < stream.times.size(); ++k) {
    if (stream.samples[k]) {
      detector.step(stream.times[k], *stream.samples[k]);
    } else {
      detector.skip(stream.times[k]);
    }
  }
  const FdlaReport& rep = detector.report();
  const fs::path dir = outDir(g);
  {
    std::ofstream w(dir / "wmr.csv");
    writeWmrTrace(w, rep);
    std::ofstream i(dir / "injection.csv");
    writeInjectionTrace(i, rep, detector.injectionTrace());
  }
  json doc{{"detected", rep.detected},
           {"threshold", rep.threshold},
           {"skipped_samples", rep.skipped_times},
           {"condition_warning", rep.condition_warning}};
  std::cout << "threshold th_w = " << rep.threshold << "\n";
  if (rep.detected) {
    const auto& lines = partition.clusters[static_cast<std::size_t>(rep.cluster)];
    std::vector<std::string> names;
    for (BranchId b : lines) names.push_back(lineName(grid, b));
    std::cout << "fault detected at t = " << rep.detection_time << " s\n"
              << "faulted cluster: C" << rep.cluster + 1 << " {";
    for (std::size_t k = 0; k < names.size(); ++k) std::cout << (k ? ", " : "") << names[k];
    std::cout << "}\nfault type: " << rep.fault.label() << "\n";
    doc["detection_time"] = rep.detection_time;
    doc["cluster"] = rep.cluster + 1;
    doc["cluster_lines"] = names;
    doc["fault"] = rep.fault.label();
    doc["injection_sigma"] = rep.fault.sigma;
  } else {
    std::cout << "no fault detected\n";
  }
  if (!rep.skipped_times.empty()) {
    std::cout << "skipped " << rep.skipped_times.size() << " incomplete samples\n";
  }
  if (rep.condition_warning) std::cout << "warning: ill-conditioned estimator\n";
  writeJson(dir / "report.json", doc);
  return kOk;
}

int cmdCampaign(const Globals& g, const std::string& scenario_file, std::size_t runs,
                bool serial, const FdlaConfig& config) {
  const GridModel grid = loadGridOrThrow(g);
  const NodeSet monitored = monitoredSet(g, grid);
  requireHypothesisObservability(grid, monitored);
  const auto scenarios = loadScenarios(scenario_file, grid);
  CampaignOptions opt;
  opt.runs = runs;
  opt.base_seed = g.seed;
  opt.noise = g.noise;
  opt.model_noise = g.noise;
  opt.config = config;
  const auto start = std::chrono::steady_clock::now();
  const CampaignResult result = serial ? runCampaignSerial(grid, monitored, scenarios, opt)
                                       : runCampaign(grid, monitored, scenarios, opt);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::cout << std::left << std::setw(40) << "Fault" << std::right << std::setw(6) << "D-L"
            << std::setw(6) << "D-nL" << std::setw(6) << "nD-L" << std::setw(7) << "nD-nL"
            << std::setw(8) << "char." << std::setw(8) << "false" << '\n';
  for (const ScenarioResult& s : result.scenarios) {
    std::cout << std::left << std::setw(40) << s.scenario.label << std::right << std::setw(6)
              << s.dl << std::setw(6) << s.dnl << std::setw(6) << s.ndl << std::setw(7)
              << s.ndnl << std::setw(8) << s.characterized << std::setw(8) << s.false_alarms
              << '\n';
  }
  std::cout << "runs per scenario: " << runs << ", elapsed " << std::fixed
            << std::setprecision(1) << seconds << " s\n" << std::defaultfloat;

  const fs::path dir = outDir(g);
  json doc = campaignToJson(result, grid);
  doc["base_seed"] = g.seed;
  doc["runs"] = runs;
  writeJson(dir / "campaign.json", doc);
  std::ofstream log(dir / "runs.csv");
  log << "scenario,run,seed,outcome,cluster,detection_time,false_alarms,fault\n";
  for (std::size_t s = 0; s < result.scenarios.size(); ++s) {
    const auto& sr = result.scenarios[s];
    for (std::size_t k = 0; k < sr.runs.size(); ++k) {
      const RunRecord& r = sr.runs[k];
      log << s << ',' << k << ',' << r.seed << ',' << toString(r.outcome) << ','
          << r.cluster + 1 << ',' << (r.detected ? std::to_string(r.detection_time) : "")
          << ',' << r.false_alarms << ',' << r.fault_label << '\n';
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PMU-based fault detection and localization for radial distribution grids"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--grid", g.grid, "grid JSON file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed (64-bit unsigned)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--monitored", g.monitored,
                 "comma-separated monitored nodes (default: flags in the grid file)");
  app.add_option("--noise-vmag", g.noise.voltage_magnitude, "voltage magnitude sigma (fraction)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--noise-imag", g.noise.current_magnitude, "current magnitude sigma (fraction)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--noise-vphase", g.noise.voltage_phase, "voltage phase sigma (rad)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--noise-iphase", g.noise.current_phase, "current phase sigma (rad)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--noise-period", g.noise.sample_period, "sample period (s)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verify", g.verify, "cross-check results against the reference oracles");

  PlaceArgs place;
  auto* c_place = app.add_subcommand("place", "optimal PMU placement");
  c_place->add_option("--cost", place.cost, "uniform | resolution");
  c_place->add_option("--force-split", place.force_split, "comma-separated fork nodes");

  int trials = 20;
  auto* c_clusters = app.add_subcommand("clusters", "fault localization clusters");
  c_clusters->add_option("--trials", trials, "measurement draws for --verify");

  auto* c_obs = app.add_subcommand("check-observability", "observability conditions");

  ScenarioArgs sa;
  auto* c_sim = app.add_subcommand("simulate", "synthesize a PMU stream for one fault");
  c_sim->add_option("--scenarios", sa.file, "scenario JSON file")->check(CLI::ExistingFile);
  c_sim->add_option("--index", sa.index, "scenario index in the file");
  c_sim->add_option("--line", sa.line, "faulted line a-b");
  c_sim->add_option("--position", sa.position, "fraction of the line from node a");
  c_sim->add_option("--type", sa.type, "3-phase | 2-phase | 1-phase-g | 1-phase-p");
  c_sim->add_option("--resistance", sa.resistance, "fault resistance (ohm)");
  c_sim->add_option("--fault-time", sa.fault_time, "fault onset (s)");
  c_sim->add_option("--duration", sa.duration, "fault duration (s)");
  c_sim->add_option("--calibration", sa.calibration, "fault-free samples before t = 0");

  FdlaConfig config;
  std::string stream_path;
  std::size_t calibration = 50;
  auto* c_fdla = app.add_subcommand("run-fdla", "detect and localize faults in a stream");
  c_fdla->add_option("--stream", stream_path, "measurement CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_fdla->add_option("--calibration", calibration, "leading fault-free samples");
  c_fdla->add_option("--threshold-factor", config.threshold_factor, "th_w multiplier");
  c_fdla->add_option("--mean-window", config.mean_window, "samples in the WMR means");

  std::string scenario_file = std::string(PMUFDL_DATA_DIR) + "/scenarios.json";
  std::size_t runs = 100;
  bool serial = false;
  auto* c_camp = app.add_subcommand("campaign", "Monte Carlo campaign");
  c_camp->add_option("--scenarios", scenario_file, "scenario JSON file")
      ->check(CLI::ExistingFile);
  c_camp->add_option("--runs", runs, "runs per scenario");
  c_camp->add_flag("--serial", serial, "disable parallel runs");
  c_camp->add_option("--threshold-factor", config.threshold_factor, "th_w multiplier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kMalformed;
  }

  try {
    if (*c_place) return cmdPlace(g, place);
    if (*c_clusters) return cmdClusters(g, trials);
    if (*c_obs) return cmdCheckObservability(g);
    if (*c_sim) return cmdSimulate(g, sa);
    if (*c_fdla) return cmdRunFdla(g, stream_path, calibration, config);
    if (*c_camp) return cmdCampaign(g, scenario_file, runs, serial, config);
  } catch (const Rejected& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRejected;
  } catch (const StreamMismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRejected;
  } catch (const PlacementViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRejected;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMalformed;
  }
  return kOk;
}
