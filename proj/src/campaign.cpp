#include "pmufdl/campaign.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace pmufdl {

using nlohmann::json;

std::string toString(Outcome outcome) {
  switch (outcome) {
    case Outcome::kDetectedLocalized: return "D-L";
    case Outcome::kDetectedNotLocalized: return "D-nL";
    case Outcome::kNotDetectedLocalized: return "nD-L";
    case Outcome::kNotDetectedNotLocalized: return "nD-nL";
  }
  return "?";
}

double ScenarioResult::detectionRate() const {
  return runs.empty() ? 0.0 : static_cast<double>(dl + dnl) / static_cast<double>(runs.size());
}

double ScenarioResult::localizationRate() const {
  return runs.empty() ? 0.0 : static_cast<double>(dl) / static_cast<double>(runs.size());
}

RunRecord runScenarioOnce(const GridModel& grid, const NodeSet& monitored,
                          const ClusterPartition& partition, const FaultScenario& scenario,
                          const SteadyState& pre, const SteadyState& post,
                          const CampaignOptions& options, std::uint64_t seed,
                          bool parallel_bank) {
  const MeasurementLayout layout(grid.nodeCount(), monitored);
  const double dt = options.noise.sample_period;
  const std::size_t calib_n = options.config.calibration_window;
  const auto calib = synthesizeMeasurements(pre, std::nullopt, 0.0, layout, options.noise,
                                            -static_cast<double>(calib_n) * dt, calib_n,
                                            deriveSeed(seed, 0));
  Eigen::VectorXd op = Eigen::VectorXd::Zero(layout.measurementSize());
  std::vector<Eigen::VectorXd> calib_z;
  for (const auto& s : calib) {
    op += s.z;
    calib_z.push_back(s.z);
  }
  op /= static_cast<double>(calib.size());

  const EstimatorBank bank(grid, monitored, partition, options.model_noise, op);
  FaultDetector detector(bank, options.config, parallel_bank);
  detector.calibrate(calib_z);

  const auto samples = static_cast<std::size_t>(
      std::llround((scenario.fault_time + scenario.duration) / dt)) + 1;
  const auto stream = synthesizeMeasurements(pre, post, scenario.fault_time, layout,
                                             options.noise, 0.0, samples, deriveSeed(seed, 1));
  std::size_t onset = samples;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    if (onset == samples && stream[k].time >= scenario.fault_time - 1e-9) onset = k;
    detector.step(stream[k].time, stream[k].z);
  }

  const FdlaReport& rep = detector.report();
  const int true_cluster = partition.clusterOf(scenario.branch);
  RunRecord rec;
  rec.seed = seed;
  const Alarm* at_onset = nullptr;
  for (const Alarm& a : rep.alarms) {
    if (a.index < onset) ++rec.false_alarms;
    if (a.index == onset) at_onset = &a;
  }
  rec.detected = at_onset != nullptr;
  if (rec.detected) {
    rec.detection_time = at_onset->time;
    rec.cluster = at_onset->cluster;
    rec.fault_label = at_onset->fault.label();
    const bool grounded = scenario.type == FaultType::kOnePhaseGround ||
                          scenario.type == FaultType::kOnePhasePetersen;
    rec.characterized = !at_onset->fault.indeterminate &&
                        at_onset->fault.phases == faultedPhases(scenario.type) &&
                        at_onset->fault.grounded == grounded;
  } else if (onset < rep.argmin_entry.size() && rep.argmin_entry[onset] > 0) {
    rec.cluster = static_cast<int>(bank.hypotheses()[rep.argmin_entry[onset] - 1].cluster);
  }
  const bool localized = rec.cluster >= 0 && rec.cluster == true_cluster;
  if (rec.detected) {
    rec.outcome = localized ? Outcome::kDetectedLocalized : Outcome::kDetectedNotLocalized;
  } else {
    rec.outcome = localized ? Outcome::kNotDetectedLocalized : Outcome::kNotDetectedNotLocalized;
  }
  if (options.keep_traces) rec.report = rep;
  return rec;
}

namespace {

CampaignResult campaign(const GridModel& grid, const NodeSet& monitored,
                        const std::vector<FaultScenario>& scenarios,
                        const CampaignOptions& options, bool parallel) {
  const GridModel base = grid.withMonitored(monitored);
  const ClusterPartition partition = computeClusters(base, monitored);
  CampaignResult result;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const FaultScenario& sc = scenarios[s];
    validateScenario(base, sc);
    const GridModel fault_grid = gridForFault(base, sc.type);
    const SteadyState pre = solveSteadyState(fault_grid);
    const SteadyState post = solveSteadyState(fault_grid, sc);

    ScenarioResult out;
    out.scenario = sc;
    out.true_cluster = partition.clusterOf(sc.branch);
    out.fault_current = post.fault_current.cwiseAbs().maxCoeff();
    out.runs.resize(options.runs);
    const auto runs = static_cast<long>(options.runs);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
      for (long k = 0; k < runs; ++k) {
        out.runs[k] = runScenarioOnce(base, monitored, partition, sc, pre, post, options,
                                      deriveSeed(options.base_seed, s, k));
      }
    } else {
      for (long k = 0; k < runs; ++k) {
        out.runs[k] = runScenarioOnce(base, monitored, partition, sc, pre, post, options,
                                      deriveSeed(options.base_seed, s, k));
      }
    }
    for (const RunRecord& r : out.runs) {
      switch (r.outcome) {
        case Outcome::kDetectedLocalized: ++out.dl; break;
        case Outcome::kDetectedNotLocalized: ++out.dnl; break;
        case Outcome::kNotDetectedLocalized: ++out.ndl; break;
        case Outcome::kNotDetectedNotLocalized: ++out.ndnl; break;
      }
      out.characterized += r.characterized ? 1 : 0;
      out.false_alarms += r.false_alarms;
    }
    result.scenarios.push_back(std::move(out));
  }
  return result;
}

BranchId branchFromLine(const std::string& text, const GridModel& grid) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) throw ModelError("line '" + text + "' is not of the form a-b");
  NodeId a = 0;
  NodeId b = 0;
  try {
    a = std::stoi(text.substr(0, dash));
    b = std::stoi(text.substr(dash + 1));
  } catch (const std::exception&) {
    throw ModelError("line '" + text + "' is not of the form a-b");
  }
  if (a < 1 || b < 1 || a > static_cast<NodeId>(grid.nodeCount()) ||
      b > static_cast<NodeId>(grid.nodeCount())) {
    throw ModelError("line '" + text + "' references an unknown node");
  }
  const BranchId id = grid.branchBetween(a, b);
  if (id == 0) throw ModelError("no branch between nodes " + text);
  return id;
}

}  // namespace

CampaignResult runCampaign(const GridModel& grid, const NodeSet& monitored,
                           const std::vector<FaultScenario>& scenarios,
                           const CampaignOptions& options) {
  return campaign(grid, monitored, scenarios, options, true);
}

CampaignResult runCampaignSerial(const GridModel& grid, const NodeSet& monitored,
                                 const std::vector<FaultScenario>& scenarios,
                                 const CampaignOptions& options) {
  return campaign(grid, monitored, scenarios, options, false);
}

std::vector<FaultScenario> parseScenarios(const json& j, const GridModel& grid) {
  const json& list = j.is_array() ? j : j.at("scenarios");
  std::vector<FaultScenario> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    const std::string where = "scenarios[" + std::to_string(i) + "]";
    try {
      FaultScenario s;
      s.position = e.value("position", 0.5);
      if (e.contains("branch")) {
        s.branch = e.at("branch").get<BranchId>();
      } else if (e.contains("line")) {
        // position counts from the first node named in "a-b"
        const std::string line = e.at("line").get<std::string>();
        s.branch = branchFromLine(line, grid);
        if (std::to_string(grid.branch(s.branch).from) != line.substr(0, line.find('-'))) {
          s.position = 1.0 - s.position;
        }
      } else {
        throw ModelError("needs \"branch\" or \"line\"");
      }
      s.type = parseFaultType(e.at("type").get<std::string>());
      s.resistance = e.value("resistance", 100.0);
      s.fault_time = e.value("fault_time", 0.5);
      s.duration = e.value("duration", 0.5);
      s.label = e.value("label", toString(s.type) + " on branch " + std::to_string(s.branch));
      validateScenario(grid, s);
      out.push_back(std::move(s));
    } catch (const ModelError& err) {
      throw ModelError(where + ": " + err.what());
    } catch (const json::exception& err) {
      throw ModelError(where + ": " + err.what());
    }
  }
  return out;
}

std::vector<FaultScenario> loadScenarios(const std::string& path, const GridModel& grid) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) line += text[i] == '\n';
    throw ModelError(path + ": line " + std::to_string(line) + ": " + e.what());
  }
  try {
    return parseScenarios(doc, grid);
  } catch (const ModelError& e) {
    throw ModelError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw ModelError(path + ": " + e.what());
  }
}

json campaignToJson(const CampaignResult& result, const GridModel& grid) {
  json out = json::array();
  for (const ScenarioResult& s : result.scenarios) {
    const Branch& b = grid.branch(s.scenario.branch);
    json runs = json::array();
    for (const RunRecord& r : s.runs) {
      runs.push_back({{"seed", r.seed},
                      {"outcome", toString(r.outcome)},
                      {"cluster", r.cluster},
                      {"detection_time", r.detected ? json(r.detection_time) : json(nullptr)},
                      {"false_alarms", r.false_alarms},
                      {"fault", r.fault_label}});
    }
    out.push_back({{"label", s.scenario.label},
                   {"line", std::to_string(b.from) + "-" + std::to_string(b.to)},
                   {"branch", b.id},
                   {"type", toString(s.scenario.type)},
                   {"position", s.scenario.position},
                   {"resistance", s.scenario.resistance},
                   {"true_cluster", s.true_cluster},
                   {"fault_current_A", s.fault_current},
                   {"D-L", s.dl},
                   {"D-nL", s.dnl},
                   {"nD-L", s.ndl},
                   {"nD-nL", s.ndnl},
                   {"characterized", s.characterized},
                   {"false_alarms", s.false_alarms},
                   {"runs", runs}});
  }
  return json{{"scenarios", out}};
}

}  // namespace pmufdl
