#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmufdl/fdla.hpp"
#include "pmufdl/simulation.hpp"

namespace pmufdl {

enum class Outcome { kDetectedLocalized, kDetectedNotLocalized, kNotDetectedLocalized,
                     kNotDetectedNotLocalized };

std::string toString(Outcome outcome);

struct CampaignOptions {
  std::size_t runs = 100;
  std::uint64_t base_seed = 1;
  NoiseParams noise;        // used to synthesize measurements
  NoiseParams model_noise;  // used to build R
  FdlaConfig config;
  bool keep_traces = false;
};

struct RunRecord {
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kNotDetectedNotLocalized;
  bool detected = false;       // alarm raised at the fault-onset sample
  double detection_time = 0.0;
  int cluster = -1;            // alpha, or post-hoc argmin when not detected
  int false_alarms = 0;        // alarms before the fault onset
  bool characterized = false;  // phases match the fault type
  std::string fault_label;
  FdlaReport report;           // only with keep_traces
};

struct ScenarioResult {
  FaultScenario scenario;
  int true_cluster = -1;
  int dl = 0, dnl = 0, ndl = 0, ndnl = 0;
  int characterized = 0;
  int false_alarms = 0;  // summed over runs
  double fault_current = 0.0;  // largest phase magnitude, A
  std::vector<RunRecord> runs;

  double detectionRate() const;
  double localizationRate() const;  // detected and localized / runs
};

struct CampaignResult {
  std::vector<ScenarioResult> scenarios;
};

/// One Monte-Carlo run: fault-free calibration record, then a stream from
/// t = 0 through fault_time + duration.
RunRecord runScenarioOnce(const GridModel& grid, const NodeSet& monitored,
                          const ClusterPartition& partition, const FaultScenario& scenario,
                          const SteadyState& pre, const SteadyState& post,
                          const CampaignOptions& options, std::uint64_t seed,
                          bool parallel_bank = false);

/// Runs are distributed over OpenMP threads.
CampaignResult runCampaign(const GridModel& grid, const NodeSet& monitored,
                           const std::vector<FaultScenario>& scenarios,
                           const CampaignOptions& options);
/// Sequential reference of runCampaign(); bit-identical results.
CampaignResult runCampaignSerial(const GridModel& grid, const NodeSet& monitored,
                                 const std::vector<FaultScenario>& scenarios,
                                 const CampaignOptions& options);

/// Scenario files: {"scenarios": [{"line": "4-5", "position": 0.5,
/// "type": "3-phase", "resistance": 100, ...}]}. With "line" the position
/// counts from the first named node; "branch": id counts from the branch
/// from-end.
std::vector<FaultScenario> parseScenarios(const nlohmann::json& j, const GridModel& grid);
std::vector<FaultScenario> loadScenarios(const std::string& path, const GridModel& grid);
nlohmann::json campaignToJson(const CampaignResult& result, const GridModel& grid);

}  // namespace pmufdl
