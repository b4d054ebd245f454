#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pmufdl/estimation.hpp"
#include "pmufdl/grid.hpp"

namespace pmufdl {

enum class FaultType { kThreePhase, kTwoPhase, kOnePhaseGround, kOnePhasePetersen };

std::string toString(FaultType type);
FaultType parseFaultType(const std::string& text);
/// Phases carrying fault current: ABC, AB or A.
std::array<bool, 3> faultedPhases(FaultType type);

struct FaultScenario {
  BranchId branch = 0;
  double position = 0.5;
  FaultType type = FaultType::kThreePhase;
  double resistance = 100.0;  // ohm
  double fault_time = 0.5;    // s
  double duration = 0.5;      // s
  std::string label;
};

void validateScenario(const GridModel& grid, const FaultScenario& scenario);

/// Phasor solution restricted to the real nodes of the input grid (index
/// node id - 1). `injections` are the currents each node pushes into the
/// lines, i.e. what a PMU at that node measures.
struct SteadyState {
  std::vector<Vector3c> voltages;
  std::vector<Vector3c> injections;
  Vector3c fault_current = Vector3c::Zero();  // absorbed by the fault
  NodeId fault_node = 0;
  double kcl_residual = 0.0;  // relative
};

/// Grid variant the fault is simulated on: single-phase-to-ground faults use
/// solid grounding, single-phase Petersen faults need a Petersen neutral.
GridModel gridForFault(const GridModel& grid, FaultType type);

/// Fault admittance attached at the fault point.
Matrix3c faultAdmittance(FaultType type, double resistance);

/// Linear phasor solve of the grid (constant-impedance loads, Thevenin
/// sources), optionally with a fault inserted at a split point.
SteadyState solveSteadyState(const GridModel& grid,
                             const std::optional<FaultScenario>& fault = std::nullopt);

/// Polar noise: magnitude scaled by (1 + s_m e1), phase shifted by s_p e2.
Complex addPolarNoise(Complex phasor, double sigma_magnitude, double sigma_phase,
                      std::mt19937_64& rng);

struct MeasurementSample {
  double time = 0.0;
  Eigen::VectorXd z;
};

/// Noisy PMU stream: `samples` snapshots every sample_period starting at
/// `start_time`; `post` replaces `pre` from `fault_time` on. Deterministic
/// for a given seed.
std::vector<MeasurementSample> synthesizeMeasurements(
    const SteadyState& pre, const std::optional<SteadyState>& post,
    double fault_time, const MeasurementLayout& layout, const NoiseParams& noise,
    double start_time, std::size_t samples, std::uint64_t seed);

/// Noise-free counterpart, used as ground truth.
Eigen::VectorXd trueMeasurement(const SteadyState& state, const MeasurementLayout& layout);

NoiseParams zeroNoise(const NoiseParams& base = {});

std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace pmufdl
