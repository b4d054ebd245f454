#include "pmufdl/simulation.hpp"

#include <cmath>

namespace pmufdl {

std::string toString(FaultType type) {
  switch (type) {
    case FaultType::kThreePhase: return "3-phase";
    case FaultType::kTwoPhase: return "2-phase";
    case FaultType::kOnePhaseGround: return "1-phase-g";
    case FaultType::kOnePhasePetersen: return "1-phase-p";
  }
  return "?";
}

FaultType parseFaultType(const std::string& text) {
  if (text == "3-phase" || text == "3ph" || text == "three_phase") return FaultType::kThreePhase;
  if (text == "2-phase" || text == "2ph" || text == "two_phase") return FaultType::kTwoPhase;
  if (text == "1-phase-g" || text == "1ph-g" || text == "one_phase_g") {
    return FaultType::kOnePhaseGround;
  }
  if (text == "1-phase-p" || text == "1ph-p" || text == "one_phase_p") {
    return FaultType::kOnePhasePetersen;
  }
  throw ModelError("unknown fault type '" + text + "'");
}

std::array<bool, 3> faultedPhases(FaultType type) {
  switch (type) {
    case FaultType::kThreePhase: return {true, true, true};
    case FaultType::kTwoPhase: return {true, true, false};
    default: return {true, false, false};
  }
}

void validateScenario(const GridModel& grid, const FaultScenario& s) {
  if (!grid.hasBranch(s.branch)) {
    throw ModelError("scenario references unknown branch " + std::to_string(s.branch));
  }
  if (!(s.position > 0.0 && s.position < 1.0)) {
    throw ModelError("fault position must lie in (0,1)");
  }
  if (!(s.resistance > 0.0)) throw ModelError("fault resistance must be positive");
  if (!(s.duration >= 0.0)) throw ModelError("fault duration must be nonnegative");
}

GridModel gridForFault(const GridModel& grid, FaultType type) {
  if (type == FaultType::kOnePhaseGround) return grid.withSolidGrounding();
  if (type == FaultType::kOnePhasePetersen) {
    bool petersen = false;
    for (const Node& n : grid.nodes()) {
      petersen = petersen || n.grounding.kind == GroundingKind::kPetersen;
    }
    if (!petersen) throw ModelError("1-phase-p fault needs a Petersen-grounded neutral");
  }
  return grid;
}

Matrix3c faultAdmittance(FaultType type, double resistance) {
  const double g = 1.0 / resistance;
  Matrix3c y = Matrix3c::Zero();
  switch (type) {
    case FaultType::kThreePhase:
      y.diagonal().setConstant(g);
      break;
    case FaultType::kTwoPhase: {
      // A and B each through R_f to a floating fault point
      const double h = 0.5 * g;
      y(0, 0) = h;
      y(1, 1) = h;
      y(0, 1) = -h;
      y(1, 0) = -h;
      break;
    }
    case FaultType::kOnePhaseGround:
    case FaultType::kOnePhasePetersen:
      y(0, 0) = g;
      break;
  }
  return y;
}

SteadyState solveSteadyState(const GridModel& input, const std::optional<FaultScenario>& fault) {
  if (input.sources().empty()) throw ModelError("steady-state solve needs a source");
  const std::size_t real_nodes = input.nodeCount();
  GridModel grid = input;
  NodeId fault_node = 0;
  if (fault) {
    validateScenario(input, *fault);
    SplitResult split;
    grid = splitBranch(gridForFault(input, fault->type), fault->branch, fault->position,
                       NodeKind::kVirtual, &split);
    fault_node = split.new_node;
  }
  AdmittanceMatrix y = buildAdmittance(grid);
  Matrix3c yf = Matrix3c::Zero();
  if (fault) {
    yf = faultAdmittance(fault->type, fault->resistance);
    y.block<3, 3>(3 * (fault_node - 1), 3 * (fault_node - 1)) += yf;
  }
  Eigen::VectorXcd j = Eigen::VectorXcd::Zero(y.rows());
  for (const Source& s : grid.sources()) {
    j.segment<3>(3 * (s.node - 1)) += sourceAdmittance(s) * s.emf;
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(y);
  if (!lu.isInvertible()) throw ModelError("singular network: isolated subnetwork");
  const Eigen::VectorXcd v = lu.solve(j);

  SteadyState out;
  out.kcl_residual = (y * v - j).norm() / std::max(j.norm(), 1e-300);
  const Eigen::VectorXcd inj = buildNetworkAdmittance(grid) * v;
  out.voltages.resize(real_nodes);
  out.injections.resize(real_nodes);
  for (std::size_t n = 0; n < real_nodes; ++n) {
    out.voltages[n] = v.segment<3>(3 * static_cast<Eigen::Index>(n));
    out.injections[n] = inj.segment<3>(3 * static_cast<Eigen::Index>(n));
  }
  if (fault) {
    out.fault_node = fault_node;
    out.fault_current = yf * v.segment<3>(3 * (fault_node - 1));
  }
  return out;
}

Complex addPolarNoise(Complex phasor, double sigma_magnitude, double sigma_phase,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double e_mag = normal(rng);
  const double e_phase = normal(rng);
  if (sigma_magnitude == 0.0 && sigma_phase == 0.0) return phasor;
  const double m = std::abs(phasor) * (1.0 + sigma_magnitude * e_mag);
  const double theta = std::arg(phasor) + sigma_phase * e_phase;
  return std::polar(m, theta);
}

Eigen::VectorXd trueMeasurement(const SteadyState& state, const MeasurementLayout& layout) {
  return assembleMeasurement(layout, state.voltages, state.injections);
}

std::vector<MeasurementSample> synthesizeMeasurements(
    const SteadyState& pre, const std::optional<SteadyState>& post, double fault_time,
    const MeasurementLayout& layout, const NoiseParams& noise, double start_time,
    std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<MeasurementSample> out;
  out.reserve(samples);
  const auto& ids = layout.monitored().ids();
  std::vector<Vector3c> v(layout.nodeCount(), Vector3c::Zero());
  std::vector<Vector3c> inj(layout.nodeCount(), Vector3c::Zero());
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = start_time + static_cast<double>(k) * noise.sample_period;
    const SteadyState& truth = (post && t >= fault_time - 1e-9) ? *post : pre;
    for (NodeId id : ids) {
      for (int p = 0; p < 3; ++p) {
        v[id - 1](p) = addPolarNoise(truth.voltages[id - 1](p), noise.voltage_magnitude,
                                     noise.voltage_phase, rng);
        inj[id - 1](p) = addPolarNoise(truth.injections[id - 1](p), noise.current_magnitude,
                                       noise.current_phase, rng);
      }
    }
    out.push_back({t, assembleMeasurement(layout, v, inj)});
  }
  return out;
}

NoiseParams zeroNoise(const NoiseParams& base) {
  NoiseParams n = base;
  n.voltage_magnitude = n.current_magnitude = n.voltage_phase = n.current_phase = 0.0;
  return n;
}

std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the three words
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

}  // namespace pmufdl
