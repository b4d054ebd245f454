#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "pmufdl/bank.hpp"

namespace pmufdl {

struct FdlaConfig {
  double threshold_factor = 1.2;
  std::size_t calibration_window = 50;
  std::size_t mean_window = 25;
  /// A phase counts as faulted above this fraction of the largest phase.
  double relative_phase_threshold = 0.1;
  /// Absolute floor for phases and residual current, in injection sigmas.
  double sigma_multiplier = 3.0;
};

/// th_w = factor * max |w0(t) - w0(t-1)| over the history.
double calibrateThreshold(const std::vector<double>& w0_history, const FdlaConfig& config);

struct FaultCharacterization {
  std::array<bool, 3> phases{false, false, false};
  bool grounded = false;
  bool indeterminate = true;
  Vector3c injection = Vector3c::Zero();
  double sigma = 0.0;

  /// "ABC", "AB", "A+g", ... or "indeterminate".
  std::string label() const;
};

FaultCharacterization characterizeFault(const Vector3c& injection, double sigma_injection,
                                        const FdlaConfig& config = {});

/// Same, from a hypothesis state estimate and that hypothesis' network
/// admittance.
FaultCharacterization characterizeFault(const Eigen::VectorXd& x_hat,
                                        const AdmittanceMatrix& extended_admittance,
                                        NodeId virtual_node, double sigma_injection,
                                        const FdlaConfig& config = {});

/// One threshold crossing of |w0(t) - w0(t-1)|.
struct Alarm {
  std::size_t index = 0;  // into FdlaReport::times
  double time = 0.0;
  std::size_t alpha = 0;  // bank entry with the smallest w - mu
  int cluster = -1;
  BranchId branch = 0;
  FaultCharacterization fault;
};

/// The first alarm is copied into the top-level fields.
struct FdlaReport {
  bool detected = false;
  std::size_t detection_index = 0;  // into times
  double detection_time = 0.0;
  std::size_t alpha = 0;            // bank entry, 0 when not detected
  int cluster = -1;                 // partition cluster of alpha
  BranchId branch = 0;              // representative of that cluster
  FaultCharacterization fault;
  double threshold = 0.0;
  std::vector<Alarm> alarms;

  std::vector<double> times;
  std::vector<std::vector<double>> wmr;            // [step][entry]
  std::vector<std::vector<Vector3c>> injections;   // [step][entry - 1]
  std::vector<std::size_t> argmin_entry;           // per step localization score argmin
  std::vector<double> skipped_times;
  bool condition_warning = false;
};

/// Online detector over one estimator bank. Keeps raising alarms after the
/// first one; the WMR means freeze at the first alarm.
class FaultDetector {
 public:
  FaultDetector(const EstimatorBank& bank, FdlaConfig config = {}, bool parallel = true);

  /// Fault-free history; at least calibration_window samples.
  void calibrate(const std::vector<Eigen::VectorXd>& samples);
  /// Processes one measurement; returns true when it raises an alarm.
  bool step(double time, const Eigen::VectorXd& z);
  /// Records a time step with missing measurements.
  void skip(double time);

  bool calibrated() const { return calibrated_; }
  const FdlaReport& report() const { return report_; }
  /// Injection trace of the reported (or most likely) hypothesis.
  std::vector<Vector3c> injectionTrace() const;

 private:
  std::vector<double> means() const;

  const EstimatorBank& bank_;
  FdlaConfig config_;
  bool parallel_;
  bool calibrated_ = false;
  double last_w0_ = 0.0;
  std::deque<std::vector<double>> window_;
  FdlaReport report_;
};

/// Runs the full loop over a recorded stream. `stream[k]` empty means the
/// sample at `times[k]` is missing.
FdlaReport runFdla(const EstimatorBank& bank, const std::vector<Eigen::VectorXd>& calibration,
                   const std::vector<double>& times,
                   const std::vector<std::optional<Eigen::VectorXd>>& stream,
                   const FdlaConfig& config = {});

}  // namespace pmufdl
