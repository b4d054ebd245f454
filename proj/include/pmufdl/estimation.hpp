#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pmufdl/grid.hpp"

namespace pmufdl {

/// PMU noise standard deviations. Magnitude terms are fractions of the true
/// magnitude; phase terms are radians.
struct NoiseParams {
  double voltage_magnitude = 1.6e-5;
  double current_magnitude = 4e-3;
  double voltage_phase = 5.1e-5;
  double current_phase = 5.8e-3;
  double sample_period = 0.02;
  /// Current magnitude (A) used when a channel's operating point is ~zero.
  double nominal_current = 10.0;
};

/// Raised when H^T R^-1 H is rank deficient.
class UnobservableError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Index map for the state and measurement vectors.
///
/// State (length 6n): real parts of all phase triplets by ascending node id,
/// then all imaginary parts. Measurements (length 12d): z_V then z_I, each as
/// real triplets of the monitored nodes ascending followed by imaginary
/// triplets.
class MeasurementLayout {
 public:
  MeasurementLayout(std::size_t node_count, NodeSet monitored);

  std::size_t nodeCount() const { return node_count_; }
  std::size_t monitoredCount() const { return monitored_.size(); }
  const NodeSet& monitored() const { return monitored_; }
  Eigen::Index stateSize() const { return 6 * static_cast<Eigen::Index>(node_count_); }
  Eigen::Index measurementSize() const {
    return 12 * static_cast<Eigen::Index>(monitored_.size());
  }

  Eigen::Index stateRe(NodeId node, int phase) const;
  Eigen::Index stateIm(NodeId node, int phase) const;
  /// `slot` is the position of the node in the monitored list.
  Eigen::Index voltageRe(std::size_t slot, int phase) const;
  Eigen::Index voltageIm(std::size_t slot, int phase) const;
  Eigen::Index currentRe(std::size_t slot, int phase) const;
  Eigen::Index currentIm(std::size_t slot, int phase) const;

 private:
  std::size_t node_count_;
  NodeSet monitored_;
};

/// Packs per-node phasors (indexed by node id - 1) into a measurement vector.
Eigen::VectorXd assembleMeasurement(const MeasurementLayout& layout,
                                    const std::vector<Vector3c>& voltages,
                                    const std::vector<Vector3c>& injections);
/// Complex node voltages (by node id - 1) from a state vector.
std::vector<Vector3c> stateVoltages(const MeasurementLayout& layout,
                                    const Eigen::VectorXd& x);
Eigen::VectorXd stateFromVoltages(const std::vector<Vector3c>& voltages);

struct MeasurementModel {
  MeasurementLayout layout;
  Eigen::MatrixXd H;
  Eigen::VectorXd variances;  // diagonal of R
  /// Channels whose operating point was ~zero and used the nominal magnitude.
  int fallback_channels = 0;
};

/// Real form [[Re Y, -Im Y], [Im Y, Re Y]] of a complex admittance matrix.
Eigen::MatrixXd realAdmittanceForm(const AdmittanceMatrix& y);

Eigen::MatrixXd buildMeasurementMatrix(const GridModel& grid,
                                       const NodeSet& monitored);

/// First-order polar-to-rectangular variance propagation. Returns
/// {var(re), var(im)} for a phasor with the given relative magnitude and
/// phase standard deviations.
std::pair<double, double> rectangularVariances(Complex phasor,
                                               double sigma_magnitude,
                                               double sigma_phase);

/// Diagonal R for a layout. Without an operating point every channel uses
/// the nominal magnitude with the rotation-averaged variance.
Eigen::VectorXd measurementVariances(const MeasurementLayout& layout,
                                     double nominal_voltage,
                                     const NoiseParams& noise,
                                     const std::optional<Eigen::VectorXd>& operating_point,
                                     int* fallback_channels = nullptr);

MeasurementModel buildMeasurementModel(
    const GridModel& grid, const NodeSet& monitored, const NoiseParams& noise,
    const std::optional<Eigen::VectorXd>& operating_point = std::nullopt);

struct EstimateResult {
  Eigen::VectorXd x_hat;
  double wmr = 0.0;
  BranchId hypothesis = 0;  // 0: no virtual node
  bool condition_ok = true;
};

/// Weighted least squares with a precomputed column-pivoted QR of
/// R^-1/2 H; reuse it across measurement vectors that share H and R.
class WlsEstimator {
 public:
  static constexpr double kRankTolerance = 1e-10;
  static constexpr double kConditionLimit = 1e12;

  explicit WlsEstimator(const MeasurementModel& model);

  EstimateResult estimate(const Eigen::VectorXd& z) const;
  /// Estimation-error covariance of `rows * x_hat`.
  Eigen::MatrixXd propagatedCovariance(const Eigen::MatrixXd& rows) const;
  double conditionEstimate() const { return condition_; }
  const MeasurementModel& model() const { return model_; }

 private:
  MeasurementModel model_;
  Eigen::VectorXd weights_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  double condition_ = 1.0;
};

EstimateResult wlsEstimate(const MeasurementModel& model, const Eigen::VectorXd& z);

/// (z - H x)^T R^-1 (z - H x).
double computeWmr(const MeasurementModel& model, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& x_hat);

}  // namespace pmufdl
