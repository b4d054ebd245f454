#pragma once

#include <optional>
#include <vector>

#include "pmufdl/estimation.hpp"
#include "pmufdl/observability.hpp"

namespace pmufdl {

struct HypothesisInfo {
  std::size_t cluster = 0;  // index into ClusterPartition::clusters
  BranchId branch = 0;      // representative; the virtual node sits on it
  NodeId virtual_node = 0;  // id in the hypothesis grid
};

/// The bank of WLS estimators evaluated at every time step: entry 0 is the
/// original grid without virtual nodes, entry l >= 1 the fake-node extended
/// grid with a midpoint virtual node on the representative of the l-th
/// hypothesis cluster. All entries share the measurement layout.
class EstimatorBank {
 public:
  EstimatorBank(const GridModel& base_grid, const NodeSet& monitored,
                const ClusterPartition& partition, const NoiseParams& noise,
                const std::optional<Eigen::VectorXd>& operating_point = std::nullopt);

  /// 1 + number of hypotheses.
  std::size_t size() const { return estimators_.size(); }
  const std::vector<HypothesisInfo>& hypotheses() const { return hypotheses_; }
  const GridModel& fakeExtendedGrid() const { return feg_; }
  const MeasurementLayout& layout() const { return estimators_.front().model().layout; }
  const WlsEstimator& estimator(std::size_t entry) const { return estimators_.at(entry); }

  /// Estimates for every entry; hypothesis entries evaluated in parallel.
  std::vector<EstimateResult> evaluate(const Eigen::VectorXd& z) const;
  /// Sequential reference of evaluate().
  std::vector<EstimateResult> evaluateSerial(const Eigen::VectorXd& z) const;

  /// Estimated phase currents injected at the virtual node of bank entry
  /// `entry` (>= 1).
  Vector3c injection(std::size_t entry, const Eigen::VectorXd& x_hat) const;
  /// Largest per-phase standard deviation of that injection estimate.
  double injectionSigma(std::size_t entry) const { return injection_sigma_.at(entry); }

 private:
  EstimateResult evaluateEntry(std::size_t entry, const Eigen::VectorXd& z) const;

  GridModel feg_;
  std::vector<HypothesisInfo> hypotheses_;
  std::vector<WlsEstimator> estimators_;
  std::vector<Eigen::MatrixXd> injection_rows_;
  std::vector<double> injection_sigma_;
};

/// One-shot evaluation of a bank.
std::vector<EstimateResult> estimateBank(const GridModel& base_grid,
                                         const ClusterPartition& partition,
                                         const NodeSet& monitored,
                                         const NoiseParams& noise,
                                         const Eigen::VectorXd& z);

}  // namespace pmufdl
