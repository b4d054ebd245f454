#include "pmufdl/bank.hpp"

#include <cmath>

namespace pmufdl {

EstimatorBank::EstimatorBank(const GridModel& base_grid, const NodeSet& monitored,
                             const ClusterPartition& partition,
                             const NoiseParams& noise,
                             const std::optional<Eigen::VectorXd>& operating_point)
    : feg_(base_grid) {
  const GridModel base = base_grid.withMonitored(monitored);
  const auto single_line = computeSingleLineUfcs(base, monitored);
  if (single_line != partition.single_line_ufcs) {
    throw ModelError("cluster partition was computed for another monitored set");
  }
  feg_ = addFakeNodes(base, single_line).grid;

  estimators_.emplace_back(buildMeasurementModel(base, monitored, noise, operating_point));
  injection_rows_.emplace_back();
  injection_sigma_.push_back(0.0);

  for (std::size_t c = 0; c < partition.count(); ++c) {
    if (!partition.is_hypothesis[c]) continue;
    HypothesisInfo info;
    info.cluster = c;
    info.branch = partition.representative[c];
    SplitResult split;
    const GridModel hyp = extendWithVirtualNode(feg_, info.branch, 0.5, &split);
    info.virtual_node = split.new_node;
    hypotheses_.push_back(info);

    estimators_.emplace_back(buildMeasurementModel(hyp, monitored, noise, operating_point));
    const WlsEstimator& est = estimators_.back();
    const MeasurementLayout& layout = est.model().layout;
    const Eigen::MatrixXd script_hi = realAdmittanceForm(buildNetworkAdmittance(hyp));
    Eigen::MatrixXd rows(6, layout.stateSize());
    for (int p = 0; p < 3; ++p) {
      rows.row(p) = script_hi.row(layout.stateRe(info.virtual_node, p));
      rows.row(3 + p) = script_hi.row(layout.stateIm(info.virtual_node, p));
    }
    const Eigen::MatrixXd cov = est.propagatedCovariance(rows);
    double sigma = 0.0;
    for (int p = 0; p < 3; ++p) {
      sigma = std::max(sigma, std::sqrt(cov(p, p) + cov(3 + p, 3 + p)));
    }
    injection_rows_.push_back(std::move(rows));
    injection_sigma_.push_back(sigma);
  }
}

EstimateResult EstimatorBank::evaluateEntry(std::size_t entry,
                                            const Eigen::VectorXd& z) const {
  EstimateResult r = estimators_[entry].estimate(z);
  r.hypothesis = entry == 0 ? 0 : hypotheses_[entry - 1].branch;
  return r;
}

std::vector<EstimateResult> EstimatorBank::evaluate(const Eigen::VectorXd& z) const {
  std::vector<EstimateResult> out(estimators_.size());
  const auto count = static_cast<long>(estimators_.size());
#pragma omp parallel for schedule(static)
  for (long e = 0; e < count; ++e) {
    out[e] = evaluateEntry(static_cast<std::size_t>(e), z);
  }
  return out;
}

std::vector<EstimateResult> EstimatorBank::evaluateSerial(const Eigen::VectorXd& z) const {
  std::vector<EstimateResult> out;
  out.reserve(estimators_.size());
  for (std::size_t e = 0; e < estimators_.size(); ++e) out.push_back(evaluateEntry(e, z));
  return out;
}

Vector3c EstimatorBank::injection(std::size_t entry, const Eigen::VectorXd& x_hat) const {
  if (entry == 0 || entry >= estimators_.size()) {
    throw ModelError("bank entry " + std::to_string(entry) + " has no virtual node");
  }
  const Eigen::VectorXd v = injection_rows_[entry] * x_hat;
  Vector3c out;
  for (int p = 0; p < 3; ++p) out(p) = Complex(v(p), v(3 + p));
  return out;
}

std::vector<EstimateResult> estimateBank(const GridModel& base_grid,
                                         const ClusterPartition& partition,
                                         const NodeSet& monitored,
                                         const NoiseParams& noise,
                                         const Eigen::VectorXd& z) {
  return EstimatorBank(base_grid, monitored, partition, noise).evaluate(z);
}

}  // namespace pmufdl
