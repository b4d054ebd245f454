#include "pmufdl/estimation.hpp"

#include <algorithm>
#include <cmath>

namespace pmufdl {

namespace {

constexpr double kZeroMagnitude = 1e-6;      // relative to nominal
constexpr double kVarianceFloor = 1e-24;     // relative to nominal^2

}  // namespace

MeasurementLayout::MeasurementLayout(std::size_t node_count, NodeSet monitored)
    : node_count_(node_count), monitored_(std::move(monitored)) {
  for (NodeId id : monitored_) {
    if (id < 1 || id > static_cast<NodeId>(node_count_)) {
      throw ModelError("monitored node " + std::to_string(id) + " not in grid");
    }
  }
}

Eigen::Index MeasurementLayout::stateRe(NodeId node, int phase) const {
  return 3 * static_cast<Eigen::Index>(node - 1) + phase;
}

Eigen::Index MeasurementLayout::stateIm(NodeId node, int phase) const {
  return 3 * static_cast<Eigen::Index>(node_count_) + stateRe(node, phase);
}

Eigen::Index MeasurementLayout::voltageRe(std::size_t slot, int phase) const {
  return 3 * static_cast<Eigen::Index>(slot) + phase;
}

Eigen::Index MeasurementLayout::voltageIm(std::size_t slot, int phase) const {
  return 3 * static_cast<Eigen::Index>(monitored_.size()) + voltageRe(slot, phase);
}

Eigen::Index MeasurementLayout::currentRe(std::size_t slot, int phase) const {
  return 6 * static_cast<Eigen::Index>(monitored_.size()) + voltageRe(slot, phase);
}

Eigen::Index MeasurementLayout::currentIm(std::size_t slot, int phase) const {
  return 6 * static_cast<Eigen::Index>(monitored_.size()) + voltageIm(slot, phase);
}

Eigen::VectorXd assembleMeasurement(const MeasurementLayout& layout,
                                    const std::vector<Vector3c>& voltages,
                                    const std::vector<Vector3c>& injections) {
  Eigen::VectorXd z(layout.measurementSize());
  const auto& ids = layout.monitored().ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Vector3c& v = voltages.at(ids[k] - 1);
    const Vector3c& i = injections.at(ids[k] - 1);
    for (int p = 0; p < 3; ++p) {
      z(layout.voltageRe(k, p)) = v(p).real();
      z(layout.voltageIm(k, p)) = v(p).imag();
      z(layout.currentRe(k, p)) = i(p).real();
      z(layout.currentIm(k, p)) = i(p).imag();
    }
  }
  return z;
}

std::vector<Vector3c> stateVoltages(const MeasurementLayout& layout,
                                    const Eigen::VectorXd& x) {
  std::vector<Vector3c> out(layout.nodeCount());
  for (std::size_t n = 0; n < layout.nodeCount(); ++n) {
    const NodeId id = static_cast<NodeId>(n + 1);
    for (int p = 0; p < 3; ++p) {
      out[n](p) = Complex(x(layout.stateRe(id, p)), x(layout.stateIm(id, p)));
    }
  }
  return out;
}

Eigen::VectorXd stateFromVoltages(const std::vector<Vector3c>& voltages) {
  const Eigen::Index n = static_cast<Eigen::Index>(voltages.size());
  Eigen::VectorXd x(6 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int p = 0; p < 3; ++p) {
      x(3 * i + p) = voltages[i](p).real();
      x(3 * n + 3 * i + p) = voltages[i](p).imag();
    }
  }
  return x;
}

Eigen::MatrixXd realAdmittanceForm(const AdmittanceMatrix& y) {
  const Eigen::Index k = y.rows();
  Eigen::MatrixXd out(2 * k, 2 * k);
  out.topLeftCorner(k, k) = y.real();
  out.topRightCorner(k, k) = -y.imag();
  out.bottomLeftCorner(k, k) = y.imag();
  out.bottomRightCorner(k, k) = y.real();
  return out;
}

Eigen::MatrixXd buildMeasurementMatrix(const GridModel& grid,
                                       const NodeSet& monitored) {
  const MeasurementLayout layout(grid.nodeCount(), monitored);
  const Eigen::MatrixXd script_hi = realAdmittanceForm(buildNetworkAdmittance(grid));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(layout.measurementSize(),
                                            layout.stateSize());
  const auto& ids = monitored.ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    for (int p = 0; p < 3; ++p) {
      const Eigen::Index re = layout.stateRe(ids[k], p);
      const Eigen::Index im = layout.stateIm(ids[k], p);
      h(layout.voltageRe(k, p), re) = 1.0;
      h(layout.voltageIm(k, p), im) = 1.0;
      h.row(layout.currentRe(k, p)) = script_hi.row(re);
      h.row(layout.currentIm(k, p)) = script_hi.row(im);
    }
  }
  return h;
}

std::pair<double, double> rectangularVariances(Complex phasor,
                                               double sigma_magnitude,
                                               double sigma_phase) {
  const double m = std::abs(phasor);
  const double c = m > 0.0 ? phasor.real() / m : 1.0;
  const double s = m > 0.0 ? phasor.imag() / m : 0.0;
  const double radial = m * sigma_magnitude;
  const double tangential = m * sigma_phase;
  return {c * c * radial * radial + s * s * tangential * tangential,
          s * s * radial * radial + c * c * tangential * tangential};
}

Eigen::VectorXd measurementVariances(
    const MeasurementLayout& layout, double nominal_voltage,
    const NoiseParams& noise, const std::optional<Eigen::VectorXd>& operating_point,
    int* fallback_channels) {
  if (operating_point && operating_point->size() != layout.measurementSize()) {
    throw ModelError("operating point has the wrong length");
  }
  Eigen::VectorXd var(layout.measurementSize());
  int fallbacks = 0;
  for (std::size_t k = 0; k < layout.monitoredCount(); ++k) {
    for (int p = 0; p < 3; ++p) {
      for (int quantity = 0; quantity < 2; ++quantity) {
        const bool is_voltage = quantity == 0;
        const Eigen::Index re = is_voltage ? layout.voltageRe(k, p) : layout.currentRe(k, p);
        const Eigen::Index im = is_voltage ? layout.voltageIm(k, p) : layout.currentIm(k, p);
        const double nominal = is_voltage ? nominal_voltage : noise.nominal_current;
        const double sm = is_voltage ? noise.voltage_magnitude : noise.current_magnitude;
        const double sp = is_voltage ? noise.voltage_phase : noise.current_phase;
        std::pair<double, double> v;
        Complex phasor{nominal, 0.0};
        bool averaged = !operating_point.has_value();
        if (operating_point) {
          phasor = Complex((*operating_point)(re), (*operating_point)(im));
          if (std::abs(phasor) < kZeroMagnitude * nominal) {
            ++fallbacks;
            phasor = Complex{nominal, 0.0};
            averaged = true;
          }
        }
        if (averaged) {
          const double mean = 0.5 * nominal * nominal * (sm * sm + sp * sp);
          v = {mean, mean};
        } else {
          v = rectangularVariances(phasor, sm, sp);
        }
        const double floor = kVarianceFloor * nominal * nominal;
        var(re) = std::max(v.first, floor);
        var(im) = std::max(v.second, floor);
      }
    }
  }
  if (fallback_channels != nullptr) *fallback_channels = fallbacks;
  return var;
}

MeasurementModel buildMeasurementModel(
    const GridModel& grid, const NodeSet& monitored, const NoiseParams& noise,
    const std::optional<Eigen::VectorXd>& operating_point) {
  if (monitored.empty()) throw ModelError("monitored set is empty");
  MeasurementLayout layout(grid.nodeCount(), monitored);
  int fallbacks = 0;
  Eigen::VectorXd var = measurementVariances(layout, grid.nominalVoltage(), noise,
                                             operating_point, &fallbacks);
  return MeasurementModel{layout, buildMeasurementMatrix(grid, monitored),
                          std::move(var), fallbacks};
}

WlsEstimator::WlsEstimator(const MeasurementModel& model)
    : model_(model), weights_(model.variances.cwiseSqrt().cwiseInverse()) {
  if (model_.H.rows() != model_.variances.size()) {
    throw ModelError("H and R sizes disagree");
  }
  if (!(model_.variances.array() > 0.0).all()) {
    throw ModelError("R must have strictly positive diagonal entries");
  }
  const Eigen::MatrixXd a = weights_.asDiagonal() * model_.H;
  qr_.setThreshold(kRankTolerance);
  qr_.compute(a);
  if (a.rows() < a.cols() || qr_.rank() < a.cols()) {
    throw UnobservableError("grid with " + std::to_string(model_.layout.nodeCount()) +
                            " nodes is not observable from monitored nodes (rank " +
                            std::to_string(qr_.rank()) + " < " +
                            std::to_string(a.cols()) + ")");
  }
  const Eigen::VectorXd diag = qr_.matrixR().diagonal().cwiseAbs();
  const double ratio = diag.maxCoeff() / diag.minCoeff();
  condition_ = ratio * ratio;
}

EstimateResult WlsEstimator::estimate(const Eigen::VectorXd& z) const {
  if (z.size() != model_.H.rows()) throw ModelError("measurement vector has wrong length");
  const Eigen::VectorXd rhs = weights_.cwiseProduct(z);
  EstimateResult out;
  out.x_hat = qr_.solve(rhs);
  out.wmr = computeWmr(model_, z, out.x_hat);
  out.condition_ok = condition_ <= kConditionLimit;
  return out;
}

Eigen::MatrixXd WlsEstimator::propagatedCovariance(const Eigen::MatrixXd& rows) const {
  const Eigen::Index n = model_.H.cols();
  // cov(x) = P (R^T R)^-1 P^T
  const Eigen::MatrixXd permuted = qr_.colsPermutation().transpose() * rows.transpose();
  const auto r = qr_.matrixR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd t = r.transpose().solve(permuted);
  return t.transpose() * t;
}

EstimateResult wlsEstimate(const MeasurementModel& model, const Eigen::VectorXd& z) {
  return WlsEstimator(model).estimate(z);
}

double computeWmr(const MeasurementModel& model, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& x_hat) {
  const Eigen::VectorXd e = z - model.H * x_hat;
  return e.cwiseProduct(e).cwiseQuotient(model.variances).sum();
}

}  // namespace pmufdl
