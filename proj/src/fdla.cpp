#include "pmufdl/fdla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmufdl {

namespace {
constexpr double kThresholdFloor = 1e-12;
}

double calibrateThreshold(const std::vector<double>& w0_history, const FdlaConfig& config) {
  if (w0_history.size() < 2) throw ModelError("threshold calibration needs two samples");
  double max_step = 0.0;
  for (std::size_t t = 1; t < w0_history.size(); ++t) {
    max_step = std::max(max_step, std::abs(w0_history[t] - w0_history[t - 1]));
  }
  return std::max(config.threshold_factor * max_step, kThresholdFloor);
}

std::string FaultCharacterization::label() const {
  if (indeterminate) return "indeterminate";
  std::string s;
  for (int p = 0; p < 3; ++p) {
    if (phases[p]) s += static_cast<char>('A' + p);
  }
  if (grounded) s += "+g";
  return s;
}

FaultCharacterization characterizeFault(const Vector3c& injection, double sigma_injection,
                                        const FdlaConfig& config) {
  FaultCharacterization out;
  out.injection = injection;
  out.sigma = sigma_injection;
  const double floor = config.sigma_multiplier * sigma_injection;
  const double peak = injection.cwiseAbs().maxCoeff();
  const double cut = std::max(config.relative_phase_threshold * peak, floor);
  for (int p = 0; p < 3; ++p) {
    out.phases[p] = std::abs(injection(p)) > cut;
  }
  out.indeterminate = std::none_of(out.phases.begin(), out.phases.end(), [](bool b) { return b; });
  out.grounded = !out.indeterminate && std::abs(injection.sum()) > floor;
  return out;
}

FaultCharacterization characterizeFault(const Eigen::VectorXd& x_hat,
                                        const AdmittanceMatrix& extended_admittance,
                                        NodeId virtual_node, double sigma_injection,
                                        const FdlaConfig& config) {
  const auto n = extended_admittance.rows();
  if (x_hat.size() != 2 * n) throw ModelError("state size does not match admittance");
  const Eigen::VectorXcd v = x_hat.head(n).cast<Complex>() + Complex(0.0, 1.0) * x_hat.tail(n);
  const Vector3c injection =
      (extended_admittance.middleRows(3 * (virtual_node - 1), 3) * v).eval();
  return characterizeFault(injection, sigma_injection, config);
}

FaultDetector::FaultDetector(const EstimatorBank& bank, FdlaConfig config, bool parallel)
    : bank_(bank), config_(config), parallel_(parallel) {
  if (config_.mean_window == 0 || config_.calibration_window < 2) {
    throw ModelError("FDLA windows too small");
  }
}

void FaultDetector::calibrate(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.size() < config_.calibration_window) {
    throw ModelError("calibration needs " + std::to_string(config_.calibration_window) +
                     " samples, got " + std::to_string(samples.size()));
  }
  std::vector<double> w0;
  window_.clear();
  const std::size_t first = samples.size() - config_.calibration_window;
  for (std::size_t k = first; k < samples.size(); ++k) {
    const auto est = parallel_ ? bank_.evaluate(samples[k]) : bank_.evaluateSerial(samples[k]);
    std::vector<double> w(est.size());
    for (std::size_t e = 0; e < est.size(); ++e) w[e] = est[e].wmr;
    w0.push_back(w[0]);
    window_.push_back(std::move(w));
    if (window_.size() > config_.mean_window) window_.pop_front();
  }
  report_ = FdlaReport{};
  report_.threshold = calibrateThreshold(w0, config_);
  last_w0_ = w0.back();
  calibrated_ = true;
}

std::vector<double> FaultDetector::means() const {
  std::vector<double> mu(bank_.size(), 0.0);
  for (const auto& w : window_) {
    for (std::size_t e = 0; e < mu.size(); ++e) mu[e] += w[e];
  }
  for (double& m : mu) m /= static_cast<double>(window_.size());
  return mu;
}

bool FaultDetector::step(double time, const Eigen::VectorXd& z) {
  if (!calibrated_) throw ModelError("detector used before calibration");
  const auto est = parallel_ ? bank_.evaluate(z) : bank_.evaluateSerial(z);
  std::vector<double> w(est.size());
  std::vector<Vector3c> inj;
  inj.reserve(est.size() - 1);
  for (std::size_t e = 0; e < est.size(); ++e) {
    w[e] = est[e].wmr;
    report_.condition_warning = report_.condition_warning || !est[e].condition_ok;
    if (e > 0) inj.push_back(bank_.injection(e, est[e].x_hat));
  }

  // localization score; the means freeze at the first alarm
  const std::vector<double> mu = means();
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t e = 1; e < w.size(); ++e) {
    const double score = w[e] - mu[e];
    if (score < best_score) {
      best_score = score;
      best = e;
    }
  }

  const bool fired = std::abs(w[0] - last_w0_) > report_.threshold;
  if (fired) {
    Alarm alarm;
    alarm.index = report_.times.size();
    alarm.time = time;
    alarm.alpha = best;
    if (best > 0) {
      const HypothesisInfo& h = bank_.hypotheses()[best - 1];
      alarm.cluster = static_cast<int>(h.cluster);
      alarm.branch = h.branch;
      alarm.fault = characterizeFault(inj[best - 1], bank_.injectionSigma(best), config_);
    }
    if (!report_.detected) {
      report_.detected = true;
      report_.detection_index = alarm.index;
      report_.detection_time = time;
      report_.alpha = alarm.alpha;
      report_.cluster = alarm.cluster;
      report_.branch = alarm.branch;
      report_.fault = alarm.fault;
    }
    report_.alarms.push_back(std::move(alarm));
  } else if (!report_.detected) {
    window_.push_back(w);
    if (window_.size() > config_.mean_window) window_.pop_front();
  }
  last_w0_ = w[0];
  report_.times.push_back(time);
  report_.wmr.push_back(std::move(w));
  report_.injections.push_back(std::move(inj));
  report_.argmin_entry.push_back(best);
  return fired;
}

void FaultDetector::skip(double time) { report_.skipped_times.push_back(time); }

std::vector<Vector3c> FaultDetector::injectionTrace() const {
  std::size_t entry = report_.alpha;
  if (entry == 0 && !report_.argmin_entry.empty()) entry = report_.argmin_entry.back();
  std::vector<Vector3c> out;
  if (entry == 0) return out;
  out.reserve(report_.injections.size());
  for (const auto& step : report_.injections) out.push_back(step[entry - 1]);
  return out;
}

FdlaReport runFdla(const EstimatorBank& bank, const std::vector<Eigen::VectorXd>& calibration,
                   const std::vector<double>& times,
                   const std::vector<std::optional<Eigen::VectorXd>>& stream,
                   const FdlaConfig& config) {
  if (times.size() != stream.size()) throw ModelError("times and stream lengths differ");
  FaultDetector detector(bank, config);
  detector.calibrate(calibration);
  for (std::size_t k = 0; k < stream.size(); ++k) {
    if (stream[k]) {
      detector.step(times[k], *stream[k]);
    } else {
      detector.skip(times[k]);
    }
  }
  return detector.report();
}

}  // namespace pmufdl
