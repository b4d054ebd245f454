#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmufdl/fdla.hpp"
#include "pmufdl/simulation.hpp"

namespace pmufdl {

/// Stream does not match the monitored node set.
class StreamMismatchError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Measurements grouped by timestamp; an empty entry is a sample with at
/// least one missing channel.
struct MeasurementStream {
  std::vector<double> times;
  std::vector<std::optional<Eigen::VectorXd>> samples;
  std::size_t missing = 0;
};

/// CSV with header timestamp,node,phase,V_re,V_im,I_re,I_im; one row per
/// monitored node and phase (A, B, C).
void writeStream(std::ostream& out, const std::vector<MeasurementSample>& samples,
                 const MeasurementLayout& layout);
MeasurementStream readStream(std::istream& in, const MeasurementLayout& layout);
MeasurementStream readStreamFile(const std::string& path, const MeasurementLayout& layout);

/// t,w0,w1..wr
void writeWmrTrace(std::ostream& out, const FdlaReport& report);
/// t,|I_A|,|I_B|,|I_C|
void writeInjectionTrace(std::ostream& out, const FdlaReport& report,
                         const std::vector<Vector3c>& trace);

}  // namespace pmufdl
