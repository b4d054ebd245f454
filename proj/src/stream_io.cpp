#include "pmufdl/stream_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace pmufdl {

namespace {

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parseNumber(const std::string& text, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ModelError("line " + std::to_string(line) + ": bad " + what + " '" + text + "'");
  }
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

void writeStream(std::ostream& out, const std::vector<MeasurementSample>& samples,
                 const MeasurementLayout& layout) {
  out << "timestamp,node,phase,V_re,V_im,I_re,I_im\n";
  out << std::setprecision(17);
  const auto& ids = layout.monitored().ids();
  for (const MeasurementSample& s : samples) {
    for (std::size_t slot = 0; slot < ids.size(); ++slot) {
      for (int p = 0; p < 3; ++p) {
        out << s.time << ',' << ids[slot] << ',' << static_cast<char>('A' + p) << ','
            << s.z(layout.voltageRe(slot, p)) << ',' << s.z(layout.voltageIm(slot, p)) << ','
            << s.z(layout.currentRe(slot, p)) << ',' << s.z(layout.currentIm(slot, p)) << '\n';
      }
    }
  }
}

MeasurementStream readStream(std::istream& in, const MeasurementLayout& layout) {
  const auto& ids = layout.monitored().ids();
  std::map<NodeId, std::size_t> slot_of;
  for (std::size_t s = 0; s < ids.size(); ++s) slot_of[ids[s]] = s;

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ModelError("line 1: empty stream");
  ++line_no;
  const auto header = splitCsv(trim(line));
  const std::vector<std::string> expected{"timestamp", "node", "phase", "V_re",
                                          "V_im",      "I_re", "I_im"};
  if (header != expected) {
    throw ModelError("line 1: expected header timestamp,node,phase,V_re,V_im,I_re,I_im");
  }

  MeasurementStream out;
  std::vector<Eigen::VectorXd> values;
  std::vector<std::vector<char>> seen;
  std::map<NodeId, bool> node_seen;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = splitCsv(line);
    if (cells.size() != 7) {
      throw ModelError("line " + std::to_string(line_no) + ": expected 7 fields, got " +
                       std::to_string(cells.size()));
    }
    const double t = parseNumber(cells[0], line_no, "timestamp");
    const double node_value = parseNumber(cells[1], line_no, "node");
    if (node_value != std::floor(node_value) || node_value < 1) {
      throw ModelError("line " + std::to_string(line_no) + ": bad node '" + cells[1] + "'");
    }
    const auto node = static_cast<NodeId>(node_value);
    if (cells[2].size() != 1 || cells[2][0] < 'A' || cells[2][0] > 'C') {
      throw ModelError("line " + std::to_string(line_no) + ": bad phase '" + cells[2] + "'");
    }
    const int p = cells[2][0] - 'A';
    double v[4];
    for (int c = 0; c < 4; ++c) v[c] = parseNumber(cells[3 + c], line_no, "value");

    const auto it = slot_of.find(node);
    if (it == slot_of.end()) {
      throw StreamMismatchError("line " + std::to_string(line_no) + ": node " +
                                std::to_string(node) + " is not in the monitored set");
    }
    node_seen[node] = true;
    if (out.times.empty() || t != out.times.back()) {
      if (!out.times.empty() && t < out.times.back()) {
        throw ModelError("line " + std::to_string(line_no) + ": timestamps must not decrease");
      }
      out.times.push_back(t);
      values.emplace_back(Eigen::VectorXd::Zero(layout.measurementSize()));
      seen.emplace_back(3 * ids.size(), 0);
    }
    const std::size_t slot = it->second;
    char& mark = seen.back()[3 * slot + static_cast<std::size_t>(p)];
    if (mark) {
      throw ModelError("line " + std::to_string(line_no) + ": duplicate channel");
    }
    mark = 1;
    Eigen::VectorXd& z = values.back();
    z(layout.voltageRe(slot, p)) = v[0];
    z(layout.voltageIm(slot, p)) = v[1];
    z(layout.currentRe(slot, p)) = v[2];
    z(layout.currentIm(slot, p)) = v[3];
  }
  for (NodeId id : ids) {
    if (!node_seen[id]) {
      throw StreamMismatchError("monitored node " + std::to_string(id) +
                                " never appears in the stream");
    }
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    bool complete = true;
    for (char c : seen[k]) complete = complete && c;
    if (complete) {
      out.samples.emplace_back(std::move(values[k]));
    } else {
      out.samples.emplace_back(std::nullopt);
      ++out.missing;
    }
  }
  return out;
}

MeasurementStream readStreamFile(const std::string& path, const MeasurementLayout& layout) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open stream file " + path);
  try {
    return readStream(in, layout);
  } catch (const StreamMismatchError& e) {
    throw StreamMismatchError(path + ": " + e.what());
  } catch (const ModelError& e) {
    throw ModelError(path + ": " + e.what());
  }
}

void writeWmrTrace(std::ostream& out, const FdlaReport& report) {
  const std::size_t entries = report.wmr.empty() ? 1 : report.wmr.front().size();
  out << "t";
  for (std::size_t e = 0; e < entries; ++e) out << ",w" << e;
  out << '\n' << std::setprecision(12);
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    out << report.times[k];
    for (double w : report.wmr[k]) out << ',' << w;
    out << '\n';
  }
}

void writeInjectionTrace(std::ostream& out, const FdlaReport& report,
                         const std::vector<Vector3c>& trace) {
  out << "t,I_A,I_B,I_C\n" << std::setprecision(12);
  for (std::size_t k = 0; k < trace.size() && k < report.times.size(); ++k) {
    out << report.times[k] << ',' << std::abs(trace[k](0)) << ',' << std::abs(trace[k](1))
        << ',' << std::abs(trace[k](2)) << '\n';
  }
}

}  // namespace pmufdl
