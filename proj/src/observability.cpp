#include "pmufdl/observability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pmufdl {

namespace {

std::vector<NodeId> sortedUnique(std::vector<NodeId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

void finalizePartition(ClusterPartition& p, const GridModel& grid) {
  for (auto& c : p.clusters) std::sort(c.begin(), c.end());
  std::sort(p.clusters.begin(), p.clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  p.representative.clear();
  p.is_hypothesis.clear();
  for (const auto& c : p.clusters) {
    BranchId rep = c.front();
    bool any = false;
    for (BranchId id : c) {
      if (grid.branch(id).eligible) {
        rep = id;
        any = true;
        break;
      }
    }
    p.representative.push_back(rep);
    p.is_hypothesis.push_back(any);
  }
}

}  // namespace

int ClusterPartition::clusterOf(BranchId id) const {
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (std::binary_search(clusters[c].begin(), clusters[c].end(), id)) {
      return static_cast<int>(c);
    }
  }
  return -1;
}

std::size_t ClusterPartition::hypothesisCount() const {
  return static_cast<std::size_t>(
      std::count(is_hypothesis.begin(), is_hypothesis.end(), true));
}

ObservabilityCheck checkSufficientCondition(const GridModel& grid, const NodeSet& monitored) {
  std::vector<NodeId> bad;
  for (const Node& n : grid.nodes()) {
    const auto nbrs = grid.neighbors(n.id);
    if (nbrs.size() > 1) {
      const auto unmonitored = std::count_if(
          nbrs.begin(), nbrs.end(), [&](NodeId v) { return !monitored.contains(v); });
      if (unmonitored > 1) bad.push_back(n.id);
    } else if (nbrs.size() == 1 && !monitored.contains(n.id) &&
               !monitored.contains(nbrs.front())) {
      bad.push_back(n.id);
    }
  }
  return {bad.empty(), sortedUnique(std::move(bad))};
}

ObservabilityCheck checkHypothesisObservability(const GridModel& grid, const NodeSet& monitored) {
  std::vector<NodeId> bad;
  for (const Branch& b : grid.branches()) {
    if (!monitored.contains(b.from) && !monitored.contains(b.to)) {
      bad.push_back(b.from);
      bad.push_back(b.to);
    }
  }
  for (const Node& n : grid.nodes()) {
    if (grid.degree(n.id) == 1 && !monitored.contains(n.id)) bad.push_back(n.id);
  }
  return {bad.empty(), sortedUnique(std::move(bad))};
}

bool rankObservabilityOracle(const GridModel& grid, const NodeSet& monitored) {
  if (monitored.empty()) return false;
  const Eigen::MatrixXd h = buildMeasurementMatrix(grid, monitored);
  if (h.rows() < h.cols()) return false;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return false;
  const double cutoff = WlsEstimator::kRankTolerance * s(0);
  return (s.array() > cutoff).count() == h.cols();
}

std::vector<BranchId> computeSingleLineUfcs(const GridModel& grid,
                                            const NodeSet& monitored) {
  std::vector<BranchId> out;
  for (const Branch& b : grid.branches()) {
    if (b.eligible && monitored.contains(b.from) && monitored.contains(b.to)) {
      out.push_back(b.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ClusterPartition computeClusters(const GridModel& grid, const NodeSet& monitored) {
  const ObservabilityCheck th1 = checkHypothesisObservability(grid, monitored);
  if (!th1.ok) {
    throw PlacementViolation("placement violates the adjacency/leaf monitoring rule",
                             th1.violations);
  }
  ClusterPartition p;
  std::vector<NodeId> separators;
  for (const Node& n : grid.nodes()) {
    if (!monitored.contains(n.id) && grid.degree(n.id) > 2) separators.push_back(n.id);
  }
  p.separator_nodes = NodeSet(separators);

  const auto& branches = grid.branches();
  std::map<BranchId, std::size_t> index;
  for (std::size_t k = 0; k < branches.size(); ++k) index[branches[k].id] = k;
  DisjointSet sets(branches.size());
  for (const Node& n : grid.nodes()) {
    if (p.separator_nodes.contains(n.id)) continue;
    const auto& inc = grid.incidentBranches(n.id);
    for (std::size_t k = 1; k < inc.size(); ++k) {
      sets.unite(index[inc[0]], index[inc[k]]);
    }
  }
  std::map<std::size_t, std::vector<BranchId>> groups;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    groups[sets.find(k)].push_back(branches[k].id);
  }
  for (auto& [root, ids] : groups) p.clusters.push_back(std::move(ids));
  p.single_line_ufcs = computeSingleLineUfcs(grid, monitored);
  finalizePartition(p, grid);
  return p;
}

ClusterPartition eligibleRestriction(const ClusterPartition& partition,
                                     const GridModel& grid) {
  ClusterPartition out;
  out.single_line_ufcs = partition.single_line_ufcs;
  out.separator_nodes = partition.separator_nodes;
  for (const auto& c : partition.clusters) {
    std::vector<BranchId> kept;
    for (BranchId id : c) {
      if (grid.branch(id).eligible) kept.push_back(id);
    }
    if (!kept.empty()) out.clusters.push_back(std::move(kept));
  }
  finalizePartition(out, grid);
  return out;
}

bool samePartition(const ClusterPartition& a, const ClusterPartition& b) {
  auto canon = [](std::vector<std::vector<BranchId>> c) {
    for (auto& v : c) std::sort(v.begin(), v.end());
    std::sort(c.begin(), c.end());
    return c;
  };
  return canon(a.clusters) == canon(b.clusters);
}

namespace {
constexpr double kRelativeTolerance = 1e-6;
}

EmpiricalClusterResult empiricalClusterOracle(const GridModel& grid,
                                              const NodeSet& monitored,
                                              int trials, std::uint64_t seed) {
  const ObservabilityCheck th1 = checkHypothesisObservability(grid, monitored);
  if (!th1.ok) {
    throw PlacementViolation("placement violates the adjacency/leaf monitoring rule",
                             th1.violations);
  }
  if (trials < 1) throw ModelError("oracle needs at least one trial");
  const GridModel base = grid.withMonitored(monitored);
  const FakeExtendedGrid feg = addFakeNodes(base, computeSingleLineUfcs(base, monitored));

  EmpiricalClusterResult out;
  for (const Branch& b : grid.branches()) {
    if (b.eligible) out.branches.push_back(b.id);
  }
  std::sort(out.branches.begin(), out.branches.end());

  const MeasurementLayout layout(feg.grid.nodeCount(), monitored);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> samples(trials);
  for (auto& z : samples) {
    z.resize(layout.measurementSize());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  }

  const NoiseParams noise;
  const std::size_t count = out.branches.size();
  out.wmr.assign(count, {});
  std::vector<char> failed(count, 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < count; ++k) {
    try {
      // a fake-split branch keeps its id on the lower-id half
      const GridModel hyp = extendWithVirtualNode(feg.grid, out.branches[k], 0.5);
      const WlsEstimator est(buildMeasurementModel(hyp, monitored, noise));
      std::vector<double> w;
      for (const auto& z : samples) w.push_back(est.estimate(z).wmr);
      out.wmr[k] = std::move(w);
    } catch (const UnobservableError&) {
      failed[k] = 1;
    }
  }

  // WMRs of square (zero-redundancy) systems are pure roundoff; compare
  // against a floor tied to the weighted energy of each measurement vector
  const Eigen::VectorXd variances =
      measurementVariances(layout, base.nominalVoltage(), noise, std::nullopt);
  std::vector<double> floor(samples.size());
  for (std::size_t t = 0; t < samples.size(); ++t) {
    floor[t] = 1e-12 * samples[t].cwiseAbs2().cwiseQuotient(variances).sum();
  }
  auto scaleOf = [&](double a, double b, std::size_t t) {
    return std::max({std::abs(a), std::abs(b), floor[t] / kRelativeTolerance});
  };
  auto agree = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t t = 0; t < a.size(); ++t) {
      if (std::abs(a[t] - b[t]) > kRelativeTolerance * scaleOf(a[t], b[t], t)) return false;
    }
    return true;
  };
  std::vector<int> group(count, -1);
  for (std::size_t k = 0; k < count; ++k) {
    if (failed[k]) {
      out.unobservable.push_back(out.branches[k]);
      continue;
    }
    if (group[k] >= 0) continue;
    group[k] = static_cast<int>(out.partition.clusters.size());
    std::vector<BranchId> members{out.branches[k]};
    for (std::size_t j = k + 1; j < count; ++j) {
      if (!failed[j] && group[j] < 0 && agree(out.wmr[k], out.wmr[j])) {
        group[j] = group[k];
        members.push_back(out.branches[j]);
      }
    }
    for (BranchId id : members) {
      const auto& wa = out.wmr[k];
      const auto idx = static_cast<std::size_t>(
          std::lower_bound(out.branches.begin(), out.branches.end(), id) -
          out.branches.begin());
      for (std::size_t t = 0; t < wa.size(); ++t) {
        const double scale = scaleOf(wa[t], out.wmr[idx][t], t);
        out.max_relative_spread =
            std::max(out.max_relative_spread, std::abs(wa[t] - out.wmr[idx][t]) / scale);
      }
    }
    out.partition.clusters.push_back(std::move(members));
  }
  out.partition.single_line_ufcs = computeSingleLineUfcs(base, monitored);
  finalizePartition(out.partition, grid);
  return out;
}

}  // namespace pmufdl
