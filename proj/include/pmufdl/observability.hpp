#pragma once

#include <cstdint>
#include <vector>

#include "pmufdl/estimation.hpp"
#include "pmufdl/grid.hpp"

namespace pmufdl {

struct ObservabilityCheck {
  bool ok = true;
  std::vector<NodeId> violations;  // ascending, unique
};

/// Raised when a placement leaves some fault hypothesis unobservable.
class PlacementViolation : public ModelError {
 public:
  PlacementViolation(const std::string& what, std::vector<NodeId> nodes)
      : ModelError(what), nodes_(std::move(nodes)) {}
  const std::vector<NodeId>& nodes() const { return nodes_; }

 private:
  std::vector<NodeId> nodes_;
};

/// Sufficient condition for observability of the original grid: every node
/// of degree > 1 has at most one non-monitored neighbour, and every
/// non-monitored leaf hangs off a monitored node.
ObservabilityCheck checkSufficientCondition(const GridModel& grid, const NodeSet& monitored);

/// Necessary and sufficient condition for every single-virtual-node
/// extension to be observable: no branch joins two non-monitored nodes and
/// every leaf is monitored.
ObservabilityCheck checkHypothesisObservability(const GridModel& grid, const NodeSet& monitored);

/// Full column rank of H (singular values above 1e-10 of the largest).
bool rankObservabilityOracle(const GridModel& grid, const NodeSet& monitored);

/// Eligible branches with both endpoints monitored.
std::vector<BranchId> computeSingleLineUfcs(const GridModel& grid,
                                            const NodeSet& monitored);

/// Localization clusters. Every branch of the grid belongs to exactly one
/// cluster; clusters containing at least one eligible branch are fault
/// hypotheses. Clusters are ordered by their lowest branch id.
struct ClusterPartition {
  std::vector<std::vector<BranchId>> clusters;
  std::vector<BranchId> single_line_ufcs;
  NodeSet separator_nodes;
  /// Lowest eligible branch id of each cluster (lowest id if none eligible).
  std::vector<BranchId> representative;
  std::vector<bool> is_hypothesis;

  std::size_t count() const { return clusters.size(); }
  /// 0-based cluster index of a branch, -1 if absent.
  int clusterOf(BranchId id) const;
  std::size_t hypothesisCount() const;
};

ClusterPartition computeClusters(const GridModel& grid, const NodeSet& monitored);

/// Restriction of a partition to the grid's eligible branches; clusters left
/// empty are dropped.
ClusterPartition eligibleRestriction(const ClusterPartition& partition,
                                     const GridModel& grid);

/// Same grouping of branches (order-insensitive).
bool samePartition(const ClusterPartition& a, const ClusterPartition& b);

struct EmpiricalClusterResult {
  ClusterPartition partition;            // eligible branches only
  std::vector<BranchId> branches;        // eligible branches, ascending
  std::vector<std::vector<double>> wmr;  // per branch, per trial
  std::vector<BranchId> unobservable;
  /// Largest relative WMR spread found inside one group.
  double max_relative_spread = 0.0;
};

/// Groups eligible branches by the WMR of their midpoint-hypothesis estimate
/// on the fake-node extended grid over `trials` standard-normal measurement
/// vectors. Two branches share a group when every trial agrees to 1e-6
/// relative; differences below 1e-12 of the trial's weighted measurement
/// energy count as agreement.
EmpiricalClusterResult empiricalClusterOracle(const GridModel& grid,
                                              const NodeSet& monitored,
                                              int trials = 20,
                                              std::uint64_t seed = 1);

}  // namespace pmufdl
