#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmufdl {

using Complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;
using NodeId = int;
using BranchId = int;

/// Raised for malformed or inconsistent model input.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind { kReal, kFake, kVirtual };
enum class BranchKind { kLine, kTransformer };
enum class GroundingKind { kNone, kSolid, kPetersen };

/// Neutral grounding at a node, realised as a zero-sequence-only shunt
/// (grounding transformer with zero-sequence impedance `z0`, in series with
/// the neutral element: nothing for solid, R + jwL for a Petersen coil).
struct Grounding {
  GroundingKind kind = GroundingKind::kNone;
  double inductance = 0.0;  // henry, Petersen only
  double resistance = 0.0;  // ohm, Petersen coil losses
  Complex z0{0.0, 0.0};     // ohm
};

struct Node {
  NodeId id = 0;
  std::string name;
  bool monitored = false;
  NodeKind kind = NodeKind::kReal;
  Grounding grounding;
};

struct Branch {
  BranchId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  Matrix3c series_impedance = Matrix3c::Zero();
  // pi-model shunt halves; a split branch keeps the shunt only at real ends
  Matrix3c shunt_from = Matrix3c::Zero();
  Matrix3c shunt_to = Matrix3c::Zero();
  BranchKind kind = BranchKind::kLine;
  bool eligible = true;

  NodeId other(NodeId n) const { return n == from ? to : from; }
};

/// EMF behind an internal impedance. With an isolated neutral the source
/// offers no zero-sequence path.
struct Source {
  NodeId node = 0;
  Vector3c emf = Vector3c::Zero();
  Matrix3c impedance = Matrix3c::Identity();
  bool grounded_neutral = false;
};

/// Delta-connected constant-impedance load. Entry (p, q), p != q, is the
/// impedance of the delta branch between phases p and q. Diagonal unused.
struct Load {
  NodeId node = 0;
  Matrix3c delta_impedance = Matrix3c::Zero();
};

/// Sorted set of node ids.
class NodeSet {
 public:
  NodeSet() = default;
  NodeSet(std::initializer_list<NodeId> ids);
  explicit NodeSet(std::vector<NodeId> ids);

  bool contains(NodeId id) const;
  void insert(NodeId id);
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<NodeId>& ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  bool operator==(const NodeSet&) const = default;

 private:
  std::vector<NodeId> ids_;
};

/// Immutable three-phase radial network. Node ids are 1..n, branch ids are
/// unique; the branch graph is a spanning tree.
class GridModel {
 public:
  GridModel(std::vector<Node> nodes, std::vector<Branch> branches,
            std::vector<Source> sources, std::vector<Load> loads,
            double frequency, double nominal_voltage = 0.0);

  std::size_t nodeCount() const { return nodes_.size(); }
  std::size_t branchCount() const { return branches_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Source>& sources() const { return sources_; }
  const std::vector<Load>& loads() const { return loads_; }
  double frequency() const { return frequency_; }
  double omega() const;
  /// Phase-to-ground rms voltage used as the magnitude fallback.
  double nominalVoltage() const { return nominal_voltage_; }

  const Node& node(NodeId id) const;
  const Branch& branch(BranchId id) const;
  bool hasBranch(BranchId id) const;
  int degree(NodeId id) const;
  const std::vector<BranchId>& incidentBranches(NodeId id) const;
  std::vector<NodeId> neighbors(NodeId id) const;
  /// Branch joining two nodes, or 0.
  BranchId branchBetween(NodeId a, NodeId b) const;
  /// Nodes whose monitored flag is set.
  NodeSet monitoredNodes() const;
  std::vector<BranchId> branchIds() const;

  /// Copy with monitored flags replaced by `monitored` (real nodes only).
  GridModel withMonitored(const NodeSet& monitored) const;
  /// Copy with every Petersen-grounded node switched to solid grounding.
  GridModel withSolidGrounding() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Branch> branches_;
  std::vector<Source> sources_;
  std::vector<Load> loads_;
  double frequency_;
  double nominal_voltage_;
  std::map<BranchId, std::size_t> branch_index_;
  std::vector<std::vector<BranchId>> incident_;
};

/// Complex 3n x 3n matrix, block (i, j) at rows 3(i-1).., cols 3(j-1)..
using AdmittanceMatrix = Eigen::MatrixXcd;

/// Full circuit admittance: branches, line shunts, loads, source internal
/// admittances and neutral grounding paths.
AdmittanceMatrix buildAdmittance(const GridModel& grid);

/// Branch series and line-shunt terms only. Node injections computed with
/// this matrix are what a PMU sees flowing from the node into the lines.
AdmittanceMatrix buildNetworkAdmittance(const GridModel& grid);

/// 3x3 admittance of a delta load.
Matrix3c deltaLoadAdmittance(const Matrix3c& delta_impedance);
/// 3x3 admittance of a source with its internal impedance.
Matrix3c sourceAdmittance(const Source& source);
/// Zero-sequence-only shunt admittance of a neutral grounding.
Matrix3c groundingAdmittance(const Grounding& grounding, double omega);

struct SplitResult {
  NodeId new_node = 0;
  BranchId first_segment = 0;   // keeps the original branch id, from-end side
  BranchId second_segment = 0;  // new id, to-end side
};

/// Splits `branch_id` at `position` (fraction of the impedance measured from
/// the from-end) and inserts a non-monitored node of `kind` there.
GridModel splitBranch(const GridModel& grid, BranchId branch_id,
                      double position, NodeKind kind,
                      SplitResult* result = nullptr);

/// Virtual-node extension used for fault hypotheses.
GridModel extendWithVirtualNode(const GridModel& grid, BranchId branch_id,
                                double position = 0.5,
                                SplitResult* result = nullptr);

/// Fake node registry: fake node id -> original branch id, plus the two
/// half-branch ids each original branch became.
struct FakeNodeRegistry {
  std::map<NodeId, BranchId> fake_to_branch;
  std::map<BranchId, SplitResult> branch_split;
};

struct FakeExtendedGrid {
  GridModel grid;
  FakeNodeRegistry registry;
};

/// Inserts a midpoint fake node on every listed branch; every listed branch
/// must join two monitored nodes.
FakeExtendedGrid addFakeNodes(const GridModel& grid,
                              const std::vector<BranchId>& single_line_ufcs);

/// Total zero-sequence shunt capacitance of the lines (farad, per phase).
double zeroSequenceCapacitance(const GridModel& grid);
/// L = 1 / (3 w^2 C0_total): the coil that resonates with the network's
/// zero-sequence capacitance.
double tunedPetersenInductance(const GridModel& grid);

}  // namespace pmufdl
