#include "pmufdl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace pmufdl {

namespace {

constexpr double kSymmetryTol = 1e-9;

bool isSymmetric(const Matrix3c& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

void addBlock(AdmittanceMatrix& y, NodeId i, NodeId j, const Matrix3c& block) {
  y.block<3, 3>(3 * (i - 1), 3 * (j - 1)) += block;
}

Matrix3c seriesAdmittance(const Branch& b) {
  Eigen::FullPivLU<Matrix3c> lu(b.series_impedance);
  if (!lu.isInvertible()) {
    throw ModelError("branch " + std::to_string(b.id) +
                     ": singular series impedance");
  }
  return lu.inverse();
}

void stampNetwork(const GridModel& grid, AdmittanceMatrix& y) {
  for (const Branch& b : grid.branches()) {
    const Matrix3c ys = seriesAdmittance(b);
    addBlock(y, b.from, b.from, ys + b.shunt_from);
    addBlock(y, b.to, b.to, ys + b.shunt_to);
    addBlock(y, b.from, b.to, -ys);
    addBlock(y, b.to, b.from, -ys);
  }
}

}  // namespace

NodeSet::NodeSet(std::initializer_list<NodeId> ids)
    : NodeSet(std::vector<NodeId>(ids)) {}

NodeSet::NodeSet(std::vector<NodeId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool NodeSet::contains(NodeId id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

void NodeSet::insert(NodeId id) {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) ids_.insert(it, id);
}

GridModel::GridModel(std::vector<Node> nodes, std::vector<Branch> branches,
                     std::vector<Source> sources, std::vector<Load> loads,
                     double frequency, double nominal_voltage)
    : nodes_(std::move(nodes)),
      branches_(std::move(branches)),
      sources_(std::move(sources)),
      loads_(std::move(loads)),
      frequency_(frequency),
      nominal_voltage_(nominal_voltage) {
  if (nodes_.empty()) throw ModelError("grid has no nodes");
  if (!(frequency_ > 0.0)) throw ModelError("frequency must be positive");
  std::sort(nodes_.begin(), nodes_.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  int virtual_count = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.id != static_cast<NodeId>(i + 1)) {
      throw ModelError("node ids must be contiguous from 1; found " +
                       std::to_string(n.id) + " at position " +
                       std::to_string(i + 1));
    }
    if (n.kind != NodeKind::kReal && n.monitored) {
      throw ModelError("node " + std::to_string(n.id) +
                       ": fake and virtual nodes cannot be monitored");
    }
    if (n.kind == NodeKind::kVirtual) ++virtual_count;
  }
  if (virtual_count > 1) throw ModelError("more than one virtual node");

  const std::size_t n = nodes_.size();
  if (branches_.size() + 1 != n) {
    throw ModelError("radial grid needs n-1 branches: n=" + std::to_string(n) +
                     ", m=" + std::to_string(branches_.size()));
  }
  incident_.assign(n + 1, {});
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const Branch& b = branches_[k];
    const std::string tag = "branch " + std::to_string(b.id);
    if (!branch_index_.emplace(b.id, k).second) {
      throw ModelError(tag + ": duplicate id");
    }
    if (b.from < 1 || b.to < 1 || b.from > static_cast<NodeId>(n) ||
        b.to > static_cast<NodeId>(n)) {
      throw ModelError(tag + ": unknown endpoint");
    }
    if (b.from == b.to) throw ModelError(tag + ": from == to");
    if (!pairs.emplace(std::min(b.from, b.to), std::max(b.from, b.to)).second) {
      throw ModelError(tag + ": parallel branch");
    }
    if (!isSymmetric(b.series_impedance) || !isSymmetric(b.shunt_from) ||
        !isSymmetric(b.shunt_to)) {
      throw ModelError(tag + ": impedance and shunt matrices must be symmetric");
    }
    incident_[b.from].push_back(b.id);
    incident_[b.to].push_back(b.id);
  }

  // m = n - 1 plus connectivity makes it a tree
  std::vector<char> seen(n + 1, 0);
  std::vector<NodeId> stack{1};
  seen[1] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (BranchId bid : incident_[u]) {
      NodeId v = branch(bid).other(u);
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  if (reached != n) throw ModelError("grid is not connected");

  for (const Source& s : sources_) {
    if (s.node < 1 || s.node > static_cast<NodeId>(n)) {
      throw ModelError("source at unknown node " + std::to_string(s.node));
    }
  }
  for (const Load& l : loads_) {
    if (l.node < 1 || l.node > static_cast<NodeId>(n)) {
      throw ModelError("load at unknown node " + std::to_string(l.node));
    }
  }
  if (!(nominal_voltage_ > 0.0)) {
    double sum = 0.0;
    for (const Source& s : sources_) sum += s.emf.cwiseAbs().mean();
    nominal_voltage_ = sources_.empty() ? 1.0 : sum / sources_.size();
  }
}

double GridModel::omega() const {
  return 2.0 * std::numbers::pi * frequency_;
}

const Node& GridModel::node(NodeId id) const {
  if (id < 1 || id > static_cast<NodeId>(nodes_.size())) {
    throw ModelError("unknown node " + std::to_string(id));
  }
  return nodes_[id - 1];
}

const Branch& GridModel::branch(BranchId id) const {
  auto it = branch_index_.find(id);
  if (it == branch_index_.end()) {
    throw ModelError("unknown branch " + std::to_string(id));
  }
  return branches_[it->second];
}

bool GridModel::hasBranch(BranchId id) const {
  return branch_index_.count(id) != 0;
}

int GridModel::degree(NodeId id) const {
  node(id);
  return static_cast<int>(incident_[id].size());
}

const std::vector<BranchId>& GridModel::incidentBranches(NodeId id) const {
  node(id);
  return incident_[id];
}

std::vector<NodeId> GridModel::neighbors(NodeId id) const {
  std::vector<NodeId> out;
  for (BranchId b : incidentBranches(id)) out.push_back(branch(b).other(id));
  std::sort(out.begin(), out.end());
  return out;
}

BranchId GridModel::branchBetween(NodeId a, NodeId b) const {
  for (BranchId id : incidentBranches(a)) {
    if (branch(id).other(a) == b) return id;
  }
  return 0;
}

NodeSet GridModel::monitoredNodes() const {
  std::vector<NodeId> ids;
  for (const Node& n : nodes_) {
    if (n.monitored) ids.push_back(n.id);
  }
  return NodeSet(std::move(ids));
}

std::vector<BranchId> GridModel::branchIds() const {
  std::vector<BranchId> ids;
  for (const auto& [id, idx] : branch_index_) ids.push_back(id);
  return ids;
}

GridModel GridModel::withMonitored(const NodeSet& monitored) const {
  std::vector<Node> nodes = nodes_;
  for (Node& n : nodes) {
    n.monitored = n.kind == NodeKind::kReal && monitored.contains(n.id);
  }
  return GridModel(std::move(nodes), branches_, sources_, loads_, frequency_,
                   nominal_voltage_);
}

GridModel GridModel::withSolidGrounding() const {
  std::vector<Node> nodes = nodes_;
  for (Node& n : nodes) {
    if (n.grounding.kind == GroundingKind::kPetersen) {
      n.grounding.kind = GroundingKind::kSolid;
      n.grounding.inductance = 0.0;
      n.grounding.resistance = 0.0;
    }
  }
  return GridModel(std::move(nodes), branches_, sources_, loads_, frequency_,
                   nominal_voltage_);
}

Matrix3c deltaLoadAdmittance(const Matrix3c& delta_impedance) {
  Matrix3c y = Matrix3c::Zero();
  for (int p = 0; p < 3; ++p) {
    for (int q = p + 1; q < 3; ++q) {
      const Complex z = delta_impedance(p, q);
      if (z == Complex{}) continue;  // no element on this side
      const Complex a = 1.0 / z;
      y(p, p) += a;
      y(q, q) += a;
      y(p, q) -= a;
      y(q, p) -= a;
    }
  }
  return y;
}

Matrix3c sourceAdmittance(const Source& source) {
  Eigen::FullPivLU<Matrix3c> lu(source.impedance);
  if (!lu.isInvertible()) {
    throw ModelError("source at node " + std::to_string(source.node) +
                     ": singular internal impedance");
  }
  const Matrix3c yz = lu.inverse();
  if (source.grounded_neutral) return yz;
  // Kron-reduce the floating star point
  const Vector3c col = yz * Vector3c::Ones();
  const Eigen::RowVector3cd row = Eigen::RowVector3cd::Ones() * yz;
  const Complex total = row.sum();
  return yz - col * row / total;
}

Matrix3c groundingAdmittance(const Grounding& g, double omega) {
  Complex neutral{0.0, 0.0};
  switch (g.kind) {
    case GroundingKind::kNone:
      return Matrix3c::Zero();
    case GroundingKind::kSolid:
      break;
    case GroundingKind::kPetersen:
      neutral = Complex(g.resistance, omega * g.inductance);
      break;
  }
  const Complex z = g.z0 + 3.0 * neutral;
  if (std::abs(z) == 0.0) {
    throw ModelError("grounding path with zero impedance");
  }
  return Matrix3c::Constant(1.0 / (3.0 * z));
}

AdmittanceMatrix buildNetworkAdmittance(const GridModel& grid) {
  const Eigen::Index dim = 3 * static_cast<Eigen::Index>(grid.nodeCount());
  AdmittanceMatrix y = AdmittanceMatrix::Zero(dim, dim);
  stampNetwork(grid, y);
  return y;
}

AdmittanceMatrix buildAdmittance(const GridModel& grid) {
  AdmittanceMatrix y = buildNetworkAdmittance(grid);
  for (const Load& l : grid.loads()) {
    addBlock(y, l.node, l.node, deltaLoadAdmittance(l.delta_impedance));
  }
  for (const Source& s : grid.sources()) {
    addBlock(y, s.node, s.node, sourceAdmittance(s));
  }
  for (const Node& n : grid.nodes()) {
    addBlock(y, n.id, n.id, groundingAdmittance(n.grounding, grid.omega()));
  }
  return y;
}

GridModel splitBranch(const GridModel& grid, BranchId branch_id,
                      double position, NodeKind kind, SplitResult* result) {
  if (!grid.hasBranch(branch_id)) {
    throw ModelError("unknown branch " + std::to_string(branch_id));
  }
  if (!(position > 0.0 && position < 1.0)) {
    throw ModelError("split position must lie in (0,1)");
  }
  const Branch original = grid.branch(branch_id);
  const NodeId new_node = static_cast<NodeId>(grid.nodeCount()) + 1;
  BranchId new_branch = 0;
  for (const Branch& b : grid.branches()) new_branch = std::max(new_branch, b.id);
  ++new_branch;

  std::vector<Node> nodes = grid.nodes();
  Node inserted;
  inserted.id = new_node;
  inserted.kind = kind;
  inserted.name = (kind == NodeKind::kFake ? "fake@" : "virtual@") +
                  std::to_string(branch_id);
  nodes.push_back(inserted);

  std::vector<Branch> branches;
  branches.reserve(grid.branchCount() + 1);
  for (const Branch& b : grid.branches()) {
    if (b.id != branch_id) {
      branches.push_back(b);
      continue;
    }
    Branch first = original;
    first.to = new_node;
    first.series_impedance = position * original.series_impedance;
    first.shunt_to = Matrix3c::Zero();
    Branch second = original;
    second.id = new_branch;
    second.from = new_node;
    second.series_impedance = (1.0 - position) * original.series_impedance;
    second.shunt_from = Matrix3c::Zero();
    branches.push_back(first);
    branches.push_back(second);
  }
  if (result != nullptr) *result = {new_node, branch_id, new_branch};
  return GridModel(std::move(nodes), std::move(branches), grid.sources(),
                   grid.loads(), grid.frequency(), grid.nominalVoltage());
}

GridModel extendWithVirtualNode(const GridModel& grid, BranchId branch_id,
                                double position, SplitResult* result) {
  if (!grid.branch(branch_id).eligible) {
    throw ModelError("branch " + std::to_string(branch_id) +
                     " is not eligible for a fault hypothesis");
  }
  return splitBranch(grid, branch_id, position, NodeKind::kVirtual, result);
}

FakeExtendedGrid addFakeNodes(const GridModel& grid,
                              const std::vector<BranchId>& single_line_ufcs) {
  std::vector<BranchId> ids = single_line_ufcs;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (BranchId id : ids) {
    const Branch& b = grid.branch(id);
    if (!grid.node(b.from).monitored || !grid.node(b.to).monitored) {
      throw ModelError("branch " + std::to_string(id) +
                       " does not join two monitored nodes");
    }
  }
  FakeExtendedGrid out{grid, {}};
  for (BranchId id : ids) {
    SplitResult split;
    out.grid = splitBranch(out.grid, id, 0.5, NodeKind::kFake, &split);
    out.registry.fake_to_branch[split.new_node] = id;
    out.registry.branch_split[id] = split;
  }
  return out;
}

double zeroSequenceCapacitance(const GridModel& grid) {
  double c0 = 0.0;
  for (const Branch& b : grid.branches()) {
    const Complex y0 = (b.shunt_from.sum() + b.shunt_to.sum()) / 3.0;
    c0 += y0.imag() / grid.omega();
  }
  return c0;
}

double tunedPetersenInductance(const GridModel& grid) {
  const double c0 = zeroSequenceCapacitance(grid);
  if (!(c0 > 0.0)) throw ModelError("network has no zero-sequence capacitance");
  const double w = grid.omega();
  return 1.0 / (3.0 * w * w * c0);
}

}  // namespace pmufdl
