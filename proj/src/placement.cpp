#include "pmufdl/placement.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

namespace pmufdl {

namespace {

constexpr double kCostEps = 1e-9;

PlacementSolution makeSolution(const PlacementProblem& p, std::vector<int> gamma) {
  PlacementSolution s;
  s.gamma = std::move(gamma);
  s.feasible = true;
  for (std::size_t i = 0; i < s.gamma.size(); ++i) {
    if (s.gamma[i]) {
      ++s.d;
      s.cost += p.c(static_cast<Eigen::Index>(i));
    }
  }
  return s;
}

void validate(const PlacementProblem& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  if (p.A.rows() != n || p.A.cols() != n || p.c.size() != n) {
    throw ModelError("placement problem dimensions disagree");
  }
  if ((p.A.array() < 0).any()) throw ModelError("A must be nonnegative");
  if (!(p.c.array() > 0.0).all()) throw ModelError("costs must be positive");
  for (NodeId id : p.forced_ones) {
    if (id < 1 || id > n) throw ModelError("forced node out of range");
  }
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const PlacementProblem& p)
      : p_(p), n_(static_cast<int>(p.size())), value_(n_, -1) {}

  PlacementSolution run() {
    for (NodeId id : p_.forced_ones) value_[id - 1] = 1;
    search(value_);
    if (best_.empty()) return {};
    PlacementSolution s = makeSolution(p_, best_);
    s.optimal = true;
    return s;
  }

 private:
  // Returns false when some row can no longer be satisfied.
  bool propagate(std::vector<int>& v) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < n_; ++i) {
        int reachable = 0;
        for (int j = 0; j < n_; ++j) {
          if (v[j] != 0) reachable += p_.A(i, j);
        }
        if (reachable < p_.f(i)) return false;
        for (int j = 0; j < n_; ++j) {
          if (v[j] == -1 && p_.A(i, j) > 0 && reachable - p_.A(i, j) < p_.f(i)) {
            v[j] = 1;
            changed = true;
          }
        }
      }
    }
    return true;
  }

  // Fixed cost plus fractional covering bounds of rows with disjoint support.
  double bound(const std::vector<int>& v) const {
    double fixed = 0.0;
    for (int j = 0; j < n_; ++j) {
      if (v[j] == 1) fixed += p_.c(j);
    }
    std::vector<std::pair<double, int>> rows;
    for (int i = 0; i < n_; ++i) {
      int deficit = p_.f(i);
      std::vector<std::pair<double, int>> options;
      for (int j = 0; j < n_; ++j) {
        if (p_.A(i, j) == 0) continue;
        if (v[j] == 1) deficit -= p_.A(i, j);
        if (v[j] == -1) options.emplace_back(p_.c(j) / p_.A(i, j), p_.A(i, j));
      }
      if (deficit <= 0) continue;
      std::sort(options.begin(), options.end());
      double lb = 0.0;
      double need = deficit;
      for (const auto& [ratio, coef] : options) {
        const double take = std::min<double>(need, coef);
        lb += ratio * take;
        need -= take;
        if (need <= 0.0) break;
      }
      rows.emplace_back(lb, i);
    }
    std::sort(rows.begin(), rows.end(), std::greater<>());
    std::vector<char> used(n_, 0);
    double extra = 0.0;
    for (const auto& [lb, i] : rows) {
      bool disjoint = true;
      for (int j = 0; j < n_ && disjoint; ++j) {
        if (v[j] == -1 && p_.A(i, j) > 0 && used[j]) disjoint = false;
      }
      if (!disjoint) continue;
      for (int j = 0; j < n_; ++j) {
        if (v[j] == -1 && p_.A(i, j) > 0) used[j] = 1;
      }
      extra += lb;
    }
    return fixed + extra;
  }

  void search(std::vector<int> v) {
    if (!propagate(v)) return;
    if (!best_.empty() && bound(v) >= best_cost_ - kCostEps) return;
    const auto next = std::find(v.begin(), v.end(), -1);
    if (next == v.end()) {
      double cost = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (v[j]) cost += p_.c(j);
      }
      if (best_.empty() || cost < best_cost_ - kCostEps) {
        best_ = v;
        best_cost_ = cost;
      }
      return;
    }
    for (int value : {0, 1}) {
      std::vector<int> child = v;
      *(child.begin() + (next - v.begin())) = value;
      search(std::move(child));
    }
  }

  const PlacementProblem& p_;
  int n_;
  std::vector<int> value_;
  std::vector<int> best_;
  double best_cost_ = std::numeric_limits<double>::infinity();
};

}  // namespace

NodeSet PlacementSolution::monitored() const {
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (gamma[i]) ids.push_back(static_cast<NodeId>(i + 1));
  }
  return NodeSet(std::move(ids));
}

PlacementProblem buildProblem(const GridModel& grid, CostOption option,
                              const NodeSet& forced_split_nodes) {
  const auto n = static_cast<Eigen::Index>(grid.nodeCount());
  PlacementProblem p;
  p.A = Eigen::MatrixXi::Zero(n, n);
  p.f = Eigen::VectorXi::Zero(n);
  p.c = Eigen::VectorXd::Ones(n);
  std::vector<NodeId> leaves;
  for (const Node& node : grid.nodes()) {
    const Eigen::Index i = node.id - 1;
    const int rho = grid.degree(node.id);
    p.A(i, i) = rho;
    p.f(i) = rho;
    for (NodeId k : grid.neighbors(node.id)) p.A(i, k - 1) = 1;
    if (rho == 1) leaves.push_back(node.id);
    if (option == CostOption::kResolution && rho > 2) {
      p.c(i) = static_cast<double>(n) * rho;
    }
  }
  p.forced_ones = NodeSet(std::move(leaves));
  for (NodeId kappa : forced_split_nodes) {
    if (grid.degree(kappa) <= 2) {
      throw ModelError("forced split node " + std::to_string(kappa) +
                       " is not a fork (degree <= 2)");
    }
    for (NodeId j : grid.neighbors(kappa)) {
      if (grid.degree(j) > 2) p.c(j - 1) = 1.0;
    }
  }
  p.forced_split_nodes = forced_split_nodes;
  return p;
}

bool satisfiesConstraints(const PlacementProblem& p, const std::vector<int>& gamma) {
  if (gamma.size() != p.size()) return false;
  Eigen::VectorXi g(static_cast<Eigen::Index>(gamma.size()));
  for (std::size_t i = 0; i < gamma.size(); ++i) g(static_cast<Eigen::Index>(i)) = gamma[i];
  if (((p.A * g).array() < p.f.array()).any()) return false;
  for (NodeId id : p.forced_ones) {
    if (!gamma[id - 1]) return false;
  }
  return true;
}

PlacementSolution solvePlacement(const PlacementProblem& problem) {
  validate(problem);
  return BranchAndBound(problem).run();
}

PlacementSolution exhaustiveOracle(const PlacementProblem& problem) {
  validate(problem);
  const std::size_t n = problem.size();
  if (n > 20) throw ModelError("exhaustive oracle limited to 20 nodes");
  std::vector<int> free_vars;
  std::vector<int> gamma(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (problem.forced_ones.contains(static_cast<NodeId>(i + 1))) {
      gamma[i] = 1;
    } else {
      free_vars.push_back(static_cast<int>(i));
    }
  }
  const std::size_t k = free_vars.size();
  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    // first free variable is the most significant bit: lexicographic order
    for (std::size_t j = 0; j < k; ++j) {
      gamma[free_vars[j]] = static_cast<int>((mask >> (k - 1 - j)) & 1U);
    }
    if (!satisfiesConstraints(problem, gamma)) continue;
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (gamma[i]) cost += problem.c(static_cast<Eigen::Index>(i));
    }
    if (cost < best_cost - kCostEps) {
      best_cost = cost;
      best = gamma;
    }
  }
  if (best.empty()) return {};
  PlacementSolution s = makeSolution(problem, best);
  s.optimal = true;
  return s;
}

PlacementSolution optimizePlacement(const GridModel& grid, CostOption option,
                                    const NodeSet& forced_split_nodes) {
  PlacementSolution s = solvePlacement(buildProblem(grid, option, forced_split_nodes));
  if (s.feasible) {
    s.r = static_cast<int>(computeClusters(grid, s.monitored()).count());
  }
  return s;
}

}  // namespace pmufdl
