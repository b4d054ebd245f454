#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pmufdl/grid.hpp"
#include "pmufdl/observability.hpp"

namespace pmufdl {

enum class CostOption { kUniform, kResolution };

/// min c^T g  s.t.  A g >= f,  g_i = 1 for forced nodes,  g binary.
/// Index i of every vector corresponds to node id i + 1.
struct PlacementProblem {
  Eigen::MatrixXi A;
  Eigen::VectorXi f;
  Eigen::VectorXd c;
  NodeSet forced_ones;
  NodeSet forced_split_nodes;

  std::size_t size() const { return static_cast<std::size_t>(f.size()); }
};

struct PlacementSolution {
  std::vector<int> gamma;
  int d = 0;
  double cost = 0.0;
  int r = 0;  // cluster count, filled by optimizePlacement
  bool feasible = false;
  bool optimal = false;

  NodeSet monitored() const;
};

/// A_ii = degree, A_ik = 1 for neighbours; f_i = degree; leaves forced.
/// Resolution costs: 1 for degree <= 2, n * degree for forks. Each forced
/// split fork lowers the cost of its adjacent forks to 1.
PlacementProblem buildProblem(const GridModel& grid, CostOption option,
                              const NodeSet& forced_split_nodes = {});

/// Exact depth-first branch and bound. Variables are fixed in ascending node
/// order, 0 before 1, so the first optimum found is the lexicographically
/// smallest one.
PlacementSolution solvePlacement(const PlacementProblem& problem);

/// Enumerates every assignment of the free variables (n <= 20).
PlacementSolution exhaustiveOracle(const PlacementProblem& problem);

bool satisfiesConstraints(const PlacementProblem& problem, const std::vector<int>& gamma);

/// buildProblem + solvePlacement, with r taken from computeClusters.
PlacementSolution optimizePlacement(const GridModel& grid, CostOption option,
                                    const NodeSet& forced_split_nodes = {});

}  // namespace pmufdl
