#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pmufdl/grid.hpp"

namespace testing {

using Edges = std::vector<std::pair<int, int>>;

/// One representative of every unlabeled tree on n nodes (n >= 2).
std::vector<Edges> nonIsomorphicTrees(int n);
/// Uniform random labeled tree on n nodes.
Edges randomTree(int n, std::mt19937_64& rng);
Edges chain(int n);
/// Center node 1 joined to nodes 2..k+1.
Edges star(int leaves);

/// Tree grid with generic random line data, a source at node 1 and a delta
/// load at every other node. Branch k joins edges[k-1].
pmufdl::GridModel makeGrid(const Edges& edges, const pmufdl::NodeSet& monitored,
                           std::uint64_t seed = 7);

/// All subsets of {1..n} as node sets.
std::vector<pmufdl::NodeSet> allPatterns(int n);

std::string dataPath(const std::string& name);

}  // namespace testing
