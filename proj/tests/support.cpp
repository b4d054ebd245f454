#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace testing {

using pmufdl::Complex;
using pmufdl::Matrix3c;

namespace {

Edges fromPruefer(const std::vector<int>& seq, int n) {
  std::vector<int> degree(n + 1, 1);
  for (int v : seq) ++degree[v];
  Edges edges;
  for (int v : seq) {
    for (int leaf = 1; leaf <= n; ++leaf) {
      if (degree[leaf] == 1) {
        edges.emplace_back(leaf, v);
        --degree[leaf];
        --degree[v];
        break;
      }
    }
  }
  int u = 0;
  for (int k = 1; k <= n; ++k) {
    if (degree[k] == 1) {
      if (u == 0) {
        u = k;
      } else {
        edges.emplace_back(u, k);
      }
    }
  }
  return edges;
}

std::vector<std::vector<int>> adjacency(const Edges& edges, int n) {
  std::vector<std::vector<int>> adj(n + 1);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

std::string rootedCode(const std::vector<std::vector<int>>& adj, int v, int parent) {
  std::vector<std::string> parts;
  for (int w : adj[v]) {
    if (w != parent) parts.push_back(rootedCode(adj, w, v));
  }
  std::sort(parts.begin(), parts.end());
  std::string s = "(";
  for (const auto& p : parts) s += p;
  return s + ")";
}

// AHU code rooted at the center(s); the smaller code for bicentral trees.
std::string canonical(const Edges& edges, int n) {
  const auto adj = adjacency(edges, n);
  std::vector<int> degree(n + 1, 0);
  std::vector<int> layer;
  for (int v = 1; v <= n; ++v) {
    degree[v] = static_cast<int>(adj[v].size());
    if (degree[v] <= 1) layer.push_back(v);
  }
  int remaining = n;
  while (remaining > 2) {
    remaining -= static_cast<int>(layer.size());
    std::vector<int> next;
    for (int v : layer) {
      for (int w : adj[v]) {
        if (--degree[w] == 1) next.push_back(w);
      }
    }
    layer = next;
  }
  std::string best;
  for (int c : layer) {
    const std::string code = rootedCode(adj, c, 0);
    if (best.empty() || code < best) best = code;
  }
  return best;
}

Matrix3c randomSymmetric(std::mt19937_64& rng, double diag_re, double diag_im, double off) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Matrix3c m;
  for (int r = 0; r < 3; ++r) {
    m(r, r) = Complex(diag_re * u(rng), diag_im * u(rng));
    for (int c = r + 1; c < 3; ++c) {
      m(r, c) = m(c, r) = Complex(off * diag_re * u(rng), off * diag_im * u(rng));
    }
  }
  return m;
}

}  // namespace

std::vector<Edges> nonIsomorphicTrees(int n) {
  if (n == 2) return {Edges{{1, 2}}};
  std::vector<Edges> out;
  std::set<std::string> seen;
  std::vector<int> seq(n - 2, 1);
  while (true) {
    Edges e = fromPruefer(seq, n);
    if (seen.insert(canonical(e, n)).second) out.push_back(std::move(e));
    int k = n - 3;
    while (k >= 0 && seq[k] == n) seq[k--] = 1;
    if (k < 0) break;
    ++seq[k];
  }
  return out;
}

Edges randomTree(int n, std::mt19937_64& rng) {
  if (n == 2) return Edges{{1, 2}};
  std::uniform_int_distribution<int> pick(1, n);
  std::vector<int> seq(n - 2);
  for (int& v : seq) v = pick(rng);
  return fromPruefer(seq, n);
}

Edges chain(int n) {
  Edges e;
  for (int k = 1; k < n; ++k) e.emplace_back(k, k + 1);
  return e;
}

Edges star(int leaves) {
  Edges e;
  for (int k = 2; k <= leaves + 1; ++k) e.emplace_back(1, k);
  return e;
}

pmufdl::GridModel makeGrid(const Edges& edges, const pmufdl::NodeSet& monitored,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(edges.size()) + 1;
  std::vector<pmufdl::Node> nodes;
  for (int id = 1; id <= n; ++id) {
    pmufdl::Node node;
    node.id = id;
    node.name = "n" + std::to_string(id);
    node.monitored = monitored.contains(id);
    nodes.push_back(node);
  }
  std::vector<pmufdl::Branch> branches;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    pmufdl::Branch b;
    b.id = static_cast<int>(k) + 1;
    b.from = edges[k].first;
    b.to = edges[k].second;
    b.series_impedance = randomSymmetric(rng, 0.5, 0.8, 0.3);
    const Matrix3c shunt = randomSymmetric(rng, 1e-7, 2e-4, -0.2);
    b.shunt_from = b.shunt_to = shunt;
    branches.push_back(b);
  }
  const double v = 11547.0;
  std::vector<pmufdl::Source> sources(1);
  sources[0].node = 1;
  for (int p = 0; p < 3; ++p) sources[0].emf(p) = std::polar(v, -2.0 * M_PI * p / 3.0);
  sources[0].impedance = Matrix3c::Identity() * Complex(0.05, 0.5);
  std::vector<pmufdl::Load> loads;
  std::uniform_real_distribution<double> size(1500.0, 4000.0);
  for (int id = 2; id <= n; ++id) {
    pmufdl::Load l;
    l.node = id;
    const Complex z(size(rng), 0.3 * size(rng));
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) l.delta_impedance(p, q) = p == q ? Complex{} : z;
    }
    loads.push_back(l);
  }
  return pmufdl::GridModel(std::move(nodes), std::move(branches), std::move(sources),
                           std::move(loads), 50.0);
}

std::vector<pmufdl::NodeSet> allPatterns(int n) {
  std::vector<pmufdl::NodeSet> out;
  for (unsigned mask = 0; mask < (1U << n); ++mask) {
    std::vector<int> ids;
    for (int k = 0; k < n; ++k) {
      if (mask & (1U << k)) ids.push_back(k + 1);
    }
    out.emplace_back(std::move(ids));
  }
  return out;
}

std::string dataPath(const std::string& name) { return std::string(PMUFDL_DATA_DIR) + "/" + name; }

}  // namespace testing
