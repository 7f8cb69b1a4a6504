#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rfa/arch_graph.hpp"
#include "rfa/geometry.hpp"

namespace rfa {

// One path prefix on one axis: accumulated receptive field and the cumulative
// stride product that scales every later kernel's increment.
struct PathState {
  std::int64_t r = 1;
  Growth g{1};

  friend bool operator==(const PathState&, const PathState&) = default;
};

// Pareto set of path states on one axis, sorted by ascending g.
//  - min variant: no state has both r and g <= another's (strict in one)
//  - max variant: the mirror condition
// Both are exact compressions of all paths: the per-edge update is monotone in
// r and g, so a dominated state can never overtake its dominator downstream.
using AxisFrontier = std::vector<PathState>;

struct Frontier {
  AxisFrontier h;
  AxisFrontier w;

  friend bool operator==(const Frontier&, const Frontier&) = default;
};

AxisFrontier prune_min(AxisFrontier states);
AxisFrontier prune_max(AxisFrontier states);

// Applies one vertex's kernel and stride to a state arriving on one axis.
//   regular:    r' = r + ceil((k_eff-1) * g),  g' = g * s
//   transposed: g' = g / s,                    r' = r + ceil((k_eff-1) * g')
PathState advance(const PathState& state, std::int64_t effective_kernel, std::int64_t stride,
                  bool transposed);

struct VertexRF {
  Size2 r_min;
  Size2 r_max;
  Growth2 g_min;
  Growth2 g_max;
  Frontier min_frontier;
  Frontier max_frontier;

  friend bool operator==(const VertexRF&, const VertexRF&) = default;
};

// Receptive-field bounds for every vertex of one graph, indexed like
// ArchGraph::nodes().
class RFResult {
 public:
  RFResult() = default;
  RFResult(std::vector<NodeId> ids, std::vector<VertexRF> vertices);

  std::size_t size() const { return vertices_.size(); }
  const VertexRF& at(std::size_t index) const { return vertices_.at(index); }
  const VertexRF& at(std::string_view id) const;
  const std::vector<VertexRF>& vertices() const { return vertices_; }

  friend bool operator==(const RFResult& a, const RFResult& b) {
    return a.ids_ == b.ids_ && a.vertices_ == b.vertices_;
  }

 private:
  std::vector<NodeId> ids_;
  std::vector<VertexRF> vertices_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Exact min/max receptive field over all input-to-vertex paths, by Pareto
// frontier dynamic programming in topological order. The input vertex starts
// at r = 1, g = 1.
RFResult propagate(const ArchGraph& graph);

struct PathBounds {
  Size2 r_min;
  Size2 r_max;
  std::size_t paths = 0;
};

inline constexpr std::size_t kDefaultPathCap = 1'000'000;

// Test oracle: enumerates every input-to-vertex path and evaluates the closed
// form r = 1 + sum_i (k_i - 1) * prod_{j<i} s_j along each. Throws PathExplosion
// once more than `path_cap` paths have been seen.
PathBounds brute_force_rf(const ArchGraph& graph, std::string_view id,
                          std::size_t path_cap = kDefaultPathCap);

}  // namespace rfa
