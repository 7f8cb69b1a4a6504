#include "rfa/rf_engine.hpp"

#include <algorithm>
#include <string>

#include "rfa/error.hpp"

namespace rfa {

AxisFrontier prune_min(AxisFrontier states) {
  std::sort(states.begin(), states.end(), [](const PathState& a, const PathState& b) {
    return a.g != b.g ? a.g < b.g : a.r < b.r;
  });
  AxisFrontier kept;
  for (const PathState& s : states) {
    // Survives only if no state with smaller-or-equal g has smaller-or-equal r.
    if (kept.empty() || s.r < kept.back().r) kept.push_back(s);
  }
  return kept;
}

AxisFrontier prune_max(AxisFrontier states) {
  std::sort(states.begin(), states.end(), [](const PathState& a, const PathState& b) {
    return a.g != b.g ? a.g > b.g : a.r > b.r;
  });
  AxisFrontier kept;
  for (const PathState& s : states) {
    if (kept.empty() || s.r > kept.back().r) kept.push_back(s);
  }
  std::reverse(kept.begin(), kept.end());
  return kept;
}

PathState advance(const PathState& state, std::int64_t effective_kernel, std::int64_t stride,
                  bool transposed) {
  PathState next;
  if (transposed) {
    next.g = state.g / stride;
    next.r = state.r + ceil(next.g * (effective_kernel - 1));
  } else {
    next.r = state.r + ceil(state.g * (effective_kernel - 1));
    next.g = state.g * stride;
  }
  return next;
}

RFResult::RFResult(std::vector<NodeId> ids, std::vector<VertexRF> vertices)
    : ids_(std::move(ids)), vertices_(std::move(vertices)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

const VertexRF& RFResult::at(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorCode::UnknownVertex, "no vertex '" + std::string(id) + "'");
  return vertices_[it->second];
}

namespace {

AxisFrontier advance_all(const AxisFrontier& states, std::int64_t k, std::int64_t s, bool transposed) {
  AxisFrontier out;
  out.reserve(states.size());
  for (const PathState& st : states) out.push_back(advance(st, k, s, transposed));
  return out;
}

}  // namespace

RFResult propagate(const ArchGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<VertexRF> result(n);

  for (std::size_t v : graph.topological()) {
    const LayerNode& node = graph.node(v);
    VertexRF& out = result[v];
    if (v == graph.input_index()) {
      const PathState origin{};
      out.min_frontier = {{origin}, {origin}};
      out.max_frontier = out.min_frontier;
    } else {
      const Size2 k = effective_kernel(node.kernel, node.dilation);
      AxisFrontier min_h, min_w, max_h, max_w;
      for (std::size_t p : graph.predecessors(v)) {
        const VertexRF& in = result[p];
        auto append = [](AxisFrontier& dst, const AxisFrontier& src) {
          dst.insert(dst.end(), src.begin(), src.end());
        };
        append(min_h, advance_all(in.min_frontier.h, k.h, node.stride.h, node.transposed));
        append(min_w, advance_all(in.min_frontier.w, k.w, node.stride.w, node.transposed));
        append(max_h, advance_all(in.max_frontier.h, k.h, node.stride.h, node.transposed));
        append(max_w, advance_all(in.max_frontier.w, k.w, node.stride.w, node.transposed));
      }
      out.min_frontier = {prune_min(std::move(min_h)), prune_min(std::move(min_w))};
      out.max_frontier = {prune_max(std::move(max_h)), prune_max(std::move(max_w))};
    }

    // Both frontiers are sorted by ascending g with strictly descending r.
    const auto& fmin = out.min_frontier;
    const auto& fmax = out.max_frontier;
    out.r_min = {fmin.h.back().r, fmin.w.back().r};
    out.r_max = {fmax.h.front().r, fmax.w.front().r};
    out.g_min = {fmin.h.front().g, fmin.w.front().g};
    out.g_max = {fmax.h.back().g, fmax.w.back().g};
  }

  std::vector<NodeId> ids;
  ids.reserve(n);
  for (const LayerNode& node : graph.nodes()) ids.push_back(node.id);
  return RFResult(std::move(ids), std::move(result));
}

namespace {

struct PathEnumerator {
  const ArchGraph& graph;
  std::size_t cap;
  PathBounds bounds;
  std::vector<std::size_t> path;  // target first, input last

  void visit(std::size_t v) {
    path.push_back(v);
    if (v == graph.input_index()) {
      evaluate();
    } else {
      for (std::size_t p : graph.predecessors(v)) visit(p);
    }
    path.pop_back();
  }

  // r = 1 + sum over vertices after the input of (k_i - 1) * growth before i.
  std::int64_t axis_rf(bool height) const {
    std::int64_t r = 1;
    Growth product{1};
    for (auto it = path.rbegin() + 1; it != path.rend(); ++it) {
      const LayerNode& node = graph.node(*it);
      const Size2 k = effective_kernel(node.kernel, node.dilation);
      const std::int64_t kernel = height ? k.h : k.w;
      const std::int64_t stride = height ? node.stride.h : node.stride.w;
      if (node.transposed) {
        product /= stride;
        r += ceil(product * (kernel - 1));
      } else {
        r += ceil(product * (kernel - 1));
        product *= stride;
      }
    }
    return r;
  }

  void evaluate() {
    if (++bounds.paths > cap) {
      throw Error(ErrorCode::PathExplosion,
                  "more than " + std::to_string(cap) + " paths reach vertex '" +
                      graph.node(path.front()).id + "'");
    }
    const Size2 r{axis_rf(true), axis_rf(false)};
    if (bounds.paths == 1) {
      bounds.r_min = bounds.r_max = r;
    } else {
      bounds.r_min = min(bounds.r_min, r);
      bounds.r_max = max(bounds.r_max, r);
    }
  }
};

}  // namespace

PathBounds brute_force_rf(const ArchGraph& graph, std::string_view id, std::size_t path_cap) {
  const auto target = graph.find(id);
  if (!target) throw Error(ErrorCode::UnknownVertex, "no vertex '" + std::string(id) + "'");
  PathEnumerator e{graph, path_cap, {}, {}};
  e.visit(*target);
  return e.bounds;
}

}  // namespace rfa
