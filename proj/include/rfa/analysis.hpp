#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rfa/arch_graph.hpp"
#include "rfa/rf_engine.hpp"

namespace rfa {

enum class LayerFlag {
  Productive,
  // r_min(layer) >= resolution, or the kernel's footprint covers the whole
  // input feature map: the expansion spills past the image border.
  Underutilized,
  // The layer's best-case input already has r_min >= resolution.
  Unproductive,
};

std::string_view to_string(LayerFlag flag);

struct LayerReport {
  NodeId id;
  std::string name;
  LayerKind kind = LayerKind::Neutral;
  Size2 kernel;
  Size2 stride;
  Size2 r_min;
  Size2 r_max;
  LayerFlag flag = LayerFlag::Productive;

  friend bool operator==(const LayerReport&, const LayerReport&) = default;
};

struct AnalysisReport {
  std::string model;
  Size2 input_resolution;
  Size2 i_min;
  Size2 i_max;
  bool fully_utilized = true;
  std::vector<LayerReport> layers;  // topological order

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

// Input-pixel span of a spatial vertex's kernel on the feature map it slides
// over: ceil(k_eff * g), g being the coarsest growth factor reaching it. A layer
// whose footprint reaches the resolution sees a map no larger than its kernel.
// Capped at the vertex's r_max; (1,1) for non-spatial kinds.
Size2 kernel_footprint(const ArchGraph& graph, const RFResult& rf, std::size_t index);

// Minimal feasible input resolution: component-wise max over all layers of
// r_min and of the kernel footprint. Input/Output vertices are not layers.
Size2 compute_imin(const ArchGraph& graph, const RFResult& rf);

// Component-wise max of r_max over all vertices.
Size2 compute_imax(const ArchGraph& graph, const RFResult& rf);

// Flags every vertex against an input resolution. A condition holds only if
// it holds on both axes. Input and Output vertices are always Productive.
AnalysisReport classify(const ArchGraph& graph, const RFResult& rf, const Size2& input_resolution);

inline AnalysisReport analyze(const ArchGraph& graph, const Size2& input_resolution) {
  return classify(graph, propagate(graph), input_resolution);
}

}  // namespace rfa
