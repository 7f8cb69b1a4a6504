#include "rfa/analysis.hpp"

#include "rfa/error.hpp"

namespace rfa {

std::string_view to_string(LayerFlag flag) {
  switch (flag) {
    case LayerFlag::Productive: return "productive";
    case LayerFlag::Underutilized: return "underutilized";
    case LayerFlag::Unproductive: return "unproductive";
  }
  return "unknown";
}

Size2 kernel_footprint(const ArchGraph& graph, const RFResult& rf, std::size_t index) {
  const LayerNode& node = graph.node(index);
  if (!is_spatial(node.kind)) return {1, 1};
  Growth2 coarsest{Growth{0}, Growth{0}};
  for (std::size_t p : graph.predecessors(index)) {
    const Growth2& g = rf.at(p).g_max;
    coarsest.h = std::max(coarsest.h, g.h);
    coarsest.w = std::max(coarsest.w, g.w);
  }
  if (node.transposed) {
    coarsest.h /= node.stride.h;
    coarsest.w /= node.stride.w;
  }
  const Size2 k = effective_kernel(node.kernel, node.dilation);
  return min(Size2{ceil(coarsest.h * k.h), ceil(coarsest.w * k.w)}, rf.at(index).r_max);
}

Size2 compute_imin(const ArchGraph& graph, const RFResult& rf) {
  Size2 result{1, 1};
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (!is_layer(graph.node(i).kind)) continue;
    result = max(result, rf.at(i).r_min);
    result = max(result, kernel_footprint(graph, rf, i));
  }
  return result;
}

Size2 compute_imax(const ArchGraph& graph, const RFResult& rf) {
  Size2 result{1, 1};
  for (std::size_t i = 0; i < graph.size(); ++i) result = max(result, rf.at(i).r_max);
  return result;
}

AnalysisReport classify(const ArchGraph& graph, const RFResult& rf, const Size2& input_resolution) {
  if (!input_resolution.all_at_least(1)) {
    throw Error(ErrorCode::InvalidLayer, "input resolution must be >= 1x1");
  }
  AnalysisReport report;
  report.model = graph.name();
  report.input_resolution = input_resolution;
  report.i_min = compute_imin(graph, rf);
  report.i_max = compute_imax(graph, rf);
  report.fully_utilized = true;

  for (std::size_t i : graph.topological()) {
    const LayerNode& node = graph.node(i);
    const VertexRF& v = rf.at(i);
    LayerReport layer{node.id, node.name, node.kind, node.kernel, node.stride, v.r_min, v.r_max,
                      LayerFlag::Productive};
    if (is_layer(node.kind)) {
      bool first = true;
      Size2 best_input;
      for (std::size_t p : graph.predecessors(i)) {
        best_input = first ? rf.at(p).r_min : min(best_input, rf.at(p).r_min);
        first = false;
      }
      if (all_greater_equal(best_input, input_resolution)) {
        layer.flag = LayerFlag::Unproductive;
      } else if (all_greater_equal(v.r_min, input_resolution) ||
                 all_greater_equal(kernel_footprint(graph, rf, i), input_resolution)) {
        layer.flag = LayerFlag::Underutilized;
      }
    }
    if (layer.flag != LayerFlag::Productive) report.fully_utilized = false;
    report.layers.push_back(std::move(layer));
  }
  return report;
}

}  // namespace rfa
