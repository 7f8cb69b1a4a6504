#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rfa/geometry.hpp"

namespace rfa {

using NodeId = std::string;

enum class LayerKind {
  Input,
  Conv,
  DepthwiseConv,
  Pool,
  GlobalPool,
  Dense,
  Neutral,
  Add,
  Concat,
  Output,
};

// Lower-case keyword, identical to the DSL spelling ("conv", "dwconv", "add", ...).
std::string_view to_string(LayerKind kind);
std::optional<LayerKind> layer_kind_from_string(std::string_view keyword);

constexpr bool is_merge(LayerKind kind) { return kind == LayerKind::Add || kind == LayerKind::Concat; }

// Kinds whose kernel slides over a spatial feature map.
constexpr bool is_spatial(LayerKind kind) {
  return kind == LayerKind::Conv || kind == LayerKind::DepthwiseConv || kind == LayerKind::Pool;
}

constexpr bool is_parametric(LayerKind kind) {
  return kind == LayerKind::Conv || kind == LayerKind::DepthwiseConv || kind == LayerKind::Dense;
}

// Input and Output vertices are graph terminals, not layers.
constexpr bool is_layer(LayerKind kind) { return kind != LayerKind::Input && kind != LayerKind::Output; }

struct LayerNode {
  NodeId id;
  std::string name;
  LayerKind kind = LayerKind::Neutral;
  Size2 kernel;
  Size2 stride;
  Size2 dilation;
  // 0 means unknown; only parameter counting needs channels.
  std::int64_t channels_in = 0;
  std::int64_t channels_out = 0;
  std::int64_t groups = 1;
  bool has_bias = false;
  // Transposed convolution: the stride upsamples, dividing the growth factor.
  bool transposed = false;
  // Optional building-block label; prune-and-widen removes whole blocks.
  std::string block;
  std::vector<NodeId> predecessors;

  friend bool operator==(const LayerNode&, const LayerNode&) = default;
};

// Unvalidated graph description. Builders (DSL parser, ONNX loader, rewrites)
// fill one of these and hand it to validate().
struct GraphDraft {
  std::string name;
  std::optional<Size2> design_resolution;
  std::vector<LayerNode> nodes;
};

class ArchGraph;

// Returns the frozen graph iff every structural invariant holds; throws rfa::Error
// (CycleDetected, MultipleInputs, MissingInput, UnreachableVertex,
// MissingPredecessor, DuplicateId, InvalidLayer) otherwise.
ArchGraph validate(GraphDraft draft);
ArchGraph validate(const ArchGraph& graph);

// Validated, immutable architecture DAG with exactly one Input vertex.
// Nodes keep their insertion order; index-based accessors refer to it.
class ArchGraph {
 public:
  const std::string& name() const { return name_; }
  const std::optional<Size2>& design_resolution() const { return design_resolution_; }

  std::size_t size() const { return nodes_.size(); }
  std::span<const LayerNode> nodes() const { return nodes_; }
  const LayerNode& node(std::size_t index) const { return nodes_.at(index); }
  const LayerNode& node(std::string_view id) const;
  std::optional<std::size_t> find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id).has_value(); }

  std::size_t input_index() const { return input_; }
  const NodeId& input_id() const { return nodes_[input_].id; }
  std::span<const std::size_t> output_indices() const { return outputs_; }
  std::vector<NodeId> output_ids() const;

  std::span<const std::size_t> predecessors(std::size_t index) const { return preds_.at(index); }
  std::span<const std::size_t> successors(std::size_t index) const { return succs_.at(index); }

  // Topological order, ties broken by insertion order.
  std::span<const std::size_t> topological() const { return topo_; }
  // Position of a vertex within topological().
  std::size_t topo_position(std::size_t index) const { return topo_pos_.at(index); }

  // Editable copy for rewrites; validate(g.draft()) == g.
  GraphDraft draft() const;

  friend bool operator==(const ArchGraph& a, const ArchGraph& b) {
    return a.name_ == b.name_ && a.design_resolution_ == b.design_resolution_ &&
           a.nodes_ == b.nodes_;
  }

 private:
  friend ArchGraph validate(GraphDraft draft);
  ArchGraph() = default;

  std::string name_;
  std::optional<Size2> design_resolution_;
  std::vector<LayerNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
  std::vector<std::size_t> topo_;
  std::vector<std::size_t> topo_pos_;
  std::size_t input_ = 0;
  std::vector<std::size_t> outputs_;
};

std::vector<NodeId> topo_order(const ArchGraph& graph);

// Per axis d*(k-1)+1.
constexpr Size2 effective_kernel(const Size2& kernel, const Size2& dilation) {
  return {dilation.h * (kernel.h - 1) + 1, dilation.w * (kernel.w - 1) + 1};
}

// Weights (+ bias) of one vertex. Conv-like: kh*kw*(c_in/groups)*c_out,
// Dense: c_in*c_out. Everything else, normalization included, is free.
// Throws UnknownChannels for a parametric vertex with a zero channel count.
std::int64_t count_params(const LayerNode& node);
std::int64_t count_params(const ArchGraph& graph);

}  // namespace rfa
