#include "rfa/arch_graph.hpp"

#include <array>
#include <functional>
#include <queue>
#include <utility>

#include "rfa/error.hpp"

namespace rfa {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 10> kKindNames{{
    {LayerKind::Input, "input"},
    {LayerKind::Conv, "conv"},
    {LayerKind::DepthwiseConv, "dwconv"},
    {LayerKind::Pool, "pool"},
    {LayerKind::GlobalPool, "gpool"},
    {LayerKind::Dense, "dense"},
    {LayerKind::Neutral, "neutral"},
    {LayerKind::Add, "add"},
    {LayerKind::Concat, "concat"},
    {LayerKind::Output, "output"},
}};

void check_layer(const LayerNode& node) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::InvalidLayer, "vertex '" + node.id + "': " + what);
  };
  if (node.id.empty()) throw Error(ErrorCode::InvalidLayer, "vertex with empty id");
  if (!node.kernel.all_at_least(1)) fail("kernel must be >= 1");
  if (!node.stride.all_at_least(1)) fail("stride must be >= 1");
  if (!node.dilation.all_at_least(1)) fail("dilation must be >= 1");
  if (node.groups < 1) fail("groups must be >= 1");
  if (node.channels_in < 0 || node.channels_out < 0) fail("channel counts must be >= 0");
  if (!is_spatial(node.kind)) {
    const Size2 unit{1, 1};
    if (node.kernel != unit || node.stride != unit || node.dilation != unit) {
      fail(std::string(to_string(node.kind)) + " vertices must have kernel = stride = dilation = 1x1");
    }
  }
  if (node.transposed && node.kind != LayerKind::Conv && node.kind != LayerKind::DepthwiseConv) {
    fail("only convolutions can be transposed");
  }
  if (node.kind == LayerKind::Input && !node.predecessors.empty()) fail("input vertex has predecessors");
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> layer_kind_from_string(std::string_view keyword) {
  for (const auto& [k, name] : kKindNames) {
    if (name == keyword) return k;
  }
  return std::nullopt;
}

ArchGraph validate(GraphDraft draft) {
  ArchGraph g;
  g.name_ = std::move(draft.name);
  g.design_resolution_ = draft.design_resolution;
  g.nodes_ = std::move(draft.nodes);
  const std::size_t n = g.nodes_.size();

  if (g.design_resolution_ && !g.design_resolution_->all_at_least(1)) {
    throw Error(ErrorCode::InvalidLayer, "design resolution must be >= 1x1");
  }

  std::optional<std::size_t> input;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerNode& node = g.nodes_[i];
    check_layer(node);
    if (!g.index_.emplace(node.id, i).second) {
      throw Error(ErrorCode::DuplicateId, "vertex id '" + node.id + "' appears more than once");
    }
    if (node.kind == LayerKind::Input) {
      if (input) {
        throw Error(ErrorCode::MultipleInputs,
                    "models with more than one input are not supported ('" +
                        g.nodes_[*input].id + "', '" + node.id + "')");
      }
      input = i;
    }
  }
  if (!input) throw Error(ErrorCode::MissingInput, "graph has no input vertex");
  g.input_ = *input;

  g.preds_.assign(n, {});
  g.succs_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const LayerNode& node = g.nodes_[i];
    if (i != g.input_ && node.predecessors.empty()) {
      throw Error(ErrorCode::UnreachableVertex, "vertex '" + node.id + "' has no predecessors");
    }
    for (const NodeId& pred : node.predecessors) {
      const auto it = g.index_.find(pred);
      if (it == g.index_.end()) {
        throw Error(ErrorCode::MissingPredecessor,
                    "vertex '" + node.id + "' references unknown predecessor '" + pred + "'");
      }
      g.preds_[i].push_back(it->second);
      g.succs_[it->second].push_back(i);
    }
  }

  // Kahn's algorithm; the min-heap on insertion index makes the order unique.
  std::vector<std::size_t> in_degree(n);
  for (std::size_t i = 0; i < n; ++i) in_degree[i] = g.preds_[i].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_degree[i] == 0) ready.push(i);
  }
  g.topo_.reserve(n);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    g.topo_.push_back(v);
    for (std::size_t s : g.succs_[v]) {
      if (--in_degree[s] == 0) ready.push(s);
    }
  }
  if (g.topo_.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (in_degree[i] != 0) {
        throw Error(ErrorCode::CycleDetected, "vertex '" + g.nodes_[i].id + "' lies on a cycle");
      }
    }
  }
  g.topo_pos_.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) g.topo_pos_[g.topo_[pos]] = pos;

  std::vector<bool> reached(n, false);
  std::vector<std::size_t> stack{g.input_};
  reached[g.input_] = true;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t s : g.succs_[v]) {
      if (!reached[s]) {
        reached[s] = true;
        stack.push_back(s);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!reached[i]) {
      throw Error(ErrorCode::UnreachableVertex,
                  "vertex '" + g.nodes_[i].id + "' is not reachable from the input");
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (g.nodes_[i].kind == LayerKind::Output) g.outputs_.push_back(i);
  }
  if (g.outputs_.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (g.succs_[i].empty()) g.outputs_.push_back(i);
    }
  }
  return g;
}

ArchGraph validate(const ArchGraph& graph) { return validate(graph.draft()); }

const LayerNode& ArchGraph::node(std::string_view id) const {
  const auto idx = find(id);
  if (!idx) throw Error(ErrorCode::UnknownVertex, "no vertex '" + std::string(id) + "'");
  return nodes_[*idx];
}

std::optional<std::size_t> ArchGraph::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> ArchGraph::output_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(outputs_.size());
  for (std::size_t i : outputs_) ids.push_back(nodes_[i].id);
  return ids;
}

GraphDraft ArchGraph::draft() const { return GraphDraft{name_, design_resolution_, nodes_}; }

std::vector<NodeId> topo_order(const ArchGraph& graph) {
  std::vector<NodeId> order;
  order.reserve(graph.size());
  for (std::size_t i : graph.topological()) order.push_back(graph.node(i).id);
  return order;
}

std::int64_t count_params(const LayerNode& node) {
  switch (node.kind) {
    case LayerKind::Conv:
    case LayerKind::DepthwiseConv:
    case LayerKind::Dense: {
      if (node.channels_in <= 0 || node.channels_out <= 0) {
        throw Error(ErrorCode::UnknownChannels,
                    "vertex '" + node.id + "' needs known input and output channel counts");
      }
      const std::int64_t taps = node.kind == LayerKind::Dense ? 1 : node.kernel.h * node.kernel.w;
      const std::int64_t weights = taps * node.channels_in * node.channels_out / node.groups;
      return weights + (node.has_bias ? node.channels_out : 0);
    }
    default:
      return 0;
  }
}

std::int64_t count_params(const ArchGraph& graph) {
  std::int64_t total = 0;
  for (const LayerNode& node : graph.nodes()) total += count_params(node);
  return total;
}

}  // namespace rfa
