#include "rfa/onnx_loader.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "onnx_subset.pb.h"
#include "rfa/error.hpp"

namespace rfa {

const OnnxAttribute* OnnxNode::attribute(std::string_view key) const {
  for (const OnnxAttribute& a : attributes) {
    if (a.name == key) return &a;
  }
  return nullptr;
}

std::optional<std::int64_t> OnnxNode::int_attr(std::string_view key) const {
  const OnnxAttribute* a = attribute(key);
  return a ? a->i : std::nullopt;
}

std::optional<std::vector<std::int64_t>> OnnxNode::ints_attr(std::string_view key) const {
  const OnnxAttribute* a = attribute(key);
  if (!a) return std::nullopt;
  return a->ints;
}

std::size_t OnnxNode::dynamic_inputs() const {
  std::set<std::string_view> names;
  for (const OnnxInput& in : inputs) {
    if (!in.constant) names.insert(in.name);
  }
  return names.size();
}

const std::vector<std::int64_t>* OnnxNode::constant_dims(std::size_t idx) const {
  if (idx >= inputs.size() || !inputs[idx].constant || inputs[idx].dims.empty()) return nullptr;
  return &inputs[idx].dims;
}

namespace {

bool op_is(const OnnxNode& n, std::initializer_list<std::string_view> ops) {
  return std::find(ops.begin(), ops.end(), n.op_type) != ops.end();
}

// 1-D windows apply along height only.
Size2 window(const std::vector<std::int64_t>& v, std::int64_t fallback = 1) {
  if (v.empty()) return {fallback, fallback};
  if (v.size() == 1) return {v[0], 1};
  return {v[0], v[1]};
}

Size2 window_attr(const OnnxNode& n, std::string_view key) {
  const auto v = n.ints_attr(key);
  return v ? window(*v) : Size2{1, 1};
}

Size2 conv_kernel(const OnnxNode& n) {
  if (const auto k = n.ints_attr("kernel_shape")) return window(*k);
  if (const auto* w = n.constant_dims(1); w && w->size() >= 3) {
    return window(std::vector<std::int64_t>(w->begin() + 2, w->end()));
  }
  throw Error(ErrorCode::MissingKernelAttribute, "node '" + n.name + "' (" + n.op_type + ") has no kernel_shape");
}

std::int64_t group_of(const OnnxNode& n) { return n.int_attr("group").value_or(1); }

// Input channels implied by a Conv weight [c_out, c_in/group, ...].
std::int64_t conv_c_in(const OnnxNode& n) {
  const auto* w = n.constant_dims(1);
  return w && w->size() >= 2 ? (*w)[1] * group_of(n) : 0;
}

void extract_conv(const OnnxNode& n, LayerNode& v) {
  v.kernel = conv_kernel(n);
  v.stride = window_attr(n, "strides");
  v.dilation = window_attr(n, "dilations");
  v.groups = group_of(n);
  if (const auto* w = n.constant_dims(1); w && w->size() >= 2) {
    v.channels_out = (*w)[0];
    v.channels_in = (*w)[1] * v.groups;
  }
  v.has_bias = n.inputs.size() > 2 && !n.inputs[2].name.empty();
}

Handler make(std::string name, std::function<bool(const OnnxNode&)> matches,
             std::function<void(const OnnxNode&, LayerNode&)> extract) {
  return {std::move(name), std::move(matches), std::move(extract)};
}

std::string sanitize(const std::string& raw, const std::string& fallback) {
  std::string id;
  for (char c : raw) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    id.push_back(ok ? c : '_');
  }
  while (!id.empty() && id.front() == '_') id.erase(0, 1);
  if (id.empty()) id = fallback;
  if (!(std::isalpha(static_cast<unsigned char>(id.front())) || id.front() == '_')) id = "n" + id;
  return id;
}

class IdPool {
 public:
  std::string take(const std::string& raw, const std::string& fallback) {
    std::string id = sanitize(raw, fallback);
    if (used_.insert(id).second) return id;
    for (std::size_t k = 1;; ++k) {
      std::string candidate = id + "_" + std::to_string(k);
      if (used_.insert(candidate).second) return candidate;
    }
  }

 private:
  std::unordered_set<std::string> used_;
};

OnnxAttribute decode(const onnx::AttributeProto& a) {
  OnnxAttribute out;
  out.name = a.name();
  if (a.has_i()) out.i = a.i();
  if (a.has_f()) out.f = a.f();
  out.s = a.s();
  out.ints.assign(a.ints().begin(), a.ints().end());
  return out;
}

// Operators whose output is shape bookkeeping, never feature data.
bool is_meta_op(const std::string& op) {
  return op == "Constant" || op == "Shape" || op == "Size" || op == "ConstantOfShape";
}

}  // namespace

HandlerChain default_handlers() {
  HandlerChain chain;
  chain.push_back(make(
      "control-flow", [](const OnnxNode& n) { return op_is(n, {"LSTM", "GRU", "RNN", "Loop", "If", "Scan"}); },
      [](const OnnxNode& n, LayerNode&) {
        throw Error(ErrorCode::UnsupportedOperator,
                    "node '" + n.name + "': " + n.op_type + " cannot be analyzed statically");
      }));
  chain.push_back(make(
      "depthwise-conv",
      [](const OnnxNode& n) {
        const std::int64_t g = group_of(n);
        return n.op_type == "Conv" && g > 1 && conv_c_in(n) == g;
      },
      [](const OnnxNode& n, LayerNode& v) {
        extract_conv(n, v);
        v.kind = LayerKind::DepthwiseConv;
      }));
  chain.push_back(make(
      "conv", [](const OnnxNode& n) { return n.op_type == "Conv"; },
      [](const OnnxNode& n, LayerNode& v) {
        extract_conv(n, v);
        v.kind = LayerKind::Conv;
      }));
  chain.push_back(make(
      "conv-transpose", [](const OnnxNode& n) { return n.op_type == "ConvTranspose"; },
      [](const OnnxNode& n, LayerNode& v) {
        extract_conv(n, v);
        // ConvTranspose weights are [c_in, c_out/group, ...].
        if (const auto* w = n.constant_dims(1); w && w->size() >= 2) {
          v.channels_in = (*w)[0];
          v.channels_out = (*w)[1] * v.groups;
        }
        v.kind = v.groups > 1 && v.groups == v.channels_in ? LayerKind::DepthwiseConv : LayerKind::Conv;
        v.transposed = true;
      }));
  chain.push_back(make(
      "pool", [](const OnnxNode& n) { return op_is(n, {"MaxPool", "AveragePool", "LpPool"}); },
      [](const OnnxNode& n, LayerNode& v) {
        const auto k = n.ints_attr("kernel_shape");
        if (!k) {
          throw Error(ErrorCode::MissingKernelAttribute, "node '" + n.name + "' (" + n.op_type + ") has no kernel_shape");
        }
        v.kind = LayerKind::Pool;
        v.kernel = window(*k);
        v.stride = window_attr(n, "strides");
        v.dilation = window_attr(n, "dilations");
      }));
  chain.push_back(make(
      "global-pool",
      [](const OnnxNode& n) { return op_is(n, {"GlobalAveragePool", "GlobalMaxPool", "GlobalLpPool"}); },
      [](const OnnxNode&, LayerNode& v) { v.kind = LayerKind::GlobalPool; }));
  chain.push_back(make(
      "gemm", [](const OnnxNode& n) { return n.op_type == "Gemm"; },
      [](const OnnxNode& n, LayerNode& v) {
        v.kind = LayerKind::Dense;
        if (const auto* b = n.constant_dims(1); b && b->size() == 2) {
          const bool trans = n.int_attr("transB").value_or(0) != 0;
          v.channels_in = trans ? (*b)[1] : (*b)[0];
          v.channels_out = trans ? (*b)[0] : (*b)[1];
        }
        v.has_bias = n.inputs.size() > 2 && !n.inputs[2].name.empty();
      }));
  chain.push_back(make(
      "matmul", [](const OnnxNode& n) { return n.op_type == "MatMul" && n.constant_dims(1); },
      [](const OnnxNode& n, LayerNode& v) {
        v.kind = LayerKind::Dense;
        if (const auto* b = n.constant_dims(1); b->size() == 2) {
          v.channels_in = (*b)[0];
          v.channels_out = (*b)[1];
        }
      }));
  chain.push_back(make(
      "add", [](const OnnxNode& n) { return op_is(n, {"Add", "Sum"}) && n.dynamic_inputs() >= 2; },
      [](const OnnxNode&, LayerNode& v) { v.kind = LayerKind::Add; }));
  chain.push_back(make(
      "concat", [](const OnnxNode& n) { return n.op_type == "Concat" && n.dynamic_inputs() >= 2; },
      [](const OnnxNode&, LayerNode& v) { v.kind = LayerKind::Concat; }));
  chain.push_back(make(
      "neutral", [](const OnnxNode&) { return true; }, [](const OnnxNode&, LayerNode& v) { v.kind = LayerKind::Neutral; }));
  return chain;
}

HandlerChain register_handler(HandlerChain chain, Handler handler, std::size_t position) {
  if (chain.empty()) chain = default_handlers();
  if (position >= chain.size()) {
    throw Error(ErrorCode::TerminalDisplaced, "handler '" + handler.name + "' would follow the catch-all handler");
  }
  chain.insert(chain.begin() + static_cast<std::ptrdiff_t>(position), std::move(handler));
  return chain;
}

ArchGraph load_onnx(std::string_view bytes, const HandlerChain& chain) {
  if (chain.empty()) throw Error(ErrorCode::InvalidLayer, "empty handler chain");
  onnx::ModelProto model;
  if (!model.ParseFromArray(bytes.data(), static_cast<int>(bytes.size())) || !model.has_graph()) {
    throw Error(ErrorCode::MalformedFile, "not an ONNX model");
  }
  const onnx::GraphProto& g = model.graph();

  std::unordered_map<std::string, std::vector<std::int64_t>> constants;
  for (const auto& t : g.initializer()) constants[t.name()].assign(t.dims().begin(), t.dims().end());

  std::vector<const onnx::ValueInfoProto*> inputs;
  for (const auto& in : g.input()) {
    if (!constants.contains(in.name())) inputs.push_back(&in);
  }
  if (inputs.size() > 1) {
    throw Error(ErrorCode::MultipleInputs, std::to_string(inputs.size()) + " graph inputs; exactly one is supported");
  }
  if (inputs.empty()) throw Error(ErrorCode::MalformedFile, "graph has no input tensor");

  GraphDraft draft;
  draft.name = sanitize(g.name(), "model");
  IdPool ids;
  LayerNode input;
  input.kind = LayerKind::Input;
  input.name = inputs[0]->name();
  input.id = ids.take(input.name, "input");
  if (inputs[0]->type().has_tensor_type()) {
    const auto& dims = inputs[0]->type().tensor_type().shape().dim();
    if (dims.size() >= 2 && dims[1].has_dim_value()) input.channels_out = dims[1].dim_value();
    if (dims.size() == 4 && dims[2].has_dim_value() && dims[3].has_dim_value()) {
      draft.design_resolution = Size2{dims[2].dim_value(), dims[3].dim_value()};
    }
  }

  std::unordered_map<std::string, NodeId> producer{{inputs[0]->name(), input.id}};
  draft.nodes.push_back(std::move(input));

  for (int idx = 0; idx < g.node_size(); ++idx) {
    const onnx::NodeProto& pn = g.node(idx);
    OnnxNode node;
    node.name = pn.name().empty() ? pn.op_type() + "_" + std::to_string(idx) : pn.name();
    node.op_type = pn.op_type();
    node.domain = pn.domain();
    node.outputs.assign(pn.output().begin(), pn.output().end());
    for (const auto& a : pn.attribute()) node.attributes.push_back(decode(a));
    for (const std::string& name : pn.input()) {
      OnnxInput in{name, name.empty(), {}};
      if (const auto it = constants.find(name); it != constants.end()) {
        in.constant = true;
        in.dims = it->second;
      }
      node.inputs.push_back(std::move(in));
    }

    if (is_meta_op(node.op_type) || node.dynamic_inputs() == 0) {
      for (const std::string& out : node.outputs) constants.emplace(out, std::vector<std::int64_t>{});
      continue;
    }

    LayerNode v;
    v.id = ids.take(node.name, node.op_type);
    v.name = node.name;
    for (const OnnxInput& in : node.inputs) {
      if (in.constant) continue;
      const auto it = producer.find(in.name);
      if (it == producer.end()) {
        throw Error(ErrorCode::MalformedFile, "node '" + node.name + "' reads undefined tensor '" + in.name + "'");
      }
      if (std::find(v.predecessors.begin(), v.predecessors.end(), it->second) == v.predecessors.end()) {
        v.predecessors.push_back(it->second);
      }
    }
    const auto handler = std::find_if(chain.begin(), chain.end(), [&](const Handler& h) { return h.matches(node); });
    if (handler == chain.end()) {
      throw Error(ErrorCode::UnsupportedOperator, "no handler accepts " + node.op_type);
    }
    handler->extract(node, v);
    for (const std::string& out : node.outputs) producer[out] = v.id;
    draft.nodes.push_back(std::move(v));
  }

  for (const auto& out : g.output()) {
    const auto it = producer.find(out.name());
    if (it == producer.end()) {
      if (constants.contains(out.name())) continue;
      throw Error(ErrorCode::MalformedFile, "graph output '" + out.name() + "' has no producer");
    }
    LayerNode o;
    o.kind = LayerKind::Output;
    o.name = out.name();
    o.id = ids.take(out.name(), "output");
    o.predecessors = {it->second};
    draft.nodes.push_back(std::move(o));
  }
  try {
    return validate(std::move(draft));
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedFile, std::string("decoded graph is invalid: ") + e.what());
  }
}

ArchGraph load_onnx_file(const std::filesystem::path& path, const HandlerChain& chain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return load_onnx(bytes, chain);
}

}  // namespace rfa
