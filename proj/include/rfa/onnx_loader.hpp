#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfa/arch_graph.hpp"

namespace rfa {

struct OnnxAttribute {
  std::string name;
  std::optional<std::int64_t> i;
  std::optional<float> f;
  std::string s;
  std::vector<std::int64_t> ints;
};

struct OnnxInput {
  std::string name;
  // Initializer or output of a constant subgraph.
  bool constant = false;
  // Initializer dims; empty when unknown.
  std::vector<std::int64_t> dims;
};

// Decoded node as seen by handlers.
struct OnnxNode {
  std::string name;
  std::string op_type;
  std::string domain;
  std::vector<OnnxInput> inputs;
  std::vector<std::string> outputs;
  std::vector<OnnxAttribute> attributes;

  const OnnxAttribute* attribute(std::string_view key) const;
  std::optional<std::int64_t> int_attr(std::string_view key) const;
  std::optional<std::vector<std::int64_t>> ints_attr(std::string_view key) const;
  // Distinct non-constant input tensors.
  std::size_t dynamic_inputs() const;
  // Dims of the idx-th input if it is a constant with known shape.
  const std::vector<std::int64_t>* constant_dims(std::size_t idx) const;
};

// One step of the handler chain. `extract` fills kind, kernel, stride,
// dilation, channels and flags of a vertex whose id and edges are already set.
struct Handler {
  std::string name;
  std::function<bool(const OnnxNode&)> matches;
  std::function<void(const OnnxNode&, LayerNode&)> extract;
};

using HandlerChain = std::vector<Handler>;

// Built-in handlers, most specific first, ending in the catch-all that maps any
// operator to a Neutral 1x1 vertex.
HandlerChain default_handlers();

// Inserts `handler` before index `position`. Throws TerminalDisplaced if that
// would place it after the catch-all (position >= chain.size()).
HandlerChain register_handler(HandlerChain chain, Handler handler, std::size_t position);

// Throws MalformedFile, MultipleInputs, MissingKernelAttribute, UnsupportedOperator.
ArchGraph load_onnx(std::string_view bytes, const HandlerChain& chain = default_handlers());
ArchGraph load_onnx_file(const std::filesystem::path& path, const HandlerChain& chain = default_handlers());

}  // namespace rfa
