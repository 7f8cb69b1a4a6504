#include <doctest.h>

#include "onnx_subset.pb.h"
#include "rfa/analysis.hpp"
#include "rfa/dsl.hpp"
#include "rfa/error.hpp"
#include "rfa/onnx_loader.hpp"
#include "support.hpp"

using namespace rfa;

namespace {

struct Attr {
  std::string name;
  std::vector<std::int64_t> ints;
  std::optional<std::int64_t> i;
};

class ModelBuilder {
 public:
  ModelBuilder() { graph_ = model_.mutable_graph(), graph_->set_name("test"); }

  ModelBuilder& input(const std::string& name, std::vector<std::int64_t> dims = {1, 3, 32, 32}) {
    auto* in = graph_->add_input();
    in->set_name(name);
    auto* shape = in->mutable_type()->mutable_tensor_type()->mutable_shape();
    for (auto d : dims) shape->add_dim()->set_dim_value(d);
    return *this;
  }

  ModelBuilder& weight(const std::string& name, std::vector<std::int64_t> dims) {
    auto* t = graph_->add_initializer();
    t->set_name(name);
    for (auto d : dims) t->add_dims(d);
    t->set_data_type(1);
    // Initializers are also listed as graph inputs by older exporters.
    graph_->add_input()->set_name(name);
    return *this;
  }

  ModelBuilder& node(const std::string& op, std::vector<std::string> ins, std::vector<std::string> outs,
                     std::vector<Attr> attrs = {}, const std::string& name = "") {
    auto* n = graph_->add_node();
    n->set_op_type(op);
    n->set_name(name.empty() ? outs.front() : name);
    for (auto& s : ins) n->add_input(s);
    for (auto& s : outs) n->add_output(s);
    for (auto& a : attrs) {
      auto* pa = n->add_attribute();
      pa->set_name(a.name);
      for (auto v : a.ints) pa->add_ints(v);
      if (a.i) pa->set_i(*a.i);
    }
    return *this;
  }

  ModelBuilder& output(const std::string& name) {
    graph_->add_output()->set_name(name);
    return *this;
  }

  std::string bytes() const { return model_.SerializeAsString(); }
  ArchGraph load(const HandlerChain& chain = default_handlers()) const { return load_onnx(bytes(), chain); }

 private:
  onnx::ModelProto model_;
  onnx::GraphProto* graph_;
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidLayer;
}

const LayerNode& only(const ArchGraph& g, LayerKind kind) {
  for (const LayerNode& n : g.nodes()) {
    if (n.kind == kind) return n;
  }
  throw std::runtime_error("kind not found");
}

}  // namespace

TEST_CASE("conv attributes map directly") {
  const ArchGraph g = ModelBuilder()
                          .input("x")
                          .weight("w", {16, 3, 3, 3})
                          .weight("b", {16})
                          .node("Conv", {"x", "w", "b"}, {"y"},
                                {{"kernel_shape", {3, 3}}, {"strides", {2, 2}}, {"dilations", {1, 1}},
                                 {"pads", {1, 1, 1, 1}}})
                          .output("y")
                          .load();
  CHECK(g.size() == 3);
  const LayerNode& c = only(g, LayerKind::Conv);
  CHECK(c.kernel == Size2{3, 3});
  CHECK(c.stride == Size2{2, 2});
  CHECK(c.channels_in == 3);
  CHECK(c.channels_out == 16);
  CHECK(c.has_bias);
  CHECK(g.node(g.input_index()).channels_out == 3);
  CHECK(g.design_resolution() == Size2{32, 32});
  CHECK(g.node(g.output_indices()[0]).kind == LayerKind::Output);
}

TEST_CASE("unknown operators are neutral") {
  const ArchGraph g = ModelBuilder().input("x").node("Mish", {"x"}, {"y"}).output("y").load();
  const LayerNode& n = only(g, LayerKind::Neutral);
  CHECK(n.kernel == Size2{1, 1});
  CHECK(n.stride == Size2{1, 1});
  CHECK(n.name == "y");

  // Neutral insertions leave receptive fields alone.
  auto build = [](bool mish) {
    ModelBuilder b;
    b.input("x").weight("w", {8, 3, 5, 5}).node("Conv", {"x", "w"}, {"a"}, {{"kernel_shape", {5, 5}}, {"strides", {2, 2}}});
    if (mish) b.node("Mish", {"a"}, {"m"});
    b.weight("w2", {8, 8, 3, 3}).node("Conv", {mish ? "m" : "a", "w2"}, {"y"}, {{"kernel_shape", {3, 3}}}).output("y");
    return b.load();
  };
  const ArchGraph plain = build(false), with = build(true);
  CHECK(compute_imin(plain, propagate(plain)) == compute_imin(with, propagate(with)));
  CHECK(compute_imax(plain, propagate(plain)) == compute_imax(with, propagate(with)));
}

TEST_CASE("ingestion errors") {
  CHECK(code_of([] { ModelBuilder().input("a").input("b").node("Add", {"a", "b"}, {"y"}).output("y").load(); }) ==
        ErrorCode::MultipleInputs);
  CHECK(code_of([] { ModelBuilder().input("x").node("MaxPool", {"x"}, {"y"}, {{"strides", {2, 2}}}).load(); }) ==
        ErrorCode::MissingKernelAttribute);
  CHECK(code_of([] { ModelBuilder().input("x").weight("w", {}).node("Conv", {"x", "w"}, {"y"}).load(); }) ==
        ErrorCode::MissingKernelAttribute);
  CHECK(code_of([] { ModelBuilder().input("x").node("LSTM", {"x"}, {"y"}).load(); }) == ErrorCode::UnsupportedOperator);
  CHECK(code_of([] { ModelBuilder().input("x").node("Relu", {"ghost"}, {"y"}).load(); }) == ErrorCode::MalformedFile);
  CHECK(code_of([] { load_onnx(std::string("\x08\x07\xff\xff\xff garbage", 13)); }) == ErrorCode::MalformedFile);
  CHECK(code_of([] { load_onnx(""); }) == ErrorCode::MalformedFile);
  CHECK(code_of([] { load_onnx_file("/nonexistent.onnx"); }) == ErrorCode::MalformedFile);
}

TEST_CASE("kernel inferred from weights") {
  const ArchGraph g = ModelBuilder().input("x").weight("w", {4, 3, 7, 1}).node("Conv", {"x", "w"}, {"y"}).load();
  CHECK(only(g, LayerKind::Conv).kernel == Size2{7, 1});
}

TEST_CASE("operator kinds") {
  const ArchGraph g =
      ModelBuilder()
          .input("x", {1, 8, 16, 16})
          .weight("dw", {8, 1, 3, 3})
          .node("Conv", {"x", "dw"}, {"a"}, {{"kernel_shape", {3, 3}}, {"group", {}, 8}})
          .weight("up", {8, 4, 2, 2})
          .node("ConvTranspose", {"a", "up"}, {"b"}, {{"kernel_shape", {2, 2}}, {"strides", {2, 2}}})
          .node("MaxPool", {"b"}, {"c"}, {{"kernel_shape", {2, 2}}, {"strides", {2, 2}}})
          .node("AveragePool", {"x"}, {"d"}, {{"kernel_shape", {3, 3}}, {"strides", {2, 2}}})
          .node("Concat", {"c", "d"}, {"e"}, {{"axis", {}, 1}})
          .node("Add", {"e", "e"}, {"f"})
          .weight("bias", {12})
          .node("Add", {"f", "bias"}, {"f2"})
          .node("GlobalAveragePool", {"f2"}, {"g"})
          .node("Flatten", {"g"}, {"h"})
          .weight("fc", {10, 12})
          .node("Gemm", {"h", "fc"}, {"i"}, {{"transB", {}, 1}})
          .weight("mm", {10, 5})
          .node("MatMul", {"i", "mm"}, {"j"})
          .output("j")
          .load();
  CHECK(g.node("a").kind == LayerKind::DepthwiseConv);
  CHECK(g.node("a").groups == 8);
  CHECK(g.node("b").transposed);
  CHECK(g.node("b").kind == LayerKind::Conv);
  CHECK(g.node("b").channels_in == 8);
  CHECK(g.node("b").channels_out == 4);
  CHECK(g.node("c").kind == LayerKind::Pool);
  CHECK(g.node("e").kind == LayerKind::Concat);
  CHECK(g.node("f").kind == LayerKind::Neutral);  // both inputs are one tensor
  CHECK(g.node("f2").kind == LayerKind::Neutral);
  CHECK(g.node("g").kind == LayerKind::GlobalPool);
  CHECK(g.node("i").kind == LayerKind::Dense);
  CHECK(g.node("i").channels_in == 12);
  CHECK(g.node("i").channels_out == 10);
  CHECK(g.node("j").kind == LayerKind::Dense);
  CHECK(g.node("j").channels_out == 5);
  CHECK(g.node("f").predecessors == std::vector<NodeId>{"e"});
}

TEST_CASE("bookkeeping subgraphs are dropped") {
  const ArchGraph g = ModelBuilder()
                          .input("x")
                          .node("Shape", {"x"}, {"s"})
                          .weight("idx", {1})
                          .node("Gather", {"s", "idx"}, {"n"})
                          .node("Constant", {}, {"minus1"})
                          .node("Concat", {"n", "minus1"}, {"shape"})
                          .node("Reshape", {"x", "shape"}, {"y"})
                          .output("y")
                          .load();
  CHECK(g.size() == 3);
  CHECK(g.node("y").predecessors == std::vector<NodeId>{"x"});
}

TEST_CASE("handler registration") {
  Handler s2d{"space-to-depth", [](const OnnxNode& n) { return n.op_type == "SpaceToDepth"; },
              [](const OnnxNode& n, LayerNode& v) {
                const auto b = n.int_attr("blocksize").value_or(2);
                v.kind = LayerKind::Pool;
                v.kernel = v.stride = {b, b};
              }};
  const HandlerChain builtins = default_handlers();
  const HandlerChain chain = register_handler(builtins, s2d, 0);
  CHECK(chain.size() == builtins.size() + 1);
  CHECK(chain.front().name == "space-to-depth");
  CHECK(chain.back().name == builtins.back().name);

  const ModelBuilder model = std::move(ModelBuilder().input("x").node("SpaceToDepth", {"x"}, {"y"}, {{"blocksize", {}, 4}}));
  CHECK(model.load().node("y").kind == LayerKind::Neutral);
  const ArchGraph g = model.load(chain);
  CHECK(g.node("y").kind == LayerKind::Pool);
  CHECK(g.node("y").stride == Size2{4, 4});

  CHECK(register_handler({}, s2d, 0).size() == builtins.size() + 1);
  CHECK(code_of([&] { register_handler(builtins, s2d, builtins.size()); }) == ErrorCode::TerminalDisplaced);
  CHECK(register_handler(builtins, s2d, builtins.size() - 1).back().name == builtins.back().name);
}

TEST_CASE("ids are sanitized and unique") {
  const ArchGraph g = ModelBuilder()
                          .input("input:0")
                          .node("Relu", {"input:0"}, {"t1"}, {}, "/features/0/Relu")
                          .node("Relu", {"t1"}, {"t2"}, {}, "/features/0/Relu")
                          .output("t2")
                          .load();
  const ArchGraph back = parse_dsl(emit_dsl(g));
  CHECK(back.size() == g.size());
  CHECK(g.contains("features_0_Relu"));
  CHECK(g.contains("features_0_Relu_1"));
}

TEST_CASE("MobileNetV2 export") {
  const ArchGraph g = load_onnx_file(test::fixture_dir() / "onnx" / "mobilenet_v2.onnx");
  CHECK(compute_imin(g, propagate(g)) == Size2{163, 163});
  std::size_t onnx_nodes = 0;
  {
    onnx::ModelProto m;
    const std::string bytes = test::read_text(test::fixture_dir() / "onnx" / "mobilenet_v2.onnx");
    REQUIRE(m.ParseFromString(bytes));
    onnx_nodes = static_cast<std::size_t>(m.graph().node_size());
  }
  CHECK(g.size() <= onnx_nodes + 2);
  const ArchGraph back = parse_dsl(emit_dsl(g));
  CHECK(compute_imin(back, propagate(back)) == Size2{163, 163});
}
