#include <doctest.h>

#include <algorithm>
#include <random>

#include "rfa/arch_graph.hpp"
#include "rfa/error.hpp"
#include "support.hpp"

using namespace rfa;
using rfa::test::input_node;
using rfa::test::layer;

namespace {

ErrorCode code_of(GraphDraft d) {
  try {
    validate(std::move(d));
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("validate accepted an invalid graph");
  return ErrorCode::InvalidLayer;
}

}  // namespace

TEST_CASE("minimal chain validates") {
  GraphDraft d{"m", {}, {input_node(), layer("c", LayerKind::Conv, {"in"}, {3, 3}), layer("o", LayerKind::Output, {"c"})}};
  const ArchGraph g = validate(d);
  CHECK(g.size() == 3);
  CHECK(g.input_id() == "in");
  CHECK(g.output_ids() == std::vector<NodeId>{"o"});
  CHECK(g.successors(0).size() == 1);
  CHECK(validate(g.draft()) == g);
}

TEST_CASE("structural errors") {
  SUBCASE("cycle") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Add, {"in", "b"}), layer("b", LayerKind::Conv, {"a"})}};
    CHECK(code_of(d) == ErrorCode::CycleDetected);
  }
  SUBCASE("two inputs") {
    GraphDraft d{"m", {}, {input_node(), input_node("in2"), layer("a", LayerKind::Add, {"in", "in2"})}};
    CHECK(code_of(d) == ErrorCode::MultipleInputs);
  }
  SUBCASE("no input") {
    GraphDraft d{"m", {}, {layer("a", LayerKind::Conv, {"b"}), layer("b", LayerKind::Conv, {"a"})}};
    CHECK(code_of(d) == ErrorCode::MissingInput);
  }
  SUBCASE("dangling predecessor") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Conv, {"ghost"})}};
    CHECK(code_of(d) == ErrorCode::MissingPredecessor);
  }
  SUBCASE("vertex without inputs") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Conv, {})}};
    CHECK(code_of(d) == ErrorCode::UnreachableVertex);
  }
  SUBCASE("island cycle unreachable from input") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Conv, {"in"}), layer("x", LayerKind::Conv, {"y"}),
                           layer("y", LayerKind::Conv, {"x"})}};
    const ErrorCode c = code_of(d);
    CHECK((c == ErrorCode::CycleDetected || c == ErrorCode::UnreachableVertex));
  }
  SUBCASE("duplicate id") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Conv, {"in"}), layer("a", LayerKind::Conv, {"in"})}};
    CHECK(code_of(d) == ErrorCode::DuplicateId);
  }
  SUBCASE("zero kernel") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Conv, {"in"}, {0, 3})}};
    CHECK(code_of(d) == ErrorCode::InvalidLayer);
  }
  SUBCASE("kernel on a merge") {
    GraphDraft d{"m", {}, {input_node(), layer("a", LayerKind::Add, {"in"}, {3, 3})}};
    CHECK(code_of(d) == ErrorCode::InvalidLayer);
  }
  SUBCASE("transposed pool") {
    LayerNode p = layer("p", LayerKind::Pool, {"in"}, {2, 2}, {2, 2});
    p.transposed = true;
    CHECK(code_of({"m", {}, {input_node(), p}}) == ErrorCode::InvalidLayer);
  }
}

TEST_CASE("topological order") {
  SUBCASE("chain") {
    GraphDraft d{"m", {}, {input_node(), layer("A", LayerKind::Conv, {"in"}), layer("B", LayerKind::Conv, {"A"})}};
    CHECK(topo_order(validate(d)) == std::vector<NodeId>{"in", "A", "B"});
  }
  SUBCASE("diamond") {
    GraphDraft d{"m", {}, {layer("M", LayerKind::Add, {"A", "B"}), layer("B", LayerKind::Conv, {"in"}),
                           layer("A", LayerKind::Conv, {"in"}), input_node()}};
    const auto order = topo_order(validate(d));
    CHECK(order.front() == "in");
    CHECK(order.back() == "M");
  }
  SUBCASE("shuffled chain") {
    GraphDraft d{"m", {}, {input_node()}};
    for (int i = 1; i <= 9; ++i) {
      d.nodes.push_back(layer("v" + std::to_string(i), LayerKind::Conv, {i == 1 ? "in" : "v" + std::to_string(i - 1)}));
    }
    const auto sorted = topo_order(validate(d));
    std::mt19937_64 rng(7);
    std::shuffle(d.nodes.begin(), d.nodes.end(), rng);
    CHECK(topo_order(validate(d)) == sorted);
  }
  SUBCASE("every edge goes forward on random graphs") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
      const ArchGraph g = test::random_dag(rng);
      for (std::size_t v = 0; v < g.size(); ++v) {
        for (std::size_t p : g.predecessors(v)) CHECK(g.topo_position(p) < g.topo_position(v));
      }
    }
  }
}

TEST_CASE("effective kernel") {
  CHECK(effective_kernel({3, 3}, {1, 1}) == Size2{3, 3});
  CHECK(effective_kernel({3, 3}, {2, 2}) == Size2{5, 5});
  CHECK(effective_kernel({1, 1}, {7, 7}) == Size2{1, 1});
  CHECK(effective_kernel({3, 5}, {2, 1}) == Size2{5, 5});
}

TEST_CASE("parameter counting") {
  LayerNode conv = layer("c", LayerKind::Conv, {"in"}, {3, 3});
  conv.channels_in = 2;
  conv.channels_out = 4;
  conv.has_bias = true;
  CHECK(count_params(conv) == 76);

  CHECK(count_params(layer("n", LayerKind::Neutral, {"in"})) == 0);

  LayerNode dw = layer("d", LayerKind::DepthwiseConv, {"in"}, {3, 3});
  dw.channels_in = dw.channels_out = dw.groups = 8;
  CHECK(count_params(dw) == 72);

  LayerNode fc = layer("f", LayerKind::Dense, {"in"});
  fc.channels_in = 10;
  fc.channels_out = 5;
  fc.has_bias = true;
  CHECK(count_params(fc) == 55);

  LayerNode unknown = layer("u", LayerKind::Conv, {"in"}, {3, 3});
  try {
    count_params(unknown);
    FAIL("expected UnknownChannels");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownChannels);
    CHECK(std::string(e.what()).find("'u'") != std::string::npos);
  }

  const ArchGraph g = validate({"m", {}, {input_node(), conv, dw, layer("o", LayerKind::Output, {"d"})}});
  CHECK(count_params(g) == 76 + 72);
}

TEST_CASE("geometry helpers") {
  CHECK(to_string(Size2{3, 5}) == "3x5");
  CHECK(ceil(Growth{3, 2}) == 2);
  CHECK(ceil(Growth{4, 2}) == 2);
  CHECK(ceil(Growth{1, 3}) == 1);
  CHECK(ceil(Growth{0}) == 0);
  CHECK(max(Size2{1, 5}, Size2{3, 2}) == Size2{3, 5});
  CHECK(all_less(Size2{1, 2}, Size2{2, 3}));
  CHECK_FALSE(all_greater_equal(Size2{5, 1}, Size2{5, 5}));
}
