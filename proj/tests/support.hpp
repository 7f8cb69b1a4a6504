#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "rfa/arch_graph.hpp"
#include "rfa/dsl.hpp"

namespace rfa::test {

inline std::filesystem::path fixture_dir() { return RFA_FIXTURE_DIR; }

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline ArchGraph load_fixture(const std::string& name) {
  return parse_dsl(read_text(fixture_dir() / (name + ".rfa")));
}

inline std::vector<std::string> fixture_names() {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(fixture_dir())) {
    if (entry.path().extension() == ".rfa") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

inline LayerNode layer(const std::string& id, LayerKind kind, std::vector<NodeId> preds, Size2 k = {1, 1},
                       Size2 s = {1, 1}) {
  LayerNode n;
  n.id = id;
  n.name = id;
  n.kind = kind;
  n.kernel = k;
  n.stride = s;
  n.predecessors = std::move(preds);
  return n;
}

inline LayerNode input_node(const std::string& id = "in") { return layer(id, LayerKind::Input, {}); }

// Input -> conv(k[0], s[0]) -> conv(k[1], s[1]) ... -> Output.
inline ArchGraph conv_chain(const std::vector<std::pair<std::int64_t, std::int64_t>>& ks) {
  GraphDraft d{"chain", {}, {input_node()}};
  std::string prev = "in";
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::string id = "c" + std::to_string(i + 1);
    d.nodes.push_back(layer(id, LayerKind::Conv, {prev}, {ks[i].first, ks[i].first}, {ks[i].second, ks[i].second}));
    prev = id;
  }
  d.nodes.push_back(layer("out", LayerKind::Output, {prev}));
  return validate(std::move(d));
}

struct RandomDagOptions {
  std::size_t max_vertices = 12;  // including input and output
  std::int64_t max_kernel = 7;
  std::int64_t max_stride = 3;
  std::size_t max_merges = 3;
  bool square = false;
  bool dilation = true;
  bool transposed = false;
};

// Random DAG: every vertex reads from earlier vertices, so the input reaches all.
inline ArchGraph random_dag(std::mt19937_64& rng, const RandomDagOptions& opt = {}) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  const std::size_t n = static_cast<std::size_t>(pick(3, static_cast<std::int64_t>(opt.max_vertices)));
  GraphDraft d{"random", {}, {input_node()}};
  std::vector<std::string> ids{"in"};
  std::size_t merges = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::string id = "v" + std::to_string(i);
    const bool merge = ids.size() >= 2 && merges < opt.max_merges && pick(0, 3) == 0;
    if (merge) {
      ++merges;
      std::vector<NodeId> preds;
      const auto fan = pick(2, std::min<std::int64_t>(3, static_cast<std::int64_t>(ids.size())));
      std::vector<std::string> pool = ids;
      std::shuffle(pool.begin(), pool.end(), rng);
      preds.assign(pool.begin(), pool.begin() + fan);
      d.nodes.push_back(layer(id, pick(0, 1) ? LayerKind::Add : LayerKind::Concat, preds));
    } else {
      const std::string pred = ids[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(ids.size()) - 1))];
      const auto kind_roll = pick(0, 9);
      LayerKind kind = kind_roll < 5 ? LayerKind::Conv : kind_roll < 7 ? LayerKind::DepthwiseConv
                       : kind_roll < 9 ? LayerKind::Pool : LayerKind::Neutral;
      LayerNode node = layer(id, kind, {pred});
      if (is_spatial(kind)) {
        const auto kh = pick(1, opt.max_kernel), sh = pick(1, opt.max_stride);
        node.kernel = {kh, opt.square ? kh : pick(1, opt.max_kernel)};
        node.stride = {sh, opt.square ? sh : pick(1, opt.max_stride)};
        if (opt.dilation && pick(0, 4) == 0) {
          const auto dh = pick(1, 3);
          node.dilation = {dh, opt.square ? dh : pick(1, 3)};
        }
        if (opt.transposed && kind != LayerKind::Pool && pick(0, 5) == 0) node.transposed = true;
      }
      d.nodes.push_back(std::move(node));
    }
    ids.push_back(id);
  }
  // Sinks other than the last vertex join the output through a merge-free edge list.
  d.nodes.push_back(layer("out", LayerKind::Output, {ids.back()}));
  // Shuffle insertion order; validation must not depend on it.
  std::shuffle(d.nodes.begin(), d.nodes.end(), rng);
  return validate(std::move(d));
}

// Input -> conv chain with channel counts; used for parameter bookkeeping.
inline ArchGraph random_channel_chain(std::mt19937_64& rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  GraphDraft d{"toy", {}, {input_node()}};
  d.nodes[0].channels_out = 3;
  std::string prev = "in";
  std::int64_t c = 3;
  const auto depth = pick(3, 8);
  for (std::int64_t i = 1; i <= depth; ++i) {
    const std::string id = "c" + std::to_string(i);
    LayerNode node = layer(id, LayerKind::Conv, {prev}, {3, 3}, {pick(1, 2), 0});
    node.stride.w = node.stride.h;
    node.channels_in = c;
    c = 8 * pick(1, 8);
    node.channels_out = c;
    node.has_bias = pick(0, 1) == 1;
    d.nodes.push_back(std::move(node));
    prev = id;
  }
  d.nodes.push_back(layer("gap", LayerKind::GlobalPool, {prev}));
  LayerNode fc = layer("fc", LayerKind::Dense, {"gap"});
  fc.channels_in = c;
  fc.channels_out = 10;
  fc.has_bias = true;
  d.nodes.push_back(std::move(fc));
  d.nodes.push_back(layer("out", LayerKind::Output, {"fc"}));
  return validate(std::move(d));
}

}  // namespace rfa::test
