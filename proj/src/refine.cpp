#include "rfa/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "rfa/analysis.hpp"
#include "rfa/error.hpp"
#include "rfa/rf_engine.hpp"

namespace rfa {

namespace {

Size2 imin_of(const ArchGraph& graph) { return compute_imin(graph, propagate(graph)); }

std::int64_t gap(const Size2& resolution, const Size2& imin) {
  return (resolution.h - imin.h) + (resolution.w - imin.w);
}

// Rounded orig * now / before; unknown counts stay as they are.
std::int64_t rescale(std::int64_t orig, std::int64_t before, std::int64_t now) {
  if (orig <= 0 || before <= 0 || now == before) return orig;
  return (orig * now + before / 2) / before;
}

// Channels leaving each vertex. Parametric vertices define their own count,
// the rest pass their input through (Concat sums, Add takes the first input).
std::vector<std::int64_t> channel_flow(const ArchGraph& graph) {
  std::vector<std::int64_t> flow(graph.size(), 0);
  for (std::size_t v : graph.topological()) {
    const LayerNode& node = graph.node(v);
    std::int64_t incoming = 0;
    const auto preds = graph.predecessors(v);
    if (node.kind == LayerKind::Concat) {
      for (std::size_t p : preds) incoming += flow[p];
    } else if (!preds.empty()) {
      incoming = flow[preds.front()];
    }
    if (node.kind == LayerKind::Input || is_parametric(node.kind) || node.channels_out > 0) {
      flow[v] = node.channels_out;
    } else {
      flow[v] = incoming;
    }
  }
  return flow;
}

struct Rewrite {
  std::set<NodeId> removed;
  std::map<NodeId, std::int64_t> c_out;
};

// Drops removed vertices, reconnects their consumers to the nearest kept
// ancestors, applies c_out overrides and carries channel changes downstream.
ArchGraph rewrite(const ArchGraph& graph, const Rewrite& rw, std::vector<std::string>* notes) {
  const std::size_t n = graph.size();
  std::vector<char> gone(n, 0);
  for (std::size_t i = 0; i < n; ++i) gone[i] = rw.removed.contains(graph.node(i).id);

  std::vector<std::vector<std::size_t>> resolved(n);
  for (std::size_t v : graph.topological()) {
    if (!gone[v]) {
      resolved[v] = {v};
      continue;
    }
    for (std::size_t p : graph.predecessors(v)) {
      for (std::size_t r : resolved[p]) {
        if (std::find(resolved[v].begin(), resolved[v].end(), r) == resolved[v].end()) {
          resolved[v].push_back(r);
        }
      }
    }
  }

  std::vector<std::vector<std::size_t>> new_preds(n);
  for (std::size_t v : graph.topological()) {
    if (gone[v]) continue;
    auto& preds = new_preds[v];
    for (std::size_t p : graph.predecessors(v)) {
      for (std::size_t r : resolved[p]) {
        if (std::find(preds.begin(), preds.end(), r) == preds.end()) preds.push_back(r);
      }
    }
    const LayerNode& node = graph.node(v);
    if (preds.size() > 1 && !is_merge(node.kind) && node.kind != LayerKind::Output) {
      if (notes) {
        std::string note = "'" + node.id + "' would receive " + std::to_string(preds.size()) +
                           " inputs after removal; kept '" + graph.node(preds.front()).id + "'";
        notes->push_back(std::move(note));
      }
      preds.resize(1);
    }
  }

  const std::vector<std::int64_t> old_flow = channel_flow(graph);
  std::vector<std::int64_t> flow(n, 0);
  std::vector<LayerNode> nodes(n);
  for (std::size_t v : graph.topological()) {
    if (gone[v]) continue;
    LayerNode node = graph.node(v);
    std::int64_t incoming = 0;
    std::int64_t old_incoming = 0;
    if (node.kind == LayerKind::Concat) {
      for (std::size_t p : new_preds[v]) incoming += flow[p];
      for (std::size_t p : graph.predecessors(v)) old_incoming += old_flow[p];
    } else if (!new_preds[v].empty()) {
      incoming = flow[new_preds[v].front()];
      old_incoming = old_flow[graph.predecessors(v).front()];
    }

    if (node.kind == LayerKind::Input) {
      // unchanged
    } else if (node.kind == LayerKind::DepthwiseConv) {
      const std::int64_t c_in = rescale(node.channels_in, old_incoming, incoming);
      if (node.channels_in > 0 && c_in != node.channels_in) {
        node.channels_out = node.channels_out / node.channels_in * c_in;
        if (node.groups == node.channels_in) node.groups = c_in;
        node.channels_in = c_in;
      }
    } else if (is_parametric(node.kind)) {
      node.channels_in = rescale(node.channels_in, old_incoming, incoming);
    } else {
      node.channels_in = rescale(node.channels_in, old_incoming, incoming);
      node.channels_out = rescale(node.channels_out, old_incoming, incoming);
    }
    if (const auto it = rw.c_out.find(node.id); it != rw.c_out.end()) node.channels_out = it->second;

    if (node.kind == LayerKind::Input || is_parametric(node.kind) || node.channels_out > 0) {
      flow[v] = node.channels_out;
    } else {
      flow[v] = incoming;
    }
    node.predecessors.clear();
    for (std::size_t p : new_preds[v]) node.predecessors.push_back(graph.node(p).id);
    nodes[v] = std::move(node);
  }

  GraphDraft draft{graph.name(), graph.design_resolution(), {}};
  for (std::size_t i = 0; i < n; ++i) {
    if (!gone[i]) draft.nodes.push_back(std::move(nodes[i]));
  }
  return validate(std::move(draft));
}

std::set<NodeId> removal_set(const ArchGraph& graph, const Size2& input_resolution) {
  const AnalysisReport report = analyze(graph, input_resolution);
  const bool has_blocks = std::any_of(graph.nodes().begin(), graph.nodes().end(),
                                      [](const LayerNode& n) { return !n.block.empty(); });
  std::set<NodeId> removed;
  if (has_blocks) {
    std::set<std::string> hit;
    for (const LayerReport& layer : report.layers) {
      if (layer.flag == LayerFlag::Productive) continue;
      const std::string& block = graph.node(layer.id).block;
      if (!block.empty()) hit.insert(block);
    }
    for (const LayerNode& node : graph.nodes()) {
      if (!node.block.empty() && hit.contains(node.block)) removed.insert(node.id);
    }
  } else {
    for (const LayerReport& layer : report.layers) {
      if (layer.flag == LayerFlag::Productive) continue;
      if (layer.kind == LayerKind::Dense || layer.kind == LayerKind::GlobalPool) continue;
      removed.insert(layer.id);
    }
  }
  return removed;
}

}  // namespace

std::vector<RefinementProposal> enumerate_stride_reductions(const ArchGraph& graph,
                                                            const Size2& input_resolution,
                                                            std::size_t max_changes) {
  const Size2 original = imin_of(graph);
  if (all_less(original, input_resolution)) {
    throw Error(ErrorCode::NothingToRefine, "I_min " + to_string(original) + " is already below " +
                                                to_string(input_resolution));
  }

  std::vector<std::size_t> candidates;
  for (std::size_t v : graph.topological()) {
    const LayerNode& node = graph.node(v);
    if (!node.transposed && (node.stride.h > 1 || node.stride.w > 1)) candidates.push_back(v);
  }

  struct Scored {
    RefinementProposal proposal;
    std::vector<std::size_t> positions;  // descending
  };
  std::vector<Scored> found;
  const GraphDraft base = graph.draft();
  std::vector<std::size_t> chosen;

  auto evaluate = [&] {
    GraphDraft draft = base;
    StrideReduction sr;
    std::vector<std::size_t> positions;
    for (std::size_t v : chosen) {
      LayerNode& node = draft.nodes[v];
      sr.changes.push_back({node.id, node.stride, {1, 1}});
      node.stride = {1, 1};
      positions.push_back(graph.topo_position(v));
    }
    const Size2 predicted = imin_of(validate(std::move(draft)));
    if (!all_less(predicted, input_resolution)) return;
    std::sort(positions.rbegin(), positions.rend());
    found.push_back({{std::move(sr), predicted, 0}, std::move(positions)});
  };

  // Combinations in lexicographic order over topological positions.
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (!chosen.empty()) evaluate();
    if (chosen.size() == max_changes) return;
    for (std::size_t i = start; i < candidates.size(); ++i) {
      chosen.push_back(candidates[i]);
      self(self, i + 1);
      chosen.pop_back();
    }
  };
  recurse(recurse, 0);

  if (found.empty()) {
    throw Error(ErrorCode::NoFeasibleProposal, "no set of at most " + std::to_string(max_changes) +
                                                   " stride reductions brings I_min below " +
                                                   to_string(input_resolution));
  }
  std::stable_sort(found.begin(), found.end(), [&](const Scored& a, const Scored& b) {
    const auto ga = gap(input_resolution, a.proposal.predicted_imin);
    const auto gb = gap(input_resolution, b.proposal.predicted_imin);
    if (ga != gb) return ga < gb;
    if (a.positions.size() != b.positions.size()) return a.positions.size() < b.positions.size();
    return a.positions > b.positions;
  });

  std::vector<RefinementProposal> out;
  out.reserve(found.size());
  for (Scored& s : found) out.push_back(std::move(s.proposal));
  return out;
}

std::vector<NodeId> default_widenable(const ArchGraph& graph, const Size2& input_resolution) {
  const std::set<NodeId> removed = removal_set(graph, input_resolution);
  std::vector<NodeId> out;
  for (std::size_t v : graph.topological()) {
    const LayerNode& node = graph.node(v);
    if (node.kind == LayerKind::Conv && node.channels_out > 0 && !removed.contains(node.id)) {
      out.push_back(node.id);
    }
  }
  return out;
}

RefinementProposal prune_and_widen(const ArchGraph& graph, const Size2& input_resolution,
                                   const std::vector<NodeId>& widenable, const PruneOptions& options) {
  if (options.tolerance < 0 || options.channel_quantum < 1) {
    throw Error(ErrorCode::InvalidLayer, "tolerance must be >= 0 and quantum >= 1");
  }
  Rewrite rw;
  rw.removed = removal_set(graph, input_resolution);
  PruneAndWiden pw;
  pw.removed.clear();
  for (std::size_t v : graph.topological()) {
    if (rw.removed.contains(graph.node(v).id)) pw.removed.push_back(graph.node(v).id);
  }
  if (pw.removed.empty()) return {std::move(pw), imin_of(graph), 0};

  const auto outputs = graph.output_indices();
  if (std::all_of(outputs.begin(), outputs.end(),
                  [&](std::size_t o) { return rw.removed.contains(graph.node(o).id); })) {
    throw Error(ErrorCode::RemovalBreaksGraph, "every output vertex would be removed");
  }

  std::vector<std::size_t> targets;
  for (const NodeId& id : widenable) {
    const auto idx = graph.find(id);
    if (!idx) throw Error(ErrorCode::UnknownVertex, "no vertex '" + id + "'");
    if (rw.removed.contains(id)) continue;
    if (graph.node(*idx).channels_out <= 0) {
      throw Error(ErrorCode::UnknownChannels, "vertex '" + id + "' has no output channel count");
    }
    targets.push_back(*idx);
  }
  if (targets.empty()) throw Error(ErrorCode::CannotMeetTolerance, "no widenable vertex survives the removal");

  const std::int64_t original = count_params(graph);
  const std::int64_t q = options.channel_quantum;

  auto overrides_for = [&](double m) {
    std::map<NodeId, std::int64_t> c_out;
    for (std::size_t t : targets) {
      const LayerNode& node = graph.node(t);
      const auto steps = std::llround(static_cast<double>(node.channels_out) * m / static_cast<double>(q));
      c_out[node.id] = std::max<std::int64_t>(q, steps * q);
    }
    return c_out;
  };
  auto delta_of = [&](const std::map<NodeId, std::int64_t>& c_out) {
    Rewrite trial = rw;
    trial.c_out = c_out;
    return count_params(rewrite(graph, trial, nullptr)) - original;
  };
  auto delta_at = [&](double m) { return delta_of(overrides_for(m)); };
  const double limit = options.tolerance * static_cast<double>(original);
  auto within = [&](std::int64_t delta) { return std::abs(static_cast<double>(delta)) <= limit; };

  // Bracket a sign change, then bisect.
  double lo = 1.0, hi = 1.0;
  std::int64_t d_lo = delta_at(1.0), d_hi = d_lo;
  double best_m = 1.0;
  std::int64_t best = d_lo;
  for (int i = 0; i < 40 && d_hi < 0; ++i) {
    lo = hi, d_lo = d_hi;
    hi *= 2;
    d_hi = delta_at(hi);
  }
  for (int i = 0; i < 40 && d_lo > 0; ++i) {
    hi = lo, d_hi = d_lo;
    lo /= 2;
    d_lo = delta_at(lo);
  }
  if (d_lo > 0 || d_hi < 0) throw Error(ErrorCode::CannotMeetTolerance, "width multiplier bracket exhausted");
  for (auto [m, d] : {std::pair{lo, d_lo}, std::pair{hi, d_hi}}) {
    if (std::abs(d) < std::abs(best)) best = d, best_m = m;
  }
  for (int i = 0; i < 100 && !within(best); ++i) {
    const double mid = 0.5 * (lo + hi);
    const std::int64_t d = delta_at(mid);
    if (std::abs(d) < std::abs(best)) best = d, best_m = mid;
    if (d < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::map<NodeId, std::int64_t> best_c = overrides_for(best_m);

  // Equal widths cross a rounding boundary together. Start from floor(c * hi)
  // and add one quantum per vertex, deepest first, until the sign flips.
  if (!within(best)) {
    std::map<NodeId, std::int64_t> c_out;
    for (std::size_t t : targets) {
      const LayerNode& node = graph.node(t);
      const auto steps = static_cast<std::int64_t>(std::floor(static_cast<double>(node.channels_out) * hi / static_cast<double>(q)));
      c_out[node.id] = std::max<std::int64_t>(q, steps * q);
    }
    std::int64_t d = delta_of(c_out);
    if (std::abs(d) < std::abs(best)) best = d, best_c = c_out;
    const std::map<NodeId, std::int64_t> floors = c_out;
    for (auto it = targets.rbegin(); it != targets.rend() && d < 0 && !within(best); ++it) {
      c_out[graph.node(*it).id] += q;
      d = delta_of(c_out);
      if (std::abs(d) < std::abs(best)) best = d, best_c = c_out;
    }
    // Few vertices: every floor/ceil combination.
    if (targets.size() <= 12) {
      for (std::uint32_t mask = 0; mask < (1u << targets.size()) && !within(best); ++mask) {
        c_out = floors;
        for (std::size_t b = 0; b < targets.size(); ++b) {
          if (mask & (1u << b)) c_out[graph.node(targets[b]).id] += q;
        }
        d = delta_of(c_out);
        if (std::abs(d) < std::abs(best)) best = d, best_c = c_out;
      }
    }
  }
  if (!within(best)) {
    throw Error(ErrorCode::CannotMeetTolerance,
                "closest parameter delta " + std::to_string(best) + " exceeds the tolerance");
  }

  rw.c_out = best_c;
  for (std::size_t t : targets) {
    const LayerNode& node = graph.node(t);
    pw.widened.push_back({node.id, node.channels_out, rw.c_out.at(node.id)});
  }
  const ArchGraph result = rewrite(graph, rw, &pw.notes);
  const Size2 predicted = imin_of(result);
  if (!all_less(predicted, input_resolution)) {
    throw Error(ErrorCode::NoFeasibleProposal, "I_min after removal is " + to_string(predicted) +
                                                   ", not below " + to_string(input_resolution));
  }
  return {std::move(pw), predicted, best};
}

ArchGraph apply(const ArchGraph& graph, const RefinementProposal& proposal) {
  auto stale = [](const std::string& what) { return Error(ErrorCode::StaleProposal, what); };

  if (const auto* sr = std::get_if<StrideReduction>(&proposal.variant)) {
    GraphDraft draft = graph.draft();
    for (const StrideChange& c : sr->changes) {
      const auto idx = graph.find(c.id);
      if (!idx) throw stale("vertex '" + c.id + "' is not in the graph");
      LayerNode& node = draft.nodes[*idx];
      if (node.stride != c.old_stride) {
        throw stale("vertex '" + c.id + "' has stride " + to_string(node.stride) + ", expected " +
                    to_string(c.old_stride));
      }
      node.stride = c.new_stride;
    }
    return validate(std::move(draft));
  }

  const auto& pw = std::get<PruneAndWiden>(proposal.variant);
  Rewrite rw;
  for (const NodeId& id : pw.removed) {
    if (!graph.contains(id)) throw stale("vertex '" + id + "' is not in the graph");
    rw.removed.insert(id);
  }
  for (const ChannelChange& c : pw.widened) {
    const auto idx = graph.find(c.id);
    if (!idx) throw stale("vertex '" + c.id + "' is not in the graph");
    if (graph.node(*idx).channels_out != c.old_c_out) {
      throw stale("vertex '" + c.id + "' has " + std::to_string(graph.node(*idx).channels_out) +
                  " output channels, expected " + std::to_string(c.old_c_out));
    }
    rw.c_out[c.id] = c.new_c_out;
  }
  if (rw.removed.empty() && rw.c_out.empty()) return graph;
  return rewrite(graph, rw, nullptr);
}

ArchGraph apply_edits(const ArchGraph& graph, const std::vector<LayerEdit>& edits) {
  GraphDraft draft = graph.draft();
  for (const LayerEdit& e : edits) {
    const auto idx = graph.find(e.id);
    if (!idx) throw Error(ErrorCode::UnknownVertex, "no vertex '" + e.id + "'");
    if (e.kernel) draft.nodes[*idx].kernel = *e.kernel;
    if (e.stride) draft.nodes[*idx].stride = *e.stride;
  }
  return validate(std::move(draft));
}

}  // namespace rfa
