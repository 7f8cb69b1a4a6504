#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rfa/arch_graph.hpp"

namespace rfa {

struct StrideChange {
  NodeId id;
  Size2 old_stride;
  Size2 new_stride;

  friend bool operator==(const StrideChange&, const StrideChange&) = default;
};

struct ChannelChange {
  NodeId id;
  std::int64_t old_c_out = 0;
  std::int64_t new_c_out = 0;

  friend bool operator==(const ChannelChange&, const ChannelChange&) = default;
};

struct StrideReduction {
  std::vector<StrideChange> changes;

  friend bool operator==(const StrideReduction&, const StrideReduction&) = default;
};

struct PruneAndWiden {
  std::vector<NodeId> removed;
  std::vector<ChannelChange> widened;
  // Merges whose rewiring was ambiguous; informational.
  std::vector<std::string> notes;

  friend bool operator==(const PruneAndWiden&, const PruneAndWiden&) = default;
};

struct RefinementProposal {
  std::variant<StrideReduction, PruneAndWiden> variant;
  Size2 predicted_imin;
  std::int64_t param_delta = 0;

  friend bool operator==(const RefinementProposal&, const RefinementProposal&) = default;
};

inline constexpr std::size_t kDefaultMaxChanges = 2;

// Subsets of at most `max_changes` downsampling vertices, each set to stride 1x1,
// that bring I_min below `input_resolution` on both axes. Best first: smallest
// total gap to the resolution, then fewest changes, then deepest changes.
// Throws NothingToRefine if the graph is already fully utilized and
// NoFeasibleProposal if no subset qualifies.
std::vector<RefinementProposal> enumerate_stride_reductions(const ArchGraph& graph,
                                                            const Size2& input_resolution,
                                                            std::size_t max_changes = kDefaultMaxChanges);

struct PruneOptions {
  double tolerance = 0.02;
  std::int64_t channel_quantum = 1;
};

// Removes flagged vertices (whole blocks when `block=` labels exist), rewires
// around them and scales c_out of `widenable` by one multiplier found by
// bisection so the parameter count stays within tolerance.
RefinementProposal prune_and_widen(const ArchGraph& graph, const Size2& input_resolution,
                                   const std::vector<NodeId>& widenable, const PruneOptions& options = {});

// Convolutions (not depthwise) that survive pruning at `input_resolution`.
std::vector<NodeId> default_widenable(const ArchGraph& graph, const Size2& input_resolution);

// Throws StaleProposal if the proposal does not match the graph.
ArchGraph apply(const ArchGraph& graph, const RefinementProposal& proposal);

// Hand-written modification of one vertex, for catalog changes outside the
// stride-to-1 search space (moving a downsampling step, shrinking a patch).
struct LayerEdit {
  NodeId id;
  std::optional<Size2> kernel;
  std::optional<Size2> stride;
};

// Throws UnknownVertex for a missing id.
ArchGraph apply_edits(const ArchGraph& graph, const std::vector<LayerEdit>& edits);

}  // namespace rfa
