#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfa/analysis.hpp"
#include "rfa/arch_graph.hpp"
#include "rfa/refine.hpp"

namespace rfa {

// Report document, keys in fixed order:
// model, input_resolution, i_min, i_max, fully_utilized, params, layers, proposals.
// `params` is null when channel counts are missing; `proposals` is omitted when
// empty. Ends with a newline.
std::string to_json(const AnalysisReport& report, std::optional<std::int64_t> params = {},
                    const std::vector<RefinementProposal>& proposals = {});

// Graphviz digraph; unproductive vertices filled red, underutilized orange.
std::string to_dot(const ArchGraph& graph, const AnalysisReport& report);

// Human-readable table.
std::string to_text(const AnalysisReport& report, std::optional<std::int64_t> params = {},
                    const std::vector<RefinementProposal>& proposals = {});

// count_params, or nullopt if some parametric vertex lacks channel counts.
std::optional<std::int64_t> try_count_params(const ArchGraph& graph);

}  // namespace rfa
