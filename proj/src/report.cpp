#include "rfa/report.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "rfa/error.hpp"

namespace rfa {

namespace {

using Json = nlohmann::ordered_json;

Json pair(const Size2& s) { return Json::array({s.h, s.w}); }

Json proposal_json(const RefinementProposal& p) {
  Json j;
  if (const auto* sr = std::get_if<StrideReduction>(&p.variant)) {
    j["strategy"] = "stride_reduction";
    j["changes"] = Json::array();
    for (const StrideChange& c : sr->changes) {
      j["changes"].push_back({{"id", c.id}, {"old_stride", pair(c.old_stride)}, {"new_stride", pair(c.new_stride)}});
    }
  } else {
    const auto& pw = std::get<PruneAndWiden>(p.variant);
    j["strategy"] = "prune_and_widen";
    j["removed"] = pw.removed;
    j["widened"] = Json::array();
    for (const ChannelChange& c : pw.widened) {
      j["widened"].push_back({{"id", c.id}, {"old_c_out", c.old_c_out}, {"new_c_out", c.new_c_out}});
    }
    j["notes"] = pw.notes;
  }
  j["predicted_imin"] = pair(p.predicted_imin);
  j["param_delta"] = p.param_delta;
  return j;
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string describe(const RefinementProposal& p) {
  std::ostringstream out;
  if (const auto* sr = std::get_if<StrideReduction>(&p.variant)) {
    out << "stride reduction:";
    for (const StrideChange& c : sr->changes) {
      out << " " << c.id << " s=" << c.old_stride << "->" << c.new_stride;
    }
  } else {
    const auto& pw = std::get<PruneAndWiden>(p.variant);
    out << "prune and widen: remove " << pw.removed.size() << " vertices, widen " << pw.widened.size();
  }
  out << "; predicted I_min " << p.predicted_imin << ", params " << (p.param_delta >= 0 ? "+" : "")
      << p.param_delta;
  return out.str();
}

}  // namespace

std::optional<std::int64_t> try_count_params(const ArchGraph& graph) {
  try {
    return count_params(graph);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownChannels) return std::nullopt;
    throw;
  }
}

std::string to_json(const AnalysisReport& report, std::optional<std::int64_t> params,
                    const std::vector<RefinementProposal>& proposals) {
  Json doc;
  doc["model"] = report.model;
  doc["input_resolution"] = pair(report.input_resolution);
  doc["i_min"] = pair(report.i_min);
  doc["i_max"] = pair(report.i_max);
  doc["fully_utilized"] = report.fully_utilized;
  doc["params"] = params ? Json(*params) : Json(nullptr);
  doc["layers"] = Json::array();
  for (const LayerReport& l : report.layers) {
    doc["layers"].push_back({{"id", l.id},
                             {"name", l.name},
                             {"kind", to_string(l.kind)},
                             {"kernel", pair(l.kernel)},
                             {"stride", pair(l.stride)},
                             {"r_min", pair(l.r_min)},
                             {"r_max", pair(l.r_max)},
                             {"flag", to_string(l.flag)}});
  }
  if (!proposals.empty()) {
    doc["proposals"] = Json::array();
    for (const RefinementProposal& p : proposals) doc["proposals"].push_back(proposal_json(p));
  }
  return doc.dump(2) + "\n";
}

std::string to_dot(const ArchGraph& graph, const AnalysisReport& report) {
  std::ostringstream out;
  out << "digraph " << dot_quote(graph.name()) << " {\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const LayerReport& l : report.layers) {
    std::ostringstream label;
    label << l.name << "\n" << to_string(l.kind) << " k=" << l.kernel << " s=" << l.stride << "\n"
          << "r_min=" << l.r_min << " r_max=" << l.r_max;
    out << "  " << dot_quote(l.id) << " [label=" << dot_quote(label.str());
    if (l.flag == LayerFlag::Unproductive) out << ", style=filled, fillcolor=red";
    if (l.flag == LayerFlag::Underutilized) out << ", style=filled, fillcolor=orange";
    out << "];\n";
  }
  for (std::size_t v : graph.topological()) {
    for (std::size_t p : graph.predecessors(v)) {
      out << "  " << dot_quote(graph.node(p).id) << " -> " << dot_quote(graph.node(v).id) << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string to_text(const AnalysisReport& report, std::optional<std::int64_t> params,
                    const std::vector<RefinementProposal>& proposals) {
  std::ostringstream out;
  out << "model           " << report.model << "\n"
      << "input           " << report.input_resolution << "\n"
      << "I_min           " << report.i_min << "\n"
      << "I_max           " << report.i_max << "\n"
      << "fully utilized  " << (report.fully_utilized ? "yes" : "no") << "\n"
      << "params          " << (params ? std::to_string(*params) : "unknown") << "\n\n";
  out << std::left << std::setw(28) << "id" << std::setw(8) << "kind" << std::setw(10) << "kernel"
      << std::setw(8) << "stride" << std::setw(12) << "r_min" << std::setw(12) << "r_max" << "flag\n";
  for (const LayerReport& l : report.layers) {
    out << std::setw(28) << l.id << std::setw(8) << to_string(l.kind) << std::setw(10) << to_string(l.kernel)
        << std::setw(8) << to_string(l.stride) << std::setw(12) << to_string(l.r_min) << std::setw(12)
        << to_string(l.r_max) << to_string(l.flag) << "\n";
  }
  if (!proposals.empty()) {
    out << "\nproposals\n";
    for (std::size_t i = 0; i < proposals.size(); ++i) out << "  " << i + 1 << ". " << describe(proposals[i]) << "\n";
  }
  return out.str();
}

}  // namespace rfa
