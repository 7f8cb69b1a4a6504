// rfa: receptive-field analysis of CNN architectures.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <regex>
#include <sstream>

#include "rfa/analysis.hpp"
#include "rfa/dsl.hpp"
#include "rfa/error.hpp"
#include "rfa/onnx_loader.hpp"
#include "rfa/refine.hpp"
#include "rfa/report.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kIngest = 2;
constexpr int kNotUtilized = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rfa::Error(rfa::ErrorCode::MalformedFile, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_extension(const std::string& path, std::string_view ext) {
  return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
}

rfa::ArchGraph load_model(const std::string& path) {
  if (has_extension(path, ".onnx")) return rfa::load_onnx_file(path);
  return rfa::parse_dsl(read_file(path));
}

rfa::Size2 parse_resolution(const std::string& text) {
  static const std::regex pattern(R"((\d+)(?:x(\d+))?)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw UsageError("resolution must look like 224x224, got '" + text + "'");
  const std::int64_t h = std::stoll(m[1]);
  const std::int64_t w = m[2].matched ? std::stoll(m[2]) : h;
  if (h < 1 || w < 1) throw UsageError("resolution must be positive");
  return {h, w};
}

rfa::Size2 resolution_for(const std::string& flag, const rfa::ArchGraph& graph) {
  if (!flag.empty()) return parse_resolution(flag);
  if (graph.design_resolution()) return *graph.design_resolution();
  throw UsageError("--input-res is required: the model declares no input resolution");
}

std::string format_for(const std::string& format, const std::string& out) {
  if (!format.empty()) return format;
  if (has_extension(out, ".json")) return "json";
  if (has_extension(out, ".dot") || has_extension(out, ".gv")) return "dot";
  return "text";
}

void write_output(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f || !(f << text)) throw rfa::Error(rfa::ErrorCode::MalformedFile, "cannot write " + out);
}

std::string render(const std::string& format, const rfa::ArchGraph& graph, const rfa::AnalysisReport& report,
                   const std::vector<rfa::RefinementProposal>& proposals) {
  const auto params = rfa::try_count_params(graph);
  if (format == "json") return rfa::to_json(report, params, proposals);
  if (format == "dot") return rfa::to_dot(graph, report);
  return rfa::to_text(report, params, proposals);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receptive-field analysis for convolutional architectures"};
  app.require_subcommand(1);

  std::string model, input_res, format, out, strategy = "stride", emit, to;
  std::size_t max_changes = rfa::kDefaultMaxChanges;
  double tolerance = 0.02;
  std::int64_t quantum = 1;
  const std::vector<std::string> formats{"text", "json", "dot"};

  auto* analyze = app.add_subcommand("analyze", "Per-layer receptive fields and utilization flags");
  analyze->add_option("model", model, "Model file (.rfa or .onnx)")->required();
  analyze->add_option("--input-res", input_res, "Input resolution HxW");
  analyze->add_option("--format", format, "text, json or dot")->check(CLI::IsMember(formats));
  analyze->add_option("--out", out, "Output file");

  auto* imin = app.add_subcommand("imin", "Print the minimal feasible input resolution");
  imin->add_option("model", model, "Model file")->required();

  auto* check = app.add_subcommand("check", "Exit 0 if fully utilized at the resolution, 3 otherwise");
  check->add_option("model", model, "Model file")->required();
  check->add_option("--input-res", input_res, "Input resolution HxW");

  auto* refine = app.add_subcommand("refine", "Propose architecture changes that lower I_min");
  refine->add_option("model", model, "Model file")->required();
  refine->add_option("--input-res", input_res, "Input resolution HxW");
  refine->add_option("--strategy", strategy, "stride or prune")->check(CLI::IsMember({"stride", "prune"}));
  refine->add_option("--max-changes", max_changes, "Stride changes per proposal")->check(CLI::PositiveNumber);
  refine->add_option("--tolerance", tolerance, "Relative parameter tolerance")->check(CLI::Range(0.0, 1.0));
  refine->add_option("--quantum", quantum, "Round widened channels to this multiple")->check(CLI::PositiveNumber);
  refine->add_option("--emit-dsl", emit, "Write the best proposal, applied, as .rfa");
  refine->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  refine->add_option("--out", out, "Output file");

  auto* convert = app.add_subcommand("convert", "Convert a model to another description format");
  convert->add_option("model", model, "Model file")->required();
  convert->add_option("--to", to, "Target format")->required()->check(CLI::IsMember({"dsl"}));
  convert->add_option("--out", out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    const rfa::ArchGraph graph = load_model(model);

    if (*imin) {
      std::cout << rfa::to_string(rfa::compute_imin(graph, rfa::propagate(graph))) << "\n";
      return 0;
    }
    if (*convert) {
      write_output(rfa::emit_dsl(graph), out);
      return 0;
    }

    const rfa::Size2 resolution = resolution_for(input_res, graph);
    const rfa::AnalysisReport report = rfa::analyze(graph, resolution);
    if (*analyze) {
      write_output(render(format_for(format, out), graph, report, {}), out);
      return 0;
    }
    if (*check) {
      std::cout << report.model << ": I_min " << report.i_min << " at input " << resolution << ", "
                << (report.fully_utilized ? "fully utilized" : "not fully utilized") << "\n";
      return report.fully_utilized ? 0 : kNotUtilized;
    }

    std::vector<rfa::RefinementProposal> proposals;
    if (strategy == "stride") {
      proposals = rfa::enumerate_stride_reductions(graph, resolution, max_changes);
    } else {
      proposals.push_back(rfa::prune_and_widen(graph, resolution, rfa::default_widenable(graph, resolution),
                                               {tolerance, quantum}));
    }
    if (!emit.empty()) {
      const std::string text = rfa::emit_dsl(rfa::apply(graph, proposals.front()));
      std::ofstream f(emit, std::ios::binary);
      if (!f || !(f << text)) throw rfa::Error(rfa::ErrorCode::MalformedFile, "cannot write " + emit);
    }
    write_output(render(format_for(format, out), graph, report, proposals), out);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "rfa: " << e.what() << "\n";
    return kUsage;
  } catch (const rfa::Error& e) {
    std::cerr << "rfa: " << model << ": " << e.what() << "\n";
    return kIngest;
  }
}
