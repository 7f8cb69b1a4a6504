#include "rfa/dsl.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rfa/error.hpp"

namespace rfa {

namespace {

bool is_id_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_id_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool is_name_char(char c) { return is_id_char(c) || c == '-'; }

// Cursor over one source line; columns are 1-based.
class LineReader {
 public:
  LineReader(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  std::size_t column() const { return pos_ + 1; }
  bool at_end() {
    skip_space();
    return pos_ >= line_.size();
  }

  [[noreturn]] void fail(const std::string& message, std::optional<std::size_t> col = {}) const {
    throw ParseError(ErrorCode::SyntaxError, line_no_, col.value_or(column()), message);
  }

  void skip_space() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool peek(char c) {
    skip_space();
    return pos_ < line_.size() && line_[pos_] == c;
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= line_.size() || line_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  // Run of characters accepted by `pred`, starting at the current position.
  template <class Pred>
  std::string_view take_while(Pred pred) {
    const std::size_t start = pos_;
    while (pos_ < line_.size() && pred(line_[pos_])) ++pos_;
    return line_.substr(start, pos_ - start);
  }

  std::string_view word() {
    skip_space();
    return take_while([](char c) { return !std::isspace(static_cast<unsigned char>(c)) && c != '='; });
  }

  std::string identifier(const char* what) {
    skip_space();
    if (pos_ >= line_.size() || !is_id_start(line_[pos_])) fail(std::string("expected ") + what);
    return std::string(take_while(is_id_char));
  }

  std::int64_t integer(std::int64_t minimum, const char* what) {
    skip_space();
    const std::size_t col = column();
    const auto digits = take_while([](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
      fail(std::string("expected integer ") + what, col);
    }
    if (value < minimum) {
      fail(std::string(what) + " must be >= " + std::to_string(minimum), col);
    }
    return value;
  }

  // <n> or <h>x<w>
  Size2 dims(const char* what) {
    const std::int64_t h = integer(1, what);
    if (pos_ < line_.size() && line_[pos_] == 'x') {
      ++pos_;
      return {h, integer(1, what)};
    }
    return {h, h};
  }

  std::string quoted() {
    skip_space();
    if (pos_ >= line_.size() || line_[pos_] != '"') fail("expected quoted string");
    ++pos_;
    std::string out;
    while (pos_ < line_.size() && line_[pos_] != '"') {
      if (line_[pos_] == '\\' && pos_ + 1 < line_.size()) ++pos_;
      out.push_back(line_[pos_++]);
    }
    if (pos_ >= line_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

// Strips a trailing comment, respecting quoted strings.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

struct Parser {
  GraphDraft draft;
  std::unordered_map<std::string, std::size_t> defined;
  std::string previous{kDslInputId};
  bool have_header = false;

  void header(LineReader& in) {
    in.word();  // "model"
    in.skip_space();
    const std::size_t col = in.column();
    const auto model_name = in.take_while(is_name_char);
    if (model_name.empty()) in.fail("expected model name", col);
    draft.name = std::string(model_name);

    LayerNode input;
    input.id = std::string(kDslInputId);
    input.name = "input";
    input.kind = LayerKind::Input;
    std::set<std::string> seen;
    while (!in.at_end()) {
      const std::size_t key_col = in.column();
      const std::string key(in.word());
      if (!seen.insert(key).second) in.fail("duplicate header attribute '" + key + "'", key_col);
      if (key == "input") {
        draft.design_resolution = in.dims("input resolution");
      } else if (key == "c") {
        in.expect('=');
        input.channels_out = in.integer(0, "channel count");
      } else if (key == "name") {
        in.expect('=');
        input.name = in.quoted();
      } else {
        in.fail("unknown header attribute '" + key + "'", key_col);
      }
    }
    draft.nodes.push_back(std::move(input));
    defined.emplace(std::string(kDslInputId), 0);
    have_header = true;
  }

  std::string reference(LineReader& in) {
    in.skip_space();
    const std::size_t col = in.column();
    std::string ref;
    if (in.peek('@')) {
      in.expect('@');
      ref = "@" + std::string(in.take_while(is_id_char));
    } else {
      ref = in.identifier("vertex reference");
    }
    if (!defined.contains(ref)) {
      throw ParseError(ErrorCode::UnknownReference, in.line_no(), col,
                       "'" + ref + "' is not defined on an earlier line");
    }
    return ref;
  }

  void statement(LineReader& in) {
    in.skip_space();
    const std::size_t id_col = in.column();
    LayerNode node;
    node.id = in.identifier("vertex id");
    in.expect(':');
    if (defined.contains(node.id)) {
      throw ParseError(ErrorCode::DuplicateId, in.line_no(), id_col, "vertex '" + node.id + "' already defined");
    }
    node.name = node.id;

    in.skip_space();
    const std::size_t kind_col = in.column();
    const auto kind_word = in.word();
    const auto kind = layer_kind_from_string(kind_word);
    if (!kind || *kind == LayerKind::Input) {
      in.fail("unknown layer kind '" + std::string(kind_word) + "'", kind_col);
    }
    node.kind = *kind;

    std::set<std::string> seen;
    bool explicit_from = false;
    std::optional<std::size_t> shape_col;
    while (!in.at_end()) {
      const std::size_t key_col = in.column();
      const std::string key(in.word());
      if (key.empty()) in.fail("expected attribute");
      if (!seen.insert(key).second) in.fail("duplicate attribute '" + key + "'", key_col);
      if (key == "from") {
        explicit_from = true;
        node.predecessors.push_back(reference(in));
        while (in.peek(',')) {
          in.expect(',');
          node.predecessors.push_back(reference(in));
        }
        if (!in.at_end()) in.fail("unexpected text after 'from' list");
        break;
      }
      if (key == "bias") {
        node.has_bias = true;
      } else if (key == "transposed") {
        if (node.kind != LayerKind::Conv && node.kind != LayerKind::DepthwiseConv) {
          in.fail("only conv and dwconv can be transposed", key_col);
        }
        node.transposed = true;
      } else {
        in.expect('=');
        if (key == "k" || key == "s" || key == "d") {
          if (!shape_col) shape_col = key_col;
          const Size2 v = in.dims(key == "k" ? "kernel" : key == "s" ? "stride" : "dilation");
          (key == "k" ? node.kernel : key == "s" ? node.stride : node.dilation) = v;
        } else if (key == "c") {
          node.channels_in = in.integer(0, "input channel count");
          in.expect('-');
          in.expect('>');
          node.channels_out = in.integer(0, "output channel count");
        } else if (key == "g") {
          node.groups = in.integer(1, "groups");
        } else if (key == "block") {
          in.skip_space();
          const std::size_t col = in.column();
          node.block = std::string(in.take_while(is_name_char));
          if (node.block.empty()) in.fail("expected block id", col);
        } else if (key == "name") {
          node.name = in.quoted();
        } else {
          in.fail("unknown attribute '" + key + "'", key_col);
        }
      }
    }

    if (!is_spatial(node.kind) && shape_col) {
      const Size2 unit{1, 1};
      if (node.kernel != unit || node.stride != unit || node.dilation != unit) {
        in.fail(std::string(to_string(node.kind)) + " takes no kernel, stride or dilation", *shape_col);
      }
    }
    if (!explicit_from) node.predecessors.push_back(previous);

    previous = node.id;
    defined.emplace(node.id, draft.nodes.size());
    draft.nodes.push_back(std::move(node));
  }
};

std::string dims_text(const Size2& s) {
  return s.is_square() ? std::to_string(s.h) : to_string(s);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string sanitize_id(const std::string& raw) {
  std::string id;
  for (char c : raw) id.push_back(is_id_char(c) ? c : '_');
  if (id.empty() || !is_id_start(id.front())) id.insert(id.begin(), 'v');
  return id;
}

}  // namespace

ArchGraph parse_dsl(std::string_view text) {
  Parser parser;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    ++line_no;
    const std::string_view line = strip_comment(text.substr(start, end - start));
    LineReader in(line, line_no);
    if (!in.at_end()) {
      if (!parser.have_header) {
        if (in.word() != "model") in.fail("file must start with 'model <name>'", 1);
        LineReader header_reader(line, line_no);
        parser.header(header_reader);
      } else {
        parser.statement(in);
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  if (!parser.have_header) throw ParseError(ErrorCode::SyntaxError, line_no, 1, "missing 'model' header");
  return validate(std::move(parser.draft));
}

std::string emit_dsl(const ArchGraph& graph) {
  // DSL ids for every vertex; the input is always @input.
  std::vector<std::string> ids(graph.size());
  std::unordered_set<std::string> used{std::string(kDslInputId)};
  for (std::size_t i : graph.topological()) {
    if (i == graph.input_index()) {
      ids[i] = std::string(kDslInputId);
      continue;
    }
    std::string id = sanitize_id(graph.node(i).id);
    if (used.contains(id)) {
      std::size_t suffix = 1;
      while (used.contains(id + "_" + std::to_string(suffix))) ++suffix;
      id += "_" + std::to_string(suffix);
    }
    used.insert(id);
    ids[i] = std::move(id);
  }

  std::ostringstream out;
  std::string model = graph.name();
  for (char& c : model) {
    if (!is_name_char(c)) c = '_';
  }
  if (model.empty()) model = "model";
  out << "model " << model;
  if (graph.design_resolution()) out << " input " << to_string(*graph.design_resolution());
  const LayerNode& input = graph.node(graph.input_index());
  if (input.channels_out != 0) out << " c=" << input.channels_out;
  if (input.name != "input") out << " name=" << quote(input.name);
  out << '\n';

  std::string previous(kDslInputId);
  for (std::size_t i : graph.topological()) {
    if (i == graph.input_index()) continue;
    const LayerNode& node = graph.node(i);
    out << ids[i] << ": " << to_string(node.kind);
    const Size2 unit{1, 1};
    if (node.kernel != unit) out << " k=" << dims_text(node.kernel);
    if (node.stride != unit) out << " s=" << dims_text(node.stride);
    if (node.dilation != unit) out << " d=" << dims_text(node.dilation);
    if (node.channels_in != 0 || node.channels_out != 0) {
      out << " c=" << node.channels_in << "->" << node.channels_out;
    }
    if (node.groups != 1) out << " g=" << node.groups;
    if (node.has_bias) out << " bias";
    if (node.transposed) out << " transposed";
    if (!node.block.empty()) out << " block=" << node.block;
    if (node.name != ids[i]) out << " name=" << quote(node.name);
    const auto preds = graph.predecessors(i);
    if (!(preds.size() == 1 && ids[preds[0]] == previous)) {
      out << " from ";
      for (std::size_t j = 0; j < preds.size(); ++j) {
        if (j) out << ",";
        out << ids[preds[j]];
      }
    }
    out << '\n';
    previous = ids[i];
  }
  return out.str();
}

}  // namespace rfa
