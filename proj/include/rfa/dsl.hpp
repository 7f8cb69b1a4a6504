#pragma once

#include <string>
#include <string_view>

#include "rfa/arch_graph.hpp"

namespace rfa {

// Line-oriented architecture description (.rfa):
//
//   model <name> [input <H>x<W>] [c=<channels>] [name="<label>"]
//   <id>: <kind> [k=<h>x<w>] [s=<h>x<w>] [d=<h>x<w>] [c=<in>-><out>] [g=<groups>]
//         [bias] [transposed] [block=<bid>] [name="<label>"] [from <id>[,<id>...]]
//
// kinds: conv | dwconv | pool | gpool | dense | neutral | add | concat | output.
// Defaults: k=s=d=1x1, g=1, `from` = previous statement (the input for the first).
// `k=3` is shorthand for `k=3x3`. `@input` names the input vertex. `#` starts a
// comment. References must point to earlier statements.
inline constexpr std::string_view kDslInputId = "@input";

// Throws ParseError (SyntaxError, UnknownReference, DuplicateId) with 1-based
// line and column.
ArchGraph parse_dsl(std::string_view text);

// Canonical text: topological order, defaults elided, byte-stable.
std::string emit_dsl(const ArchGraph& graph);

}  // namespace rfa
