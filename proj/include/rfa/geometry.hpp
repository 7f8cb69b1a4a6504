#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <ostream>
#include <string>

#include <boost/rational.hpp>

namespace rfa {

// Integer (height, width) pair. Used for kernels, strides, dilations, receptive
// fields and resolutions, all in pixels except dilation.
struct Size2 {
  std::int64_t h = 1;
  std::int64_t w = 1;

  constexpr Size2() = default;
  constexpr Size2(std::int64_t height, std::int64_t width) : h(height), w(width) {}
  static constexpr Size2 square(std::int64_t v) { return {v, v}; }

  constexpr bool is_square() const { return h == w; }
  constexpr bool all_at_least(std::int64_t v) const { return h >= v && w >= v; }

  friend constexpr bool operator==(const Size2&, const Size2&) = default;
  friend constexpr auto operator<=>(const Size2&, const Size2&) = default;
};

constexpr Size2 max(const Size2& a, const Size2& b) {
  return {std::max(a.h, b.h), std::max(a.w, b.w)};
}
constexpr Size2 min(const Size2& a, const Size2& b) {
  return {std::min(a.h, b.h), std::min(a.w, b.w)};
}

// Component-wise comparisons. Unlike operator<, which is lexicographic, these
// are what resolution checks need.
constexpr bool all_less(const Size2& a, const Size2& b) { return a.h < b.h && a.w < b.w; }
constexpr bool all_less_equal(const Size2& a, const Size2& b) { return a.h <= b.h && a.w <= b.w; }
constexpr bool all_greater_equal(const Size2& a, const Size2& b) {
  return a.h >= b.h && a.w >= b.w;
}
constexpr bool any_greater_equal(const Size2& a, const Size2& b) {
  return a.h >= b.h || a.w >= b.w;
}

// "HxW"
std::string to_string(const Size2& s);
std::ostream& operator<<(std::ostream& os, const Size2& s);

// Exact cumulative stride product. Integral on downsampling-only graphs;
// transposed convolutions contribute 1/s.
using Growth = boost::rational<std::int64_t>;

struct Growth2 {
  Growth h{1};
  Growth w{1};

  friend bool operator==(const Growth2&, const Growth2&) = default;
};

std::string to_string(const Growth& g);
std::ostream& operator<<(std::ostream& os, const Growth2& g);

// Smallest integer >= value.
std::int64_t ceil(const Growth& value);

}  // namespace rfa
