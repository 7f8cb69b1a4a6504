#include "rfa/geometry.hpp"

namespace rfa {

std::string to_string(const Size2& s) { return std::to_string(s.h) + "x" + std::to_string(s.w); }

std::ostream& operator<<(std::ostream& os, const Size2& s) { return os << to_string(s); }

std::string to_string(const Growth& g) {
  if (g.denominator() == 1) return std::to_string(g.numerator());
  return std::to_string(g.numerator()) + "/" + std::to_string(g.denominator());
}

std::ostream& operator<<(std::ostream& os, const Growth2& g) {
  return os << to_string(g.h) << "x" << to_string(g.w);
}

std::int64_t ceil(const Growth& value) {
  // boost::rational keeps the denominator positive.
  const auto num = value.numerator();
  const auto den = value.denominator();
  auto q = num / den;
  if (num % den != 0 && num > 0) ++q;
  return q;
}

}  // namespace rfa
