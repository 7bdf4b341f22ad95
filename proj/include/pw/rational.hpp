#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <string>

namespace pw {

// Exact rational exponents; the order structure of the extended field lives here.
using Rat = boost::rational<std::int64_t>;

inline double to_double(const Rat& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::string to_string(const Rat& r);

// Parses "3", "-1", "3/2". Throws std::invalid_argument on malformed input.
Rat parse_rational(const std::string& s);

}  // namespace pw
