#pragma once

// Independent reference arithmetic for truncated series: a plain
// exponent-keyed map with no truncation during the computation, truncated only
// when converting back. Kept deliberately separate from the production
// implementation path.

#include <map>

#include "pw/hyperreal.hpp"

namespace oracle {

using pw::HyperReal;
using pw::Rat;
using Series = std::map<Rat, double>;

inline Series from(const HyperReal& h) {
  Series s;
  for (const auto& t : h.terms()) s[t.exponent] = t.coefficient;
  return s;
}

inline HyperReal to(const Series& s, const Rat& cap) {
  std::vector<HyperReal::Term> terms;
  for (const auto& [e, c] : s)
    if (c != 0.0 && !(e > cap)) terms.push_back({e, c});
  return HyperReal::from_terms(std::move(terms), cap);
}

inline Series add(const Series& a, const Series& b) {
  Series out = a;
  for (const auto& [e, c] : b) out[e] += c;
  return out;
}

inline Series mul(const Series& a, const Series& b) {
  Series out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) out[ea + eb] += ca * cb;
  return out;
}

}  // namespace oracle
