#pragma once

#include <compare>
#include <vector>

#include "pw/rational.hpp"

namespace pw {

/// Truncated Levi-Civita number: a finite series sum_i c_i * eps^{q_i} in one
/// formal infinitesimal eps, with exact rational exponents q_i (strictly
/// increasing) and binary64 coefficients c_i (never zero). Terms with exponent
/// above `order_cap` are truncated away; every operation re-normalizes.
///
/// This is a computable ordered field with infinitesimal (leading exponent > 0)
/// and infinite (leading exponent < 0) elements. Comparison is lexicographic by
/// the sign of the leading coefficient of the difference, so eps > 0 but
/// eps < r for every real r > 0.
class HyperReal {
 public:
  struct Term {
    Rat exponent;
    double coefficient;
  };

  enum class Magnitude { zero, infinitesimal, appreciable, infinite };

  static Rat default_order_cap() { return Rat(4); }

  /// Zero with the default cap.
  HyperReal() : cap_(default_order_cap()) {}

  /// A standard real embedded in the field.
  explicit HyperReal(double value, Rat cap = default_order_cap());

  /// coefficient * eps^power.
  static HyperReal term(double coefficient, const Rat& power,
                        Rat cap = default_order_cap());

  /// eps^power (power may be negative: an infinite element).
  static HyperReal epsilon(const Rat& power = Rat(1),
                           Rat cap = default_order_cap());

  /// Builds from arbitrary terms; sorts, merges, drops zeros, truncates.
  static HyperReal from_terms(std::vector<Term> terms,
                              Rat cap = default_order_cap());

  const std::vector<Term>& terms() const { return terms_; }
  const Rat& order_cap() const { return cap_; }
  bool is_zero() const { return terms_.empty(); }

  /// Lowest exponent present. Precondition: not zero.
  Rat leading_exponent() const;
  /// Coefficient of the lowest exponent; 0 for the zero element.
  double leading_coefficient() const;
  double coefficient_at(const Rat& exponent) const;

  Magnitude classify() const;

  /// Coefficient at exponent 0. Throws std::domain_error on infinite input.
  double standard_part() const;

  /// Numeric value with eps := eps_value. Precondition: 0 < eps_value < 1.
  double instantiate(double eps_value) const;

  /// Copy with terms above new_cap dropped (new_cap <= order_cap). Used when
  /// comparing two computation routes that are exact only to a reduced order.
  HyperReal truncated(const Rat& new_cap) const;

  HyperReal operator-() const;
  friend HyperReal operator+(const HyperReal& a, const HyperReal& b);
  friend HyperReal operator-(const HyperReal& a, const HyperReal& b);
  friend HyperReal operator*(const HyperReal& a, const HyperReal& b);
  /// Throws std::domain_error if b is zero.
  friend HyperReal operator/(const HyperReal& a, const HyperReal& b);

  friend HyperReal operator*(double a, const HyperReal& b);
  friend HyperReal operator*(const HyperReal& a, double b) { return b * a; }

  friend bool operator==(const HyperReal& a, const HyperReal& b);
  friend std::strong_ordering operator<=>(const HyperReal& a,
                                          const HyperReal& b);

 private:
  std::vector<Term> terms_;  // strictly increasing exponents, nonzero coeffs
  Rat cap_;

  void normalize();
  friend HyperReal sqrt(const HyperReal&);
};

/// Square root via leading-term factorization and the binomial series.
/// Requires a >= 0 under the field order; throws std::domain_error otherwise.
HyperReal sqrt(const HyperReal& a);

HyperReal abs(const HyperReal& a);

/// a ~ b: the difference is zero or infinitesimal.
bool infinitely_close(const HyperReal& a, const HyperReal& b);

}  // namespace pw
