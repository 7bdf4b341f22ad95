#include "pw/hyperreal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pw {

std::string to_string(const Rat& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rat parse_rational(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty rational");
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rat(std::stoll(s));
    const long long num = std::stoll(s.substr(0, slash));
    const long long den = std::stoll(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rat(num, den);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("rational out of range: " + s);
  }
}

namespace {

void require_same_cap(const HyperReal& a, const HyperReal& b) {
  if (a.order_cap() != b.order_cap())
    throw std::invalid_argument("hyperreal operands have different order caps");
}

// Cauchy product of term lists, truncated at cap. Deterministic accumulation
// order: outer loop over a, inner over b, merged through an exponent-keyed map.
std::vector<HyperReal::Term> mul_terms(const std::vector<HyperReal::Term>& a,
                                       const std::vector<HyperReal::Term>& b,
                                       const Rat& cap) {
  std::map<Rat, double> acc;
  for (const auto& ta : a) {
    for (const auto& tb : b) {
      const Rat e = ta.exponent + tb.exponent;
      if (e > cap) continue;
      acc[e] += ta.coefficient * tb.coefficient;
    }
  }
  std::vector<HyperReal::Term> out;
  out.reserve(acc.size());
  for (const auto& [e, c] : acc)
    if (c != 0.0) out.push_back({e, c});
  return out;
}

std::vector<HyperReal::Term> add_terms(const std::vector<HyperReal::Term>& a,
                                       const std::vector<HyperReal::Term>& b) {
  std::vector<HyperReal::Term> out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].exponent < b[j].exponent)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].exponent < a[i].exponent) {
      out.push_back(b[j++]);
    } else {
      const double c = a[i].coefficient + b[j].coefficient;
      if (c != 0.0) out.push_back({a[i].exponent, c});
      ++i;
      ++j;
    }
  }
  return out;
}

}  // namespace

HyperReal::HyperReal(double value, Rat cap) : cap_(std::move(cap)) {
  if (!std::isfinite(value))
    throw std::invalid_argument("non-finite hyperreal coefficient");
  if (value != 0.0) terms_.push_back({Rat(0), value});
  normalize();
}

HyperReal HyperReal::term(double coefficient, const Rat& power, Rat cap) {
  HyperReal h;
  h.cap_ = std::move(cap);
  if (!std::isfinite(coefficient))
    throw std::invalid_argument("non-finite hyperreal coefficient");
  if (coefficient != 0.0) h.terms_.push_back({power, coefficient});
  h.normalize();
  return h;
}

HyperReal HyperReal::epsilon(const Rat& power, Rat cap) {
  return term(1.0, power, std::move(cap));
}

HyperReal HyperReal::from_terms(std::vector<Term> terms, Rat cap) {
  HyperReal h;
  h.cap_ = std::move(cap);
  h.terms_ = std::move(terms);
  for (const auto& t : h.terms_)
    if (!std::isfinite(t.coefficient))
      throw std::invalid_argument("non-finite hyperreal coefficient");
  h.normalize();
  return h;
}

void HyperReal::normalize() {
  std::stable_sort(terms_.begin(), terms_.end(),
                   [](const Term& a, const Term& b) { return a.exponent < b.exponent; });
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (t.exponent > cap_) continue;
    if (!out.empty() && out.back().exponent == t.exponent) {
      out.back().coefficient += t.coefficient;
      if (out.back().coefficient == 0.0) out.pop_back();
    } else if (t.coefficient != 0.0) {
      out.push_back(t);
    }
  }
  terms_ = std::move(out);
}

Rat HyperReal::leading_exponent() const {
  if (is_zero()) throw std::domain_error("zero hyperreal has no leading exponent");
  return terms_.front().exponent;
}

double HyperReal::leading_coefficient() const {
  return is_zero() ? 0.0 : terms_.front().coefficient;
}

double HyperReal::coefficient_at(const Rat& exponent) const {
  for (const auto& t : terms_) {
    if (t.exponent == exponent) return t.coefficient;
    if (t.exponent > exponent) break;
  }
  return 0.0;
}

HyperReal::Magnitude HyperReal::classify() const {
  if (is_zero()) return Magnitude::zero;
  const Rat& le = terms_.front().exponent;
  if (le > Rat(0)) return Magnitude::infinitesimal;
  if (le == Rat(0)) return Magnitude::appreciable;
  return Magnitude::infinite;
}

double HyperReal::standard_part() const {
  if (classify() == Magnitude::infinite)
    throw std::domain_error("infinite hyperreal has no standard part");
  return coefficient_at(Rat(0));
}

double HyperReal::instantiate(double eps_value) const {
  if (!(eps_value > 0.0 && eps_value < 1.0))
    throw std::invalid_argument("instantiate requires 0 < eps_value < 1");
  double sum = 0.0;
  for (const auto& t : terms_)
    sum += t.coefficient * std::pow(eps_value, to_double(t.exponent));
  return sum;
}

HyperReal HyperReal::truncated(const Rat& new_cap) const {
  if (new_cap > cap_)
    throw std::invalid_argument("truncated() cannot raise the order cap");
  HyperReal h;
  h.cap_ = new_cap;
  h.terms_ = terms_;
  h.normalize();
  return h;
}

HyperReal HyperReal::operator-() const {
  HyperReal h = *this;
  for (auto& t : h.terms_) t.coefficient = -t.coefficient;
  return h;
}

HyperReal operator+(const HyperReal& a, const HyperReal& b) {
  require_same_cap(a, b);
  HyperReal h;
  h.cap_ = a.cap_;
  h.terms_ = add_terms(a.terms_, b.terms_);
  return h;
}

HyperReal operator-(const HyperReal& a, const HyperReal& b) { return a + (-b); }

HyperReal operator*(const HyperReal& a, const HyperReal& b) {
  require_same_cap(a, b);
  HyperReal h;
  h.cap_ = a.cap_;
  h.terms_ = mul_terms(a.terms_, b.terms_, a.cap_);
  return h;
}

HyperReal operator*(double a, const HyperReal& b) {
  return HyperReal(a, b.cap_) * b;
}

HyperReal operator/(const HyperReal& a, const HyperReal& b) {
  require_same_cap(a, b);
  if (b.is_zero()) throw std::domain_error("hyperreal division by zero");
  if (a.is_zero()) return a;

  // b = c * eps^q * (1 + u) with u infinitesimal; 1/b = (1/c) eps^{-q} sum (-u)^k.
  const Rat q = b.leading_exponent();
  const double c = b.leading_coefficient();
  std::vector<HyperReal::Term> u;
  for (std::size_t i = 1; i < b.terms_.size(); ++i)
    u.push_back({b.terms_[i].exponent - q, b.terms_[i].coefficient / c});

  // The geometric series must reach high enough order that the final product,
  // shifted by -q and combined with a's leading exponent, still fills the cap.
  const Rat la = a.leading_exponent();
  Rat work_cap = a.cap_ - la + q;
  if (work_cap < a.cap_) work_cap = a.cap_;

  std::vector<HyperReal::Term> geom = {{Rat(0), 1.0}};
  std::vector<HyperReal::Term> upow = u;
  double sign = -1.0;
  while (!upow.empty()) {
    std::vector<HyperReal::Term> signed_pow = upow;
    for (auto& t : signed_pow) t.coefficient *= sign;
    geom = add_terms(geom, signed_pow);
    upow = mul_terms(upow, u, work_cap);
    sign = -sign;
  }

  std::vector<HyperReal::Term> recip;
  recip.reserve(geom.size());
  for (const auto& t : geom) recip.push_back({t.exponent - q, t.coefficient / c});

  HyperReal h;
  h.cap_ = a.cap_;
  h.terms_ = mul_terms(a.terms_, recip, a.cap_);
  return h;
}

bool operator==(const HyperReal& a, const HyperReal& b) {
  require_same_cap(a, b);
  if (a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i)
    if (a.terms_[i].exponent != b.terms_[i].exponent ||
        a.terms_[i].coefficient != b.terms_[i].coefficient)
      return false;
  return true;
}

std::strong_ordering operator<=>(const HyperReal& a, const HyperReal& b) {
  const HyperReal d = a - b;
  const double lead = d.leading_coefficient();
  if (lead > 0.0) return std::strong_ordering::greater;
  if (lead < 0.0) return std::strong_ordering::less;
  return std::strong_ordering::equal;
}

HyperReal sqrt(const HyperReal& a) {
  if (a.is_zero()) return a;
  if (a.leading_coefficient() < 0.0)
    throw std::domain_error("hyperreal sqrt of a negative element");

  // a = c * eps^q * (1 + u); sqrt(a) = sqrt(c) eps^{q/2} sum binom(1/2,k) u^k.
  const Rat q = a.leading_exponent();
  const double c = a.leading_coefficient();
  std::vector<HyperReal::Term> u;
  for (std::size_t i = 1; i < a.terms().size(); ++i)
    u.push_back({a.terms()[i].exponent - q, a.terms()[i].coefficient / c});

  const Rat half_q(q.numerator(), q.denominator() * 2);
  Rat work_cap = a.order_cap() - half_q;
  if (work_cap < a.order_cap()) work_cap = a.order_cap();

  std::vector<HyperReal::Term> series = {{Rat(0), 1.0}};
  std::vector<HyperReal::Term> upow = u;
  double binom = 1.0;  // binom(1/2, k), updated incrementally
  for (int k = 1; !upow.empty(); ++k) {
    binom *= (0.5 - (k - 1)) / k;
    std::vector<HyperReal::Term> contrib = upow;
    for (auto& t : contrib) t.coefficient *= binom;
    series = add_terms(series, contrib);
    upow = mul_terms(upow, u, work_cap);
  }

  std::vector<HyperReal::Term> out;
  out.reserve(series.size());
  const double root_c = std::sqrt(c);
  for (const auto& t : series)
    out.push_back({t.exponent + half_q, t.coefficient * root_c});
  return HyperReal::from_terms(std::move(out), a.order_cap());
}

HyperReal abs(const HyperReal& a) {
  return a.leading_coefficient() < 0.0 ? -a : a;
}

bool infinitely_close(const HyperReal& a, const HyperReal& b) {
  const auto m = (a - b).classify();
  return m == HyperReal::Magnitude::zero ||
         m == HyperReal::Magnitude::infinitesimal;
}

}  // namespace pw
