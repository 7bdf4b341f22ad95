#include "pw/perturb.hpp"

#include <cmath>
#include <stdexcept>

namespace pw {

ZeroSetMask zero_set(const WaveFunction& wf, double tol) {
  if (tol < 0.0) throw std::invalid_argument("zero_set requires tol >= 0");
  ZeroSetMask m;
  m.grid = wf.grid();
  m.mask.resize(wf.n());
  for (int j = 0; j < wf.n(); ++j)
    m.mask[j] = std::abs(wf.samples()[j]) <= tol ? 1 : 0;
  return m;
}

WaveFunction build_theta(const ZeroSetMask& mask, const PerturbationSpec& spec) {
  if (!(spec.envelope_width > 0.0))
    throw std::invalid_argument("perturbation envelope width must be positive");
  if (!mask.any())
    throw std::invalid_argument(
        "psi already has full support: empty zero set, no theta to build");
  std::vector<cdouble> s(mask.grid.n, cdouble{0.0, 0.0});
  const double c = spec.envelope_center;
  const double w = spec.envelope_width;
  for (int j = 0; j < mask.grid.n; ++j) {
    if (!mask.mask[j]) continue;
    const double x = mask.grid.x(j);
    s[j] = std::exp(-(x - c) * (x - c) / (2.0 * w * w));
  }
  WaveFunction theta(mask.grid, std::move(s));
  if (norm2(theta) <= 0.0)
    throw std::domain_error("theta envelope underflows to zero on the mask");
  return normalized(theta);
}

Perturbation perturb(const WaveFunction& psi, const PerturbationSpec& spec,
                     Rat order_cap) {
  const double n2 = norm2(psi);
  if (std::abs(n2 - 1.0) > 1e-6)
    throw std::invalid_argument("perturb requires a unit-normalized psi");
  if (!(spec.grade > Rat(0)))
    throw std::invalid_argument("perturbation grade must be positive");

  Perturbation out{GradedWaveFunction::pure(psi, order_cap), false, false};
  if (spec.grade > order_cap) {
    // eps^q is beyond every representable order: theta truncates away and
    // sqrt(1 - eps^{2q}) truncates to 1.
    out.grade_truncated = true;
    return out;
  }

  const ZeroSetMask mask = zero_set(psi, spec.zero_tol);
  if (!mask.any()) {
    out.already_full_support = true;
    return out;
  }
  WaveFunction theta0 = build_theta(mask, spec);

  const Rat two_q = spec.grade * Rat(2);
  const HyperReal delta = HyperReal::epsilon(two_q, order_cap);
  const HyperReal coeff = sqrt(HyperReal(1.0, order_cap) - delta);

  std::vector<GradedWaveFunction::Component> comps;
  comps.push_back({Rat(0), coeff, psi});
  comps.push_back({spec.grade, HyperReal(1.0, order_cap), std::move(theta0)});
  out.state = GradedWaveFunction(std::move(comps), order_cap);
  return out;
}

Lemma2Result lemma2_gap(const GradedWaveFunction& psi,
                        const GradedWaveFunction& psitilde,
                        const IntervalUnion& f) {
  if (!(psi.grid() == psitilde.grid()))
    throw std::invalid_argument("lemma2_gap requires a shared grid");
  const HyperReal a = integral_over(psi, f);
  const HyperReal b = integral_over(psitilde, f);
  return {abs(a - b), 2.0 * l2_distance(psi, psitilde)};
}

}  // namespace pw
