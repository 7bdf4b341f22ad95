#pragma once

#include "pw/wavefield.hpp"

namespace pw {

/// Parameters of the full-support perturbation psi~ = sqrt(1-delta) psi + eps^q theta0,
/// with theta0 unit-normalized and vanishing exactly off the zero set of psi,
/// so delta = eps^{2q} exactly.
struct PerturbationSpec {
  Rat grade{1};  // q >= 1 by default
  double envelope_center = 0.0;
  double envelope_width = 1.0;
  double zero_tol = 0.0;  // |psi| <= tol counts as zero (0 for constructed states)
};

/// Mask of E = {x : |psi(x)| <= tol}.
ZeroSetMask zero_set(const WaveFunction& wf, double tol);

/// Unit-normalized Gaussian envelope restricted to the masked cells; nonzero
/// exactly on the mask. Throws std::invalid_argument when the mask is empty
/// (psi already has full support).
WaveFunction build_theta(const ZeroSetMask& mask, const PerturbationSpec& spec);

struct Perturbation {
  GradedWaveFunction state;
  /// psi had no zeros at the given tolerance; the state is psi alone and the
  /// full-support postulate holds trivially.
  bool already_full_support = false;
  /// grade exceeds the order cap, so the theta component is truncated away.
  bool grade_truncated = false;
};

/// Lemma-1 construction. Requires norm2(psi) within 1e-6 of 1.
Perturbation perturb(const WaveFunction& psi, const PerturbationSpec& spec,
                     Rat order_cap = HyperReal::default_order_cap());

struct Lemma2Result {
  HyperReal gap;    // |integral_F |psi|^2 - integral_F |psi~|^2|
  HyperReal bound;  // 2 ||psi - psi~||_2
};

Lemma2Result lemma2_gap(const GradedWaveFunction& psi,
                        const GradedWaveFunction& psitilde,
                        const IntervalUnion& f);

}  // namespace pw
