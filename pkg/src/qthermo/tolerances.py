"""Single source of truth for numerical tolerances.

Three tiers, loosening with the amount of floating-point work behind a
quantity:

* STRUCTURAL -- properties of matrices as stored (hermiticity of inputs).
* ALGEBRAIC  -- one round of dense linear algebra (unitarity, trace
  normalisation, eigensolver residuals, detailed-balance ratios).
* DYNAMICAL  -- propagated quantities (positivity of evolved states,
  Choi spectra of exponentials, entropy-production margins).
"""

STRUCTURAL = 1e-12
ALGEBRAIC = 1e-10
DYNAMICAL = 1e-9

# Relative gap below which two eigenvalues count as one degenerate level,
# and the band above it in which a spectrum is declared unresolved.
LEVEL_MERGE_REL = 1e-9
LEVEL_RESOLVE_REL = 1e-6
