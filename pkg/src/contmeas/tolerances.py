"""Numerical tolerances used as defaults throughout the package.

Every function that consumes one of these accepts it as a keyword argument,
so call sites can tighten or loosen individual checks without global state.
"""

# Hermiticity: max |M - M^dag| entry.
HERM_TOL = 1e-10

# Positive semidefiniteness: eigenvalues may dip this far below zero.
PSD_TOL = 1e-10

# Density matrices: |trace - 1|.
TRACE_TOL = 1e-8

# Eigenvalues closer than this are treated as one degenerate cluster.
DEG_TOL = 1e-8

# Eigenvalues below this are outside the support (0 ln 0 = 0 convention).
ZERO_TOL = 1e-12

# project_to_density flags clips more negative than CLIP_TOL * trace.
CLIP_TOL = 1e-6

# Jump outcomes with trace at or below this are unreachable (DeadChannel).
JUMP_TOL = 1e-12

# Support comparison cutoff for relative entropy and coupled simulation.
SUPP_TOL = 1e-10

# Quasi-completeness: C1 operator-norm bound and C2 entrywise bound.
C1_TOL = 1e-12
C2_TOL = 1e-10

# Per-step jump probability cap; dt * (rate bound) must stay at or below it.
RATE_CAP = 0.1

# Equilibrium search: accepted residual |L[eta]|_1.
EQ_RESIDUAL_TOL = 1e-8

# Trajectory weights below this trace are an underflow, not a dead path.
WEIGHT_FLOOR = 1e-300

# Relative trace below which a jump outcome is an exact zero-probability
# event for the realized path (the path keeps weight zero from then on).
DEAD_TOL = 1e-14
