"""
Default numerical parameters and thresholds.
"""

# Projected SOR
RELAXATION_OMEGA = 1.5
SOLVER_TOL = 1e-8
MAX_ITER = 200000
SWEEP_ORDER = "red_black"
# Residuals must be below this multiple of the update tolerance to converge
RESIDUAL_TOL_FACTOR = 10.0

# Contact is declared where v - psi is below this fraction of the obstacle's
# dynamic range
CONTACT_TOL_REL = 1e-6

# Leading-form sphere minimum below this (after normalisation) is undecided
POSITIVITY_DELTA = 1e-9
POSITIVITY_SAMPLES_PER_DIM = 2000
POSITIVITY_REFINE_STARTS = 5

# Tolerance for a-harmonicity of polynomials with float coefficients
HARMONIC_RTOL = 1e-12
MAX_BASIS_DEGREE = 4

# Inverse map
FIT_ANNULUS = (0.5, 0.75)
FIT_PRUNE_REL = 1e-3
FIT_RESIDUAL_FLAG = 1e-2

# Potentials
RING_QUADRATURE_POINTS = 64
DENSITY_DISAGREEMENT = 0.05
BARRIER_SAFETY = 2.0

# Calibration
CALIBRATION_SPREAD_MAX = 0.10
CALIBRATION_SOURCE_CELLS = 2
CALIBRATION_PROBE_RANGE = (0.25, 0.5)
# A source radius must be at most this fraction of L
CALIBRATION_MIN_BOX_RATIO = 8.0

# Far-field truncation warning: L must exceed this multiple of the obstacle
# support radius
TRUNCATION_RATIO = 4.0

# Decay checks
DECAY_SLACK = 0.5
# Outer end of the decay ray as a fraction of L with zero far-field data
DECAY_WINDOW_END = 0.5
DECAY_RELATIVE_BAND = 0.15
MIN_DECAY_RADII = 5
MIN_DECAY_SPAN = 4.0

# Oracle instance limits
ORACLE_MAX_THIN = 12
ORACLE_MAX_NODES = 200
