# process exit codes
EXIT_SUCCESS = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

# relative tolerances
IDENTITY_TOL = 1e-12
CALIBRATION_TOL = 1e-10
WELL_PREPARED_TOL = 1e-12
DIVERGENCE_FREE_TOL = 1e-10

# M tables are floored here; M^-1 weights are guarded against it
M_FLOOR = 1e-300

# collision frequency blend zone around |v| = 1
BLEND_LOW = 0.9
BLEND_HIGH = 1.1

DEFAULT_TAIL_RADIUS = 2.0
DEFAULT_DOMAIN_LENGTH = 6.283185307179586

# grid-stability scan: increments must contract below this ratio
SCAN_CONTRACTION = 0.9
SCAN_FLOOR = 1e-9
SCAN_LEVELS = 3

BRANCH_SEPARATION = 2.0
MACRO_FRACTION_MIN = 0.5

# default wave numbers for the symbol fit, 2^-6 .. 2^-3 in half-octave steps
SYMBOL_POINTS = 7
DEFAULT_K_LIST = tuple(2.0 ** (-6.0 + 0.5 * j) for j in range(SYMBOL_POINTS))
# gamma scan of the two-term symbol fit
SYMBOL_GAMMA_SCAN = 80
DEFAULT_EPS_LIST = (0.2, 0.1, 0.05, 0.025)
DEFAULT_RECORD_TIMES = (0.1, 0.25, 0.5)
# random low modes added to the default initial data when a run is seeded
SEEDED_MODES = 3
SEEDED_AMPLITUDE = 0.1
# relative spread allowed between the per-eps fitted constants of a residual bound
CONSTANT_SPREAD = 0.25

REPORT_MANIFEST = 'manifest.json'
