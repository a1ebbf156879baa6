"""This module contains configuration constants used across the toolkit"""

# Time horizon after which a nonempty run is censored as survived.
T_MAX = 200.0

# Population at which a run is censored as survived.
N_MAX = 5000

# Confidence level of the Wilson score intervals.
CONFIDENCE = 0.95

# Environment variable used as a fallback seed by the command line.
SEED_ENV_VAR = "MUTACP_SEED"


# Exact solver configs
# ----------------------

# Hard cap on the number of vertices the exact solver enumerates.
MAX_EXACT_VERTICES = 12

# Largest graph the exhaustive comparison checks run on.
MAX_VERIFY_VERTICES = 4

# Poisson tail mass dropped by uniformization.
UNIFORMIZATION_TOLERANCE = 1e-12

# Slack allowed on exact inequality checks.
COMPARISON_TOLERANCE = 1e-9

# ----------------------


# Monte Carlo configs
# ----------------------

# Depth below which type-1 births are suppressed in offspring episodes.
OFFSPRING_DEPTH_CAP = 60

# Population at which the supermartingale probe freezes a run.
PROBE_N_MAX = 500

# Multiples of the standard error used by statistical acceptance.
SE_MARGIN = 3.0
POOLED_SE_MARGIN = 4.0

# Format of floating point fields in CSV output.
CSV_FLOAT_FORMAT = ".10g"

# ----------------------


# Command line configs
# ----------------------

# Trials per grid point when --trials is not given.
DEFAULT_TRIALS = 1000

# Master seed of the check suites when --seed is not given.
CHECK_SEED = 20240611

# Birth rate of the two-site table printed by the exact command.
TWO_SITE_LAMBDA = 1000.0

# ----------------------
