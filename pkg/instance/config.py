"""
Default configuration for dpnibble. Every upper-case name here can be overridden from a
Python config file passed with ``--config`` (see ``dpnibble.settings.Settings.from_pyfile``).
"""

# Retry caps.
MAX_ATTEMPTS = 64  # Whole-round resamples before a nibble round gives up.
REGULAR_MAX_RESTARTS = 1000  # Full restarts of the pairing model for random regular graphs.
RESAMPLE_FACTOR = 10 ** 6  # Finisher resample cap is RESAMPLE_FACTOR * (cover edges + 1).

# Schedule recursion cap (rows).
SCHEDULE_MAX_ITER = 10 ** 6

# Brute-force guard: product of list sizes.
BRUTE_FORCE_GUARD = 10 ** 8

# Absolute tolerance for threshold comparisons on degrees and list sizes.
FLOAT_TOLERANCE = 1e-9

# CSV output.
CSV_SIGNIFICANT_DIGITS = 12

# Monte-Carlo trials per work chunk. Chunking is fixed so results do not depend on --threads.
STATS_CHUNK_TRIALS = 256

# Logging.
LOG_LEVEL = 'INFO'
LOG_FILE = None  # None logs to stderr.
LOG_FORMAT = '%(asctime)s %(levelname)s %(message)s'
