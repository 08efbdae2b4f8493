# Default settings. Override them with a Python file named by the
# DYNAMIC_PCA_SETTINGS environment variable (see dynamic_pca.settings).

JACOBI_MAX_SWEEPS = 100
JACOBI_TOLERANCE = 1e-13

# Point updates a MomentTracker absorbs before it asks for a rebuild.
REBUILD_THRESHOLD = 10 ** 6

# Above this many points the diameter is approximated by the AABB diagonal.
EXACT_DIAMETER_LIMIT = 10 ** 4

DEGENERACY_TOLERANCE = 1e-14
INSIDE_TOLERANCE = 1e-12
UNIT_TOLERANCE = 1e-9

DEFAULT_EPSILONS = (0.05,)
DEFAULT_BATCH_SIZES = (1, 100, 1000)
DEFAULT_REPETITIONS = 100
DEFAULT_SEED = 0
DEFAULT_FORMAT = 'csv'

CPCA_EDITS = 10
CPCA_TOLERANCE = 1e-8
VOLUME_TOLERANCE = 1e-9
