"""3D scene recovery from single-point multipath temporal echoes."""

import os

# numba otherwise probes TBB first and warns when the installed one is too old
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

__version__ = "0.1.0"
