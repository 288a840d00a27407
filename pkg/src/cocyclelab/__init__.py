"""Numerical laboratory for parametrized automorphism families.

Reconstruction of implementing unitaries from channel data, extraction and
trivialization of scalar multipliers, gauge-group and cocycle calculus on
truncated shift models, and Cech bundle invariants, bound together by a
deterministic pipeline runner with a service and CLI front end.
"""

import os as _os

__version__ = "0.1.0"

# honor the thread-count variable before the numerics stack loads
_threads = _os.environ.get("COCYCLELAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .linalg import RejectionError  # noqa: E402,F401
