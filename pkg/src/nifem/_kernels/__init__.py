"""Hot numerical kernels: compiled core with a numpy fallback.

The compiled extension is preferred when importable; set NIFEM_PURE_PY=1 to
force the numpy implementation.
"""

import os

from .common import brute_force_locate, build_neighbors

if os.environ.get("NIFEM_PURE_PY", "0") not in ("", "0"):
    from . import pyk as _impl

    BACKEND = "python"
else:
    try:
        from . import cyk as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import pyk as _impl

        BACKEND = "python"

assemble_triplets = _impl.assemble_triplets
locate_points = _impl.locate_points

__all__ = [
    "BACKEND",
    "assemble_triplets",
    "locate_points",
    "build_neighbors",
    "brute_force_locate",
]
