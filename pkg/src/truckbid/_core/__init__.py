"""Hot numerical kernels with backend selection at import.

The compiled Cython extension is preferred when it is built; otherwise the
pure NumPy/Python reference implementation is used.  Set
``TRUCKBID_FORCE_PYTHON=1`` to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import reference
from .reference import INFEASIBLE

BACKEND = "python"
kg_grid_values = reference.kg_grid_values
solve_assignment = reference.solve_assignment

if not os.environ.get("TRUCKBID_FORCE_PYTHON"):
    try:
        from . import _kernels  # type: ignore[attr-defined]

        kg_grid_values = _kernels.kg_grid_values
        solve_assignment = _kernels.solve_assignment
        BACKEND = "compiled"
    except ImportError:
        pass


def backends() -> dict[str, object]:
    """Available backend modules keyed by name (for tests and benchmarks)."""
    out = {"python": reference}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
