"""Backend selection for the battery-integration kernels.

Prefers the compiled extension, falls back to the pure-Python twin.
Set SMARTUPS_PURE=1 to force the fallback (used by the benchmark and the
backend-equivalence tests). Both backends are bit-identical by design.
"""

import os

if os.environ.get("SMARTUPS_PURE"):
    from smartups._purekernel import step_const, step_discharge
    BACKEND = "pure"
else:
    try:
        from smartups._core import step_const, step_discharge
        BACKEND = "compiled"
    except ImportError:
        from smartups._purekernel import step_const, step_discharge
        BACKEND = "pure"

__all__ = ["step_const", "step_discharge", "BACKEND"]
