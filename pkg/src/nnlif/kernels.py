"""Step-kernel backend selection.

The compiled Cython kernel is used when its extension module imports;
otherwise the numpy fallback takes over.  Set NNLIF_KERNEL=python (or
=cython) to force a backend, e.g. for benchmarking one against the other.
"""

from __future__ import annotations

import os

from . import _stepper_py

_requested = os.environ.get("NNLIF_KERNEL", "").strip().lower()

if _requested == "python":
    _impl = _stepper_py
else:
    try:
        from . import _stepper_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "NNLIF_KERNEL=cython but the compiled kernel is not built; "
                "run `python setup.py build_ext --inplace`"
            )
        _impl = _stepper_py

BACKEND = _impl.BACKEND_NAME
StepWorkspace = _impl.StepWorkspace


def available_backends() -> dict[str, type]:
    """All importable backends keyed by name (for the benchmark script)."""
    backends = {_stepper_py.BACKEND_NAME: _stepper_py.StepWorkspace}
    try:
        from . import _stepper_cy

        backends[_stepper_cy.BACKEND_NAME] = _stepper_cy.StepWorkspace
    except ImportError:
        pass
    return backends
