"""Backend selection for the jet kernels.

The compiled extension is used when it imports; set ``DEEPPDE_PURE_PYTHON=1``
to force the numpy fallback.  :func:`use_backend` switches at runtime, which
the benchmark and the backend-agreement tests rely on.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _fallback

try:
    from . import _jetkernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS: dict[str, ModuleType] = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active: ModuleType = _fallback
BACKEND = "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def use_backend(name: str) -> None:
    global _active, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {available_backends()}")
    _active = _BACKENDS[name]
    BACKEND = name


def active():
    return _active


if _compiled is not None and os.environ.get("DEEPPDE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    use_backend("compiled")
