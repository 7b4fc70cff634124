"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the pure-numpy
fallback implements identical semantics (verified bit for bit by the parity
tests), so selection never changes results, only speed.

Set ``VAXLENS_BACKEND=python`` to force the fallback or ``compiled`` to
require the extension (ImportError if it is missing).
"""

from __future__ import annotations

import os

_requested = os.environ.get("VAXLENS_BACKEND", "auto").strip().lower() or "auto"

if _requested in ("python", "py"):
    from . import _pytree as _impl

    BACKEND = "python"
elif _requested in ("auto", "compiled", "c"):
    try:
        from . import _ctree as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested != "auto":
            raise
        from . import _pytree as _impl  # type: ignore[no-redef]

        BACKEND = "python"
else:
    raise ImportError(
        f"VAXLENS_BACKEND={_requested!r} not recognized (use auto, compiled or python)"
    )

grow_tree = _impl.grow_tree
tree_apply = _impl.tree_apply


def get_backend(name: str):
    """Load a specific backend module (for parity tests and benchmarks)."""
    if name == "python":
        from . import _pytree

        return _pytree
    if name == "compiled":
        from . import _ctree

        return _ctree
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    out = ["python"]
    try:
        from . import _ctree  # noqa: F401

        out.append("compiled")
    except ImportError:
        pass
    return out
