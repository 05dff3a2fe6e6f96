"""Select the layer kernel at import time.

``KANSYNTH_BACKEND`` may be ``auto`` (default: compiled if importable),
``cython`` (fail if the extension is missing) or ``python``.
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def get_backend(name="auto"):
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("kansynth._kernels is not built; run `pip install -e .`")
        return _compiled
    if name == "auto":
        return _compiled if _compiled is not None else _fallback
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


kernels = get_backend(os.environ.get("KANSYNTH_BACKEND", "auto"))
