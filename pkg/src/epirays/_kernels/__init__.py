"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is always available. EPIRAYS_BACKEND=numpy or =compiled forces the
choice process-wide, and call sites may pass backend= explicitly.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

try:
    from . import _ext
except ImportError:  # extension not built
    _ext = None

_ENV_VAR = "EPIRAYS_BACKEND"


def available_backends() -> tuple[str, ...]:
    if _ext is not None:
        return ("compiled", "numpy")
    return ("numpy",)


def default_backend() -> str:
    forced = os.environ.get(_ENV_VAR)
    if forced:
        return _resolve(forced)
    return "compiled" if _ext is not None else "numpy"


def _resolve(name: str) -> str:
    if name not in ("compiled", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'numpy'")
    if name == "compiled" and _ext is None:
        raise RuntimeError("compiled backend requested but the extension is not built")
    return name


def attend_pool(q: np.ndarray, feats: np.ndarray, valid: np.ndarray,
                backend: str | None = None) -> np.ndarray:
    name = _resolve(backend) if backend else default_backend()
    if name == "compiled":
        q = np.ascontiguousarray(q, dtype=np.float64)
        feats = np.ascontiguousarray(feats, dtype=np.float64)
        mask = np.ascontiguousarray(valid, dtype=np.uint8)
        return _ext.attend_pool(q, feats, mask)
    return fallback.attend_pool(q, feats, valid)


def bilinear_gather(src: np.ndarray, pts: np.ndarray, valid: np.ndarray,
                    backend: str | None = None) -> np.ndarray:
    name = _resolve(backend) if backend else default_backend()
    if name == "compiled":
        src = np.ascontiguousarray(src, dtype=np.float64)
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        mask = np.ascontiguousarray(valid, dtype=np.uint8)
        return _ext.bilinear_gather(src, pts, mask)
    return fallback.bilinear_gather(src, pts, valid)
