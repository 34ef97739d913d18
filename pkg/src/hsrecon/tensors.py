"""Dense 3-order tensor algebra: unfolding, n-mode products and HOSVD.

A tensor is a C-contiguous ``float64`` ndarray of shape ``(d1, d2, d3)``
(mode-1 index slowest). Modes are numbered 1..3 throughout, matching the
usual multilinear-algebra convention.

Unfolding layout contract: for mode ``n`` the columns of the unfolding are
the mode-``n`` fibers, ordered cyclically over the remaining modes
``n+1, n+2`` (wrapping), with the index of mode ``n+2`` varying fastest.
``fold`` is the exact inverse of ``unfold`` under this ordering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, UsageError

__all__ = [
    "TuckerFactors",
    "frobenius_norm",
    "unfold",
    "fold",
    "mode_n_product",
    "hosvd",
    "tucker_reconstruct",
]


@dataclass(frozen=True)
class TuckerFactors:
    """Core tensor plus the three orthonormal-column factor matrices."""

    core: np.ndarray
    factors: tuple[np.ndarray, np.ndarray, np.ndarray]


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise UsageError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode - 1


def frobenius_norm(t: np.ndarray) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Matricize ``t`` along ``mode`` (fibers as columns, cyclic ordering)."""
    a = _check_mode(mode)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise DimensionError(f"expected a 3-order tensor, got ndim={t.ndim}")
    perm = (a, (a + 1) % 3, (a + 2) % 3)
    return t.transpose(perm).reshape(t.shape[a], -1)


def fold(m: np.ndarray, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold` with the same mode and target dims."""
    a = _check_mode(mode)
    m = np.asarray(m, dtype=np.float64)
    perm = (a, (a + 1) % 3, (a + 2) % 3)
    shape = tuple(dims[p] for p in perm)
    if m.shape != (shape[0], shape[1] * shape[2]):
        raise DimensionError(
            f"matrix shape {m.shape} does not match mode-{mode} unfolding of {dims}"
        )
    inv = np.argsort(perm)
    return m.reshape(shape).transpose(inv)


def mode_n_product(t: np.ndarray, a: np.ndarray, mode: int) -> np.ndarray:
    """Multiply tensor ``t`` by matrix ``a`` along ``mode``."""
    axis = _check_mode(mode)
    t = np.asarray(t, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != t.shape[axis]:
        raise DimensionError(
            f"matrix shape {a.shape} incompatible with mode-{mode} size {t.shape[axis]}"
        )
    dims = list(t.shape)
    dims[axis] = a.shape[0]
    return fold(a @ unfold(t, mode), mode, tuple(dims))


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # Deterministic convention: each column's largest-magnitude entry >= 0.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def hosvd(t: np.ndarray) -> TuckerFactors:
    """Full higher-order SVD of a 3-order tensor.

    Factor ``U_n`` holds the left singular vectors of the mode-``n``
    unfolding; the core is ``t`` contracted with every ``U_n`` transposed.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise DimensionError(f"expected a 3-order tensor, got ndim={t.ndim}")
    if not np.all(np.isfinite(t)):
        raise DataError("tensor contains non-finite entries")
    factors = []
    for mode in (1, 2, 3):
        u, _, _ = np.linalg.svd(unfold(t, mode), full_matrices=False)
        factors.append(_fix_signs(u))
    core = t
    for mode, u in zip((1, 2, 3), factors):
        core = mode_n_product(core, u.T, mode)
    return TuckerFactors(core=core, factors=(factors[0], factors[1], factors[2]))


def tucker_reconstruct(f: TuckerFactors) -> np.ndarray:
    """Contract the core with the factors, modes 1 then 2 then 3."""
    t = f.core
    for mode, u in zip((1, 2, 3), f.factors):
        t = mode_n_product(t, u, mode)
    return t
