"""Nonlocal patch grouping over a hyperspectral cube.

Full-band s x s patches are compared by squared Euclidean distance over
all bands, grouped with their nearest neighbors inside a local window, and
stacked into an ``(s*s, L, k)`` tensor: ``stacked[:, lam, m]`` is the
column-major vectorization of member ``m``'s spatial block in band
``lam``. ``aggregate`` scatters approximated groups back with per-voxel
contribution counts so the solver can divide them out.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError, UsageError

__all__ = [
    "PatchGrid",
    "PatchGroup",
    "plan_grid",
    "match_blocks",
    "build_group",
    "aggregate",
]


@dataclass(frozen=True)
class PatchGrid:
    """Reference-anchor lattice covering the image plane."""

    patch_size: int
    step: int
    rows: tuple[int, ...]
    cols: tuple[int, ...]

    @property
    def anchors(self) -> list[tuple[int, int]]:
        return [(r, c) for r in self.rows for c in self.cols]


@dataclass(frozen=True)
class PatchGroup:
    """One nonlocal group: member anchors plus the stacked tensor."""

    anchor: tuple[int, int]
    members: tuple[tuple[int, int], ...]
    stacked: np.ndarray


def _axis_anchors(extent: int, s: int, step: int) -> tuple[int, ...]:
    anchors = set(range(0, extent - s + 1, step))
    anchors.add(extent - s)
    return tuple(sorted(anchors))


def plan_grid(rows: int, cols: int, s: int, step: int) -> PatchGrid:
    """Stride-``step`` anchors, last valid position always included."""
    if s < 1 or s > min(rows, cols):
        raise UsageError(f"patch size {s} invalid for {rows}x{cols} plane")
    if step < 1:
        raise UsageError(f"step must be >= 1, got {step}")
    return PatchGrid(
        patch_size=s,
        step=step,
        rows=_axis_anchors(rows, s, step),
        cols=_axis_anchors(cols, s, step),
    )


def match_blocks(
    f: np.ndarray,
    anchor: tuple[int, int],
    s: int,
    k: int,
    window: int,
    view: np.ndarray | None = None,
) -> list[tuple[int, int]]:
    """Anchor plus its k-1 nearest patches inside the search window.

    Candidates are every valid anchor whose row and column lie within
    +-window of ``anchor``; ties break in row-major candidate order. If
    fewer than ``k`` candidates exist, the selection repeats cyclically.
    ``view`` may pass a precomputed ``sliding_window_view(f, (s, s),
    axis=(0, 1))`` to amortize the windowing across anchors.
    """
    f = np.asarray(f, dtype=np.float64)
    rows, cols, _ = f.shape
    ar, ac = anchor
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if window < 0:
        raise UsageError(f"window must be >= 0, got {window}")
    if not (0 <= ar <= rows - s and 0 <= ac <= cols - s):
        raise UsageError(f"anchor {anchor} out of range for patch size {s}")
    if view is None:
        view = sliding_window_view(f, (s, s), axis=(0, 1))  # (R, C, L, s, s)
    r0, r1 = max(0, ar - window), min(rows - s, ar + window)
    c0, c1 = max(0, ac - window), min(cols - s, ac + window)
    ref = view[ar, ac]
    diff = view[r0 : r1 + 1, c0 : c1 + 1] - ref
    dist = np.einsum("rclij,rclij->rc", diff, diff)
    coords = [
        (r, c)
        for r in range(r0, r1 + 1)
        for c in range(c0, c1 + 1)
        if (r, c) != (ar, ac)
    ]
    dvals = np.array([dist[r - r0, c - c0] for (r, c) in coords])
    order = np.argsort(dvals, kind="stable")
    members = [anchor] + [coords[i] for i in order[: k - 1]]
    if len(members) < k:
        base = list(members)
        while len(members) < k:
            members.append(base[len(members) % len(base)])
    return members


def build_group(f: np.ndarray, members: list[tuple[int, int]], s: int) -> PatchGroup:
    """Stack the members' full-band blocks into an (s*s, L, k) tensor."""
    f = np.asarray(f, dtype=np.float64)
    bands = f.shape[2]
    stacked = np.empty((s * s, bands, len(members)))
    for m, (r, c) in enumerate(members):
        stacked[:, :, m] = f[r : r + s, c : c + s, :].reshape(s * s, bands, order="F")
    return PatchGroup(anchor=tuple(members[0]), members=tuple(members), stacked=stacked)


def aggregate(
    groups: list[tuple[PatchGroup, np.ndarray]],
    dims: tuple[int, int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Scatter-add approximated groups into (sum, counts) cubes.

    ``counts`` is the number of (group, member) patches covering each
    voxel; members listed multiple times contribute multiply. Groups are
    accumulated sequentially in list order, so the result is deterministic.
    """
    total = np.zeros(dims)
    counts = np.zeros(dims)
    for group, approx in groups:
        if approx.shape != group.stacked.shape:
            raise DimensionError(
                f"approximation shape {approx.shape} != group {group.stacked.shape}"
            )
        s = int(round(np.sqrt(approx.shape[0])))
        bands = approx.shape[1]
        for m, (r, c) in enumerate(group.members):
            block = approx[:, :, m].reshape(s, s, bands, order="F")
            total[r : r + s, c : c + s, :] += block
            counts[r : r + s, c : c + s, :] += 1.0
    return total, counts
