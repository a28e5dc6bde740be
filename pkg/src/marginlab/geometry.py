"""Horizon functions, the classifiers they induce, and distance to their graph.

A horizon function ``b`` maps ``[0,1]^{d-1}`` into ``[0,1]``; the classifier it
defines labels ``x`` with 1 exactly when ``b(x[:-1]) <= x[-1]``. Points are
plain arrays of shape ``(d,)`` or batches of shape ``(N, d)``; ``split_point``
separates the leading ``d-1`` coordinates from the last one.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ConsistencyError, ParameterError

DEFAULT_RESOLUTION = {2: 2.0 ** -12, 3: 2.0 ** -6}
_GUARD_TOL = 1e-9


def split_point(x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(z, x_d)`` for a point or a batch of points."""
    x = np.asarray(x, dtype=float)
    return x[..., :-1], x[..., -1]


class HorizonFunction:
    """Base class: a boundary ``b`` with its Hölder exponent and constant.

    Subclasses implement ``_evaluate`` on arrays of shape (N, d-1).
    """

    d: int
    alpha: float
    holder_constant: float

    def _evaluate(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 and self.d == 2:
            z = z.reshape(1)
        if z.shape[-1] != self.d - 1:
            raise ParameterError(f"expected trailing dimension {self.d - 1}, got {z.shape}")
        flat = z.reshape(-1, self.d - 1)
        out = np.asarray(self._evaluate(flat), dtype=float).reshape(z.shape[:-1])
        return float(out) if out.ndim == 0 else out

    @property
    def distance_constant(self) -> float:
        """Constant turning vertical gaps into distance lower bounds."""
        return distance_constant(self.alpha, self.holder_constant)


class FunctionHorizon(HorizonFunction):
    """Wrap a vectorised callable ``fn(z) -> values`` with declared (alpha, K)."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], d: int,
                 alpha: float = 1.0, holder_constant: float = 0.0):
        _check_common(d, alpha, holder_constant)
        self.fn = fn
        self.d = d
        self.alpha = float(alpha)
        self.holder_constant = float(holder_constant)

    def _evaluate(self, z):
        return self.fn(z)


def _check_common(d, alpha, K):
    if int(d) != d or d < 2:
        raise ParameterError("d must be an integer >= 2")
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    if K < 0:
        raise ParameterError("Hölder constant must be nonnegative")


def distance_constant(alpha: float, K: float) -> float:
    if alpha == 1:
        return math.sqrt(1.0 + K * K)
    return max(2.0 ** alpha, 2.0 * K)


def _batch(b: HorizonFunction, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[-1] != b.d:
        raise ParameterError(f"point dimension {x2.shape[-1]} does not match d={b.d}")
    return x2, single


def classify(b: HorizonFunction, x):
    """Label 1 iff ``b(z) <= x_d`` (ties go to 1)."""
    x2, single = _batch(b, x)
    labels = (b(x2[:, :-1]) <= x2[:, -1]).astype(np.int8)
    return int(labels[0]) if single else labels


def vertical_gap(b: HorizonFunction, x) -> np.ndarray:
    x2, single = _batch(b, x)
    gap = np.abs(x2[:, -1] - b(x2[:, :-1]))
    return float(gap[0]) if single else gap


def boundary_distance_bounds(b: HorizonFunction, x):
    """Analytic sandwich ``(lower, upper)`` for the distance to the graph of ``b``."""
    gap = np.asarray(vertical_gap(b, x))
    lower = (gap / b.distance_constant) ** (1.0 / b.alpha)
    if gap.ndim == 0:
        return float(lower), float(gap)
    return lower, gap


def _window_minimum(b, z, xd, radius, res):
    """Grid search in the window ``|z' - z|_inf <= radius`` for a batch of points."""
    k = z.shape[1]
    steps = int(math.ceil(float(radius.max()) / res))
    offsets_1d = np.arange(-steps, steps + 1) * res
    if k == 1:
        offsets = offsets_1d[:, None]
    else:
        grids = np.meshgrid(*([offsets_1d] * k), indexing="ij")
        offsets = np.stack([g.ravel() for g in grids], axis=1)
    cand = np.clip(z[:, None, :] + offsets[None, :, :], 0.0, 1.0)
    vals = b(cand.reshape(-1, k)).reshape(cand.shape[:2])
    d2 = np.sum((cand - z[:, None, :]) ** 2, axis=2) + (vals - xd[:, None]) ** 2
    idx = np.argmin(d2, axis=1)
    rows = np.arange(len(z))
    return cand[rows, idx], d2[rows, idx]


def _refine(b, z, xd, start, best, res, sweeps=2, iters=30):
    """Coordinate-wise golden-section search in a box of half-width ``res``."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    cur = start.copy()
    k = z.shape[1]

    def dist2(c):
        return np.sum((c - z) ** 2, axis=1) + (b(c) - xd) ** 2

    for _ in range(sweeps):
        for axis in range(k):
            lo = np.clip(cur[:, axis] - res, 0.0, 1.0)
            hi = np.clip(cur[:, axis] + res, 0.0, 1.0)
            c1 = cur.copy()
            c2 = cur.copy()
            for _ in range(iters):
                a1 = hi - gr * (hi - lo)
                a2 = lo + gr * (hi - lo)
                c1[:, axis] = a1
                c2[:, axis] = a2
                left = dist2(c1) < dist2(c2)
                hi = np.where(left, a2, hi)
                lo = np.where(left, lo, a1)
            trial = cur.copy()
            trial[:, axis] = (lo + hi) / 2.0
            val = dist2(trial)
            better = val < best
            cur[better] = trial[better]
            best = np.where(better, val, best)
    return best


def numeric_boundary_distance(b: HorizonFunction, x, resolution: float | None = None,
                              refine: bool = True, max_cells: int = 2_000_000):
    """Euclidean distance from ``x`` to the graph of ``b`` over the unit cube.

    Grid search over ``z'`` at the given resolution inside the window allowed
    by the vertical gap, followed by local golden-section refinement. The
    result is checked against :func:`boundary_distance_bounds`.
    """
    if resolution is not None and resolution <= 0:
        raise ParameterError("resolution must be positive")
    x2, single = _batch(b, x)
    res = resolution or DEFAULT_RESOLUTION.get(b.d, 2.0 ** -6)
    z, xd = x2[:, :-1], x2[:, -1]
    gap = np.abs(xd - b(z))
    out = gap.copy()
    todo = np.flatnonzero(gap > 0)
    todo = todo[np.argsort(gap[todo], kind="stable")]
    k = b.d - 1
    pos = 0
    while pos < len(todo):
        # grow the chunk while the candidate matrix stays within budget
        end = pos + 1
        while end < len(todo):
            width = (2 * int(math.ceil(gap[todo[end]] / res)) + 1) ** k
            if (end - pos + 1) * width > max_cells:
                break
            end += 1
        idx = todo[pos:end]
        cand, best = _window_minimum(b, z[idx], xd[idx], gap[idx], res)
        if refine:
            best = _refine(b, z[idx], xd[idx], cand, best, res)
        out[idx] = np.sqrt(np.minimum(best, gap[idx] ** 2))
        pos = end
    lower = (gap / b.distance_constant) ** (1.0 / b.alpha)
    bad = out < lower - _GUARD_TOL
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ConsistencyError(
            f"numeric distance {out[i]!r} below analytic lower bound {lower[i]!r} at {x2[i]}")
    return float(out[0]) if single else out


def empirical_holder_modulus(b: HorizonFunction, alpha: float, pairs: int = 4096,
                             rng: np.random.Generator | None = None,
                             lines: int = 8, line_step: float = 2.0 ** -12) -> float:
    """Largest observed ``|b(z) - b(w)| / |z - w|^alpha`` over sampled pairs.

    Pairs come from three sources: uniform random pairs, random pairs at
    geometrically shrinking separations, and consecutive points along dense
    axis-parallel lines (these catch steep spots such as bump flanks).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    k = b.d - 1
    best = 0.0

    def ratios(z, w):
        dist = np.linalg.norm(z - w, axis=1)
        ok = dist > 0
        num = np.abs(b(z[ok]) - b(w[ok]))
        return float(np.max(num / dist[ok] ** alpha)) if np.any(ok) else 0.0

    z = rng.random((pairs, k))
    w = rng.random((pairs, k))
    best = max(best, ratios(z, w))
    for scale in 2.0 ** -np.arange(2, 17, 2):
        z = rng.random((pairs // 4 + 1, k))
        step = rng.normal(size=z.shape)
        step *= scale / np.linalg.norm(step, axis=1, keepdims=True)
        w = np.clip(z + step, 0.0, 1.0)
        best = max(best, ratios(z, w))
    grid = np.arange(0.0, 1.0 + line_step / 2, line_step)
    for _ in range(lines):
        base = rng.random(k)
        for axis in range(k):
            pts = np.repeat(base[None, :], len(grid), axis=0)
            pts[:, axis] = grid
            best = max(best, ratios(pts[:-1], pts[1:]))
    return best
