"""Shared integration rules.

Composite Gauss-Legendre rules with user breakpoints, geometric grading toward
interval ends (for algebraic endpoint behaviour), tensor-product box rules, and
a vectorised column integrator for integrands of the form g(z, x_d) whose
x_d-breakpoints depend on z.
"""
from __future__ import annotations

import itertools
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import NumericError


@lru_cache(maxsize=None)
def _unit_gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def unit_rule(order: int, panels: int = 1, grading: int = 0,
              ratio: float = 0.15) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1].

    ``panels`` equal panels, each additionally split geometrically toward
    both of its ends ``grading`` times when ``grading > 0``.
    """
    t, w = _unit_gauss(order)
    if grading > 0:
        half = [ratio ** k / 2.0 for k in range(grading, -1, -1)]
        left = np.array([0.0] + half)
        edges = np.unique(np.concatenate([left, 1.0 - left[::-1]]))
    else:
        edges = np.array([0.0, 1.0])
    edges = np.unique(np.concatenate([(edges[None, :] + k) / panels
                                      for k in range(panels)]).ravel())
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo[:, None] + (hi - lo)[:, None] * t[None, :]).ravel()
    weights = ((hi - lo)[:, None] * w[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def piecewise_rule(breaks, order: int = 16, panels: int = 1,
                   grading: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule over consecutive breakpoints (zero-length pieces dropped)."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    t, w = unit_rule(order, panels, grading)
    lo, hi = breaks[:-1], breaks[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    nodes = (lo[:, None] + (hi - lo)[:, None] * t[None, :]).ravel()
    weights = ((hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, weights


def box_rule(axis_breaks, order: int = 16, panels: int = 1,
             grading: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Tensor product of :func:`piecewise_rule` along each axis.

    Returns nodes of shape (N, k) and weights of shape (N,).
    """
    rules = [piecewise_rule(b, order, panels, grading) for b in axis_breaks]
    if len(rules) == 1:
        return rules[0][0][:, None], rules[0][1]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def quad(fn, a: float, b: float, points=None, epsabs: float = 1e-14,
         epsrel: float = 1e-12, limit: int = 200) -> float:
    """scipy.integrate.quad that raises NumericError instead of warning."""
    if b <= a:
        return 0.0
    pts = None
    if points is not None:
        pts = sorted(p for p in points if a < p < b) or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, a, b, points=pts, epsabs=epsabs,
                                    epsrel=epsrel, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"quadrature did not converge on [{a}, {b}]: {exc}") from exc
    if not np.isfinite(val):
        raise NumericError("quadrature returned a non-finite value")
    return float(val)


def column_integrate(z, z_weights, breaks, fn, order: int = 8,
                     grading: int = 0, chunk: int = 4096) -> float:
    """Integrate ``fn`` over {(z, x_d)} with per-z breakpoints in x_d.

    ``z`` has shape (Nz, k), ``breaks`` shape (Nz, B) with every row sorted
    and spanning the x_d range. ``fn(z_rep, xd)`` receives flattened arrays
    of matching length and returns integrand values.
    """
    z = np.asarray(z, dtype=float)
    breaks = np.asarray(breaks, dtype=float)
    t, w = unit_rule(order, 1, grading)
    total = 0.0
    for start in range(0, len(z), chunk):
        zc = z[start:start + chunk]
        bc = breaks[start:start + chunk]
        lo, hi = bc[:, :-1], bc[:, 1:]
        width = np.maximum(hi - lo, 0.0)
        xd = lo[..., None] + width[..., None] * t
        zrep = np.broadcast_to(zc[:, None, None, :], xd.shape + (zc.shape[1],))
        vals = np.asarray(fn(zrep.reshape(-1, zc.shape[1]), xd.ravel()), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericError("non-finite integrand value")
        vals = vals.reshape(xd.shape)
        inner = np.sum(vals * w * width[..., None], axis=(1, 2))
        total += float(np.dot(z_weights[start:start + chunk], inner))
    return total


def cube_corners(k: int) -> np.ndarray:
    """All 2^k vertices of [0, 1]^k."""
    return np.array(list(itertools.product((0.0, 1.0), repeat=k)))


def column_rule(z, z_weights, breaks, order: int = 8, grading: int = 0):
    """Expand outer nodes ``z`` into (points, weights) over x_d columns.

    Each row of ``breaks`` (sorted, shape (Nz, B)) splits its column into
    pieces integrated with an ``order``-point rule; returns points of shape
    (P, k + 1) and weights of shape (P,).
    """
    z = np.asarray(z, dtype=float)
    breaks = np.asarray(breaks, dtype=float)
    t, w = unit_rule(order, 1, grading)
    lo, hi = breaks[:, :-1], breaks[:, 1:]
    width = np.maximum(hi - lo, 0.0)
    xd = lo[..., None] + width[..., None] * t
    weights = np.asarray(z_weights)[:, None, None] * width[..., None] * w
    zrep = np.broadcast_to(z[:, None, None, :], xd.shape + (z.shape[1],))
    keep = (weights > 0).ravel()
    pts = np.concatenate([zrep.reshape(-1, z.shape[1]), xd.reshape(-1, 1)], axis=1)
    return pts[keep], weights.ravel()[keep]
