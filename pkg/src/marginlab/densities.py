"""The hard-instance density, its normaliser, and an exact sampler.

Around the perturbed boundary ``b_theta`` sits a band ``R`` of height
``4C`` (from ``b0 - C`` to ``b0 + 3C``). Inside ``R`` the density is a power
law in the vertical distance to ``b_theta`` (the tube) topped by a flat
shoulder; outside ``R`` it is a constant chosen so the total mass is 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache
from pathlib import Path

import numpy as np

from .construction import PerturbedFamily, ThetaVector
from .errors import ConsistencyError, NumericError, ParameterError
from .geometry import classify

REJECTION_CAP = 10_000


class RegionTag(IntEnum):
    TUBE = 0
    SHOULDER = 1
    OUTSIDE = 2


def column_mass(C: float, p, gt: float):
    """Mass of R above a point whose perturbation is ``p``: tube plus shoulder."""
    p = np.asarray(p, dtype=float)
    return (C + p) ** gt / gt + np.maximum(C - p, 0.0) ** gt


@lru_cache(maxsize=256)
def active_cell_mass(family: PerturbedFamily) -> float:
    """Mass of R over one cell whose bump is switched on."""
    C, gt = family.C, family.gamma_tilde
    if gt == 1:
        integral = 2.0 * C * 2.0 ** (family.d - 1)
    else:
        integral = family.profile.cube_integral(lambda phi: column_mass(C, C * np.asarray(phi), gt))
    return integral / float(family.M) ** (family.d - 1)


def inactive_cell_mass(family: PerturbedFamily) -> float:
    C, gt = family.C, family.gamma_tilde
    return C ** gt * (1.0 / gt + 1.0) / family.m


class HardInstance:
    """One pair (h_theta, mu_theta): a family, a vertex theta, and the density.

    ``eta`` are the reference weights on the two labels; they only enter the
    joint density of (x, y).
    """

    def __init__(self, family: PerturbedFamily, theta: ThetaVector,
                 eta: tuple[float, float] = (0.5, 0.5)):
        family.check_theta(theta)
        if min(eta) <= 0:
            raise ParameterError("label reference weights must be positive")
        self.family = family
        self.theta = theta
        self.eta = (float(eta[0]), float(eta[1]))
        self.gamma_tilde = family.gamma_tilde
        self.C = family.C
        self.horizon = family.horizon(theta)
        active = theta.array.astype(bool)
        self.cell_masses = np.where(active, active_cell_mass(family), inactive_cell_mass(family))
        self.p_R = float(np.sum(self.cell_masses))
        C = self.C
        self.normalizer = (1.0 - self.p_R) / (1.0 - 4.0 * C)
        self.p_out = 1.0 - self.p_R
        lo, hi = normalizer_bracket(C)
        tol = 1e-12
        if not lo - tol <= self.normalizer <= hi + tol:
            raise ConsistencyError(
                f"normaliser {self.normalizer} outside [{lo}, {hi}]")

    @property
    def d(self):
        return self.family.d

    def descriptor(self) -> dict:
        out = self.family.descriptor(self.theta)
        out.update(eta=list(self.eta), normalizer=self.normalizer, p_R=self.p_R,
                   p_out=self.p_out)
        return out

    # -- pointwise pieces ---------------------------------------------------

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if x2.shape[1] != self.d:
            raise ParameterError(f"points must have dimension {self.d}")
        z, xd = x2[:, :-1], x2[:, -1]
        b0 = self.family.baseline(z)
        p = self.family.perturbation(self.theta, z)
        return single, xd, b0, p

    def _regions(self, xd, b0, p):
        C = self.C
        tube = np.abs(xd - (b0 + p)) <= C + p
        shoulder = ~tube & (xd > b0 + C + 2 * p) & (xd <= b0 + 3 * C)
        return tube, shoulder

    def region_of(self, x):
        single, xd, b0, p = self._parts(x)
        tube, shoulder = self._regions(xd, b0, p)
        tags = np.full(len(xd), int(RegionTag.OUTSIDE), dtype=np.int8)
        tags[shoulder] = int(RegionTag.SHOULDER)
        tags[tube] = int(RegionTag.TUBE)
        return RegionTag(int(tags[0])) if single else tags

    def density(self, x):
        single, xd, b0, p = self._parts(x)
        tube, shoulder = self._regions(xd, b0, p)
        gt, C = self.gamma_tilde, self.C
        out = np.full(len(xd), self.normalizer)
        if gt == 1:
            out[tube | shoulder] = 0.5
        else:
            out[tube] = 0.5 * np.abs(xd[tube] - (b0[tube] + p[tube])) ** (gt - 1)
            out[shoulder] = 0.5 * (C - p[shoulder]) ** (gt - 1)
        return float(out[0]) if single else out

    def labels(self, x):
        return classify(self.horizon, x)

    def joint_density(self, x, y):
        """Density of (x, y) against Lebesgue x eta: ``f(x) 1{y = h(x)} / eta(y)``."""
        f = np.asarray(self.density(x))
        h = np.asarray(self.labels(x))
        y = np.asarray(y)
        eta = np.where(y == 1, self.eta[1], self.eta[0])
        out = np.where(h == y, f / eta, 0.0)
        return float(out) if out.ndim == 0 else out

    # -- sampling -----------------------------------------------------------

    def sample(self, N: int, rng: np.random.Generator) -> np.ndarray:
        """``N`` exact draws from mu_theta, shape (N, d)."""
        if N < 0:
            raise ParameterError("N must be nonnegative")
        d, k, C, gt = self.d, self.d - 1, self.C, self.gamma_tilde
        fam = self.family
        out = np.empty((N, d))
        in_R = rng.random(N) < self.p_R
        n_out = int(N - in_R.sum())

        # outside R: uniform on the complement of the band
        z = rng.random((n_out, k))
        b0 = fam.baseline(z) if n_out else np.empty(0)
        below = b0 - C
        t = rng.random(n_out) * (1.0 - 4.0 * C)
        xd = np.where(t < below, t, 1.0 - (t - below))
        out[~in_R] = np.column_stack([z, xd])

        # inside R: cell from the mass table, then z within the cell
        n_in = N - n_out
        cells = rng.choice(fam.m, size=n_in, p=self.cell_masses / self.p_R)
        v = fam.partition.odd_vectors[cells]
        u = rng.uniform(-1.0, 1.0, size=(n_in, k))
        active = self.theta.array[cells] == 1
        if np.any(active) and gt != 1:
            cap = max(column_mass(C, 0.0, gt), column_mass(C, C, gt))
            todo = np.flatnonzero(active)
            for _ in range(REJECTION_CAP):
                phi = fam.profile(u[todo])
                accept = rng.random(len(todo)) * cap <= column_mass(C, C * phi, gt)
                todo = todo[~accept]
                if len(todo) == 0:
                    break
                u[todo] = rng.uniform(-1.0, 1.0, size=(len(todo), k))
            else:
                raise NumericError("in-cell rejection exceeded its iteration cap")
        z = (v + u) / fam.M
        b0 = fam.baseline(z)
        p = np.where(active, C * fam.profile(u), 0.0)
        a = C + p
        w_tube = a ** gt / gt
        w_sh = (C - p) ** gt
        tube = rng.random(n_in) * (w_tube + w_sh) < w_tube
        sign = np.where(rng.random(n_in) < 0.5, -1.0, 1.0)
        radius = a * rng.random(n_in) ** (1.0 / gt)
        u_sh = rng.random(n_in)
        xd = np.where(tube, b0 + p + sign * radius,
                      b0 + 3 * C - 2 * (C - p) * u_sh)
        out[in_R] = np.column_stack([z, xd])
        return out

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample(1, rng)[0]


def normalizer_bracket(C: float) -> tuple[float, float]:
    return (1.0 - 2.0 * C) / (1.0 - 4.0 * C), 1.0 / (1.0 - 4.0 * C)


def make_instance(family, theta, eta=(0.5, 0.5)) -> HardInstance:
    return HardInstance(family, theta, eta)


def region_of(instance: HardInstance, x):
    return instance.region_of(x)


def density_eval(instance: HardInstance, x):
    return instance.density(x)


def normalizing_constant(instance: HardInstance) -> float:
    return instance.normalizer


def sample_point(instance: HardInstance, rng) -> np.ndarray:
    return instance.sample_point(rng)


# ---------------------------------------------------------------------------
# labelled samples


@dataclass
class LabeledSample:
    points: np.ndarray
    labels: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.points.ndim != 2 or len(self.points) != len(self.labels):
            raise ParameterError("points must be (n, d) with one label per row")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def write_csv(self, path, comments: dict | None = None) -> Path:
        """Rows ``x1,...,xd,y`` with 17 significant digits; ``#`` lines hold provenance."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {**self.provenance, **(comments or {})}
        with path.open("w", newline="") as fh:
            for key in sorted(meta):
                fh.write(f"# {key}: {meta[key]}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x{i + 1}" for i in range(self.d)] + ["y"])
            for row, y in zip(self.points, self.labels):
                writer.writerow([format(v, ".17g") for v in row] + [int(y)])
        return path

    @classmethod
    def read_csv(cls, path) -> "LabeledSample":
        meta, rows = {}, []
        with Path(path).open() as fh:
            lines = [ln for ln in fh]
        body = []
        for ln in lines:
            if ln.startswith("#"):
                key, _, val = ln[1:].strip().partition(": ")
                meta[key] = val
            else:
                body.append(ln)
        reader = csv.reader(body)
        header = next(reader)
        if header[-1] != "y":
            raise ParameterError("sample file must end with a y column")
        for row in reader:
            rows.append([float(v) for v in row])
        arr = np.array(rows, dtype=float).reshape(-1, len(header))
        return cls(arr[:, :-1], arr[:, -1].astype(np.int8), meta)


def sample_labeled(instance: HardInstance, n: int, rng: np.random.Generator,
                   provenance: dict | None = None) -> LabeledSample:
    if n < 1:
        raise ParameterError("sample size must be at least 1")
    pts = instance.sample(n, rng)
    return LabeledSample(pts, instance.labels(pts), dict(provenance or {}))
