"""Grid partition, localized bumps and the finite family of perturbed boundaries.

The unit cube ``[0,1]^{d-1}`` is cut into ``m = (M/2)^{d-1}`` cells of side
``2/M`` centred at ``v_j / M`` with ``v_j`` odd. Each cell carries one bump
``phi(M z - v_j)`` and a binary vector ``theta`` switches bumps on:
``b_theta = b0 + amplitude * sum_j theta_j phi_j``.

Cell indices are 0-based and follow the lexicographic order of the odd
vectors (first coordinate most significant).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from scipy import optimize, special
from scipy.stats import qmc

from . import quadrature
from .errors import ParameterError
from .geometry import HorizonFunction, empirical_holder_modulus
from .reports import CheckReport, parse_number

# ---------------------------------------------------------------------------
# one-dimensional bumps


def standard_bump(x):
    """``exp(1 - 1/(1 - x^2))`` on (-1, 1), zero elsewhere; peak value 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out if out.ndim else float(out)


def standard_bump_derivative(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = -2.0 * xi / (1.0 - xi * xi) ** 2 * np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out if out.ndim else float(out)


PLATEAU_INNER = 0.5
PLATEAU_OUTER = 0.9


def _smooth_zero(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def plateau_bump(x):
    """Smooth bump equal to 1 on [-1/2, 1/2] and 0 outside (-0.9, 0.9).

    With ``h(t) = exp(-1/t)`` for ``t > 0`` and ``w = 0.4`` the transition is
    ``h(s) / (h(s) + h(1 - s))`` where ``s = (0.9 - |x|) / w``.
    """
    x = np.asarray(x, dtype=float)
    t = np.abs(x)
    w = PLATEAU_OUTER - PLATEAU_INNER
    a = _smooth_zero((PLATEAU_OUTER - t) / w)
    b = _smooth_zero((t - PLATEAU_INNER) / w)
    out = np.where(t <= PLATEAU_INNER, 1.0, a / np.where(a + b > 0, a + b, 1.0))
    return out if out.ndim else float(out)


def plateau_bump_derivative(x):
    x = np.asarray(x, dtype=float)
    t = np.abs(x)
    w = PLATEAU_OUTER - PLATEAU_INNER
    out = np.zeros_like(t)
    mid = (t > PLATEAU_INNER) & (t < PLATEAU_OUTER)
    s1 = (PLATEAU_OUTER - t[mid]) / w
    s2 = (t[mid] - PLATEAU_INNER) / w
    a, b = np.exp(-1.0 / s1), np.exp(-1.0 / s2)
    da = -a / s1 ** 2 / w
    db = b / s2 ** 2 / w
    out[mid] = np.sign(x[mid]) * (da * b - a * db) / (a + b) ** 2
    return out if out.ndim else float(out)


def max_abs(fn, lo: float, hi: float, grid: int = 200_001) -> float:
    """Maximum of ``|fn|`` on [lo, hi] by a dense grid plus bounded refinement."""
    xs = np.linspace(lo, hi, grid)
    vals = np.abs(fn(xs))
    i = int(np.argmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda t: -abs(float(fn(t))), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-13})
    return max(float(vals[i]), -float(res.fun))


@lru_cache(maxsize=None)
def standard_bump_lipschitz() -> float:
    """Sup norm of the derivative of :func:`standard_bump` (about 2.17)."""
    return max_abs(standard_bump_derivative, 0.0, 1.0)


@lru_cache(maxsize=None)
def plateau_bump_lipschitz() -> float:
    return max_abs(plateau_bump_derivative, PLATEAU_INNER, PLATEAU_OUTER)


# ---------------------------------------------------------------------------
# multivariate profiles


def _unit_ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / special.gamma(k / 2 + 1)


def _sphere_area(k: int) -> float:
    return 2 * math.pi ** (k / 2) / special.gamma(k / 2)


class BumpProfile:
    """A bump on R^dim with value 1 at 0 and support inside the open unit cube."""

    tag = "abstract"
    dim: int
    alpha: float = 1.0
    K_phi: float
    C_phi: float
    support_radius: float

    def _evaluate(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if u.ndim == 0 and self.dim == 1:
            u = u.reshape(1)
        if u.shape[-1] != self.dim:
            raise ParameterError(f"profile expects trailing dimension {self.dim}")
        out = self._evaluate(u.reshape(-1, self.dim)).reshape(u.shape[:-1])
        return float(out) if out.ndim == 0 else out

    def axis_breaks(self) -> list[float]:
        """Per-axis breakpoints in [-1, 1] where the profile is not smooth."""
        r = self.support_radius
        return [-1.0, -r, 0.0, r, 1.0]

    def cube_integral(self, g, half_width: float = 1.0) -> float:
        """``∫_{[-h,h]^dim} g(phi(u)) du`` for a vectorised ``g``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"tag": self.tag, "dim": self.dim, "alpha": self.alpha}

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(sorted(self.to_dict().items())))


def _box_integral(profile: BumpProfile, g, h: float, order: int = 16, panels: int = 4) -> float:
    breaks = [b * 1.0 for b in profile.axis_breaks() if -h < b < h] + [-h, h]
    nodes, weights = quadrature.box_rule([breaks] * profile.dim, order, panels)
    return float(np.dot(weights, g(profile(nodes))))


class SupNormBump(BumpProfile):
    """``phi(u) = psi(2 |u|_inf)`` with the standard bump ``psi``."""

    tag = "supnorm_bump"

    def __init__(self, dim: int, alpha: float = 1.0):
        self.dim = int(dim)
        self.alpha = float(alpha)
        self.K_phi = max(1.0, 2.0 * standard_bump_lipschitz())
        self.C_phi = self.K_phi
        self.support_radius = 0.5

    def _evaluate(self, u):
        return standard_bump(2.0 * np.max(np.abs(u), axis=1))

    def cube_integral(self, g, half_width=1.0):
        k, h = self.dim, float(half_width)
        top = min(h, 0.5)
        # the sup-norm sphere of radius t has (k-1)-volume k 2^k t^(k-1)
        val = quadrature.quad(
            lambda t: float(g(standard_bump(2.0 * t))) * k * 2.0 ** k * t ** (k - 1), 0.0, top)
        return val + float(g(0.0)) * ((2 * h) ** k - (2 * top) ** k)


class ParaboloidBump(BumpProfile):
    """``phi(u) = (1 - 4 |u|_2^2)_+``."""

    tag = "paraboloid"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.alpha = 1.0
        self.K_phi = 4.0
        self.C_phi = 4.0 * math.sqrt(self.dim)
        self.support_radius = 0.5

    def _evaluate(self, u):
        return np.maximum(1.0 - 4.0 * np.sum(u * u, axis=1), 0.0)

    def cube_integral(self, g, half_width=1.0):
        k, h = self.dim, float(half_width)
        if k == 1:
            return 2.0 * quadrature.quad(lambda t: float(g(max(1 - 4 * t * t, 0.0))), 0.0, h,
                                         points=[0.5])
        if h >= 0.5:
            radial = quadrature.quad(
                lambda t: float(g(1 - 4 * t * t)) * _sphere_area(k) * t ** (k - 1), 0.0, 0.5)
            return radial + float(g(0.0)) * ((2 * h) ** k - _unit_ball_volume(k) * 0.5 ** k)
        if h * math.sqrt(k) <= 0.5:
            return _box_integral(self, g, h)
        return _box_integral(self, g, h, order=24, panels=16)


class ProductPlateauBump(BumpProfile):
    """``phi(u) = prod_i psi(u_i)`` with a one-dimensional plateau bump ``psi``."""

    tag = "product_plateau"

    def __init__(self, dim: int, factor=plateau_bump, factor_lipschitz: float | None = None):
        self.dim = int(dim)
        self.alpha = 1.0
        self.factor = factor
        lip = plateau_bump_lipschitz() if factor_lipschitz is None else factor_lipschitz
        self.factor_lipschitz = lip
        self.K_phi = math.sqrt(self.dim) * lip
        self.C_phi = 2.0
        self.support_radius = PLATEAU_OUTER

    def _evaluate(self, u):
        return np.prod(self.factor(u), axis=1)

    def axis_breaks(self):
        return [-1.0, -PLATEAU_OUTER, -PLATEAU_INNER, PLATEAU_INNER, PLATEAU_OUTER, 1.0]

    def cube_integral(self, g, half_width=1.0):
        h = float(half_width)
        if self.dim == 1:
            return quadrature.quad(lambda t: float(g(self.factor(t))), -h, h,
                                   points=self.axis_breaks())
        return _box_integral(self, g, h)


PROFILES = {cls.tag: cls for cls in (SupNormBump, ParaboloidBump, ProductPlateauBump)}


def profile_from_dict(data: dict) -> BumpProfile:
    cls = PROFILES.get(data["tag"])
    if cls is None:
        raise ParameterError(f"unknown profile tag {data['tag']!r}")
    if cls is SupNormBump:
        return cls(data["dim"], data.get("alpha", 1.0))
    return cls(data["dim"])


# ---------------------------------------------------------------------------
# baselines


class Baseline(HorizonFunction):
    """Unperturbed boundary b0 with an analytic Hölder constant."""

    tag = "abstract"
    fourier_moment: float | None = None

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"tag": self.tag, "d": self.d, **self.params()}

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))


class ConstantBaseline(Baseline):
    tag = "constant"

    def __init__(self, d: int, value: float = 0.5, alpha: float = 1.0):
        self.d, self.value, self.alpha = int(d), float(value), float(alpha)
        self.holder_constant = 0.0
        self.fourier_moment = 0.0

    def params(self):
        return {"value": self.value, "alpha": self.alpha}

    def _evaluate(self, z):
        return np.full(len(z), self.value)


class AbsPowerBaseline(Baseline):
    """``offset + scale * |z - 1/2|_2^exponent`` (Hölder with exponent alpha <= exponent)."""

    tag = "abs_power"

    def __init__(self, d: int, offset: float = 0.38, scale: float = 0.3,
                 exponent: float = 0.4, alpha: float | None = None):
        self.d = int(d)
        self.offset, self.scale, self.exponent = float(offset), float(scale), float(exponent)
        self.alpha = float(exponent if alpha is None else alpha)
        if not 0 < self.alpha <= self.exponent <= 1:
            raise ParameterError("need 0 < alpha <= exponent <= 1")
        diam = math.sqrt(self.d - 1)
        self.holder_constant = self.scale * diam ** (self.exponent - self.alpha)

    def params(self):
        return {"offset": self.offset, "scale": self.scale, "exponent": self.exponent,
                "alpha": self.alpha}

    def _evaluate(self, z):
        return self.offset + self.scale * np.linalg.norm(z - 0.5, axis=1) ** self.exponent


class QuadraticBaseline(Baseline):
    """Convex baseline ``1/4 + |z - 1/2|_2^2 / (d - 1)``."""

    tag = "quadratic"

    def __init__(self, d: int):
        self.d = int(d)
        self.alpha = 1.0
        # gradient 2 (z - 1/2)/(d-1) has norm at most 1/sqrt(d-1) on the cube
        self.holder_constant = 1.0 / math.sqrt(self.d - 1)

    def _evaluate(self, z):
        return 0.25 + np.sum((z - 0.5) ** 2, axis=1) / (self.d - 1)


SINUSOID_TERMS = ((0.6, 12.0, "sin"), (0.3, 22.0, "cos"), (0.2, 34.0, "sin"))


class SinusoidBaseline(Baseline):
    """``1/2 + 0.15 (0.6 sin 12πz + 0.3 cos 22πz + 0.2 sin 34πz)`` on [0, 1] (d = 2)."""

    tag = "sinusoid"

    def __init__(self, d: int = 2, offset: float = 0.5, amplitude: float = 0.15):
        if d != 2:
            raise ParameterError("the sinusoid baseline is defined for d = 2 only")
        self.d, self.alpha = 2, 1.0
        self.offset, self.amplitude = float(offset), float(amplitude)
        # each term a*trig(wπz) has derivative bound and first Fourier moment a*w*π
        self.holder_constant = self.amplitude * sum(a * w * math.pi for a, w, _ in SINUSOID_TERMS)
        self.fourier_moment = self.holder_constant

    def params(self):
        return {"offset": self.offset, "amplitude": self.amplitude}

    def _evaluate(self, z):
        t = z[:, 0]
        acc = np.zeros_like(t)
        for a, w, kind in SINUSOID_TERMS:
            acc += a * (np.sin if kind == "sin" else np.cos)(w * math.pi * t)
        return self.offset + self.amplitude * acc


BASELINES = {cls.tag: cls for cls in
             (ConstantBaseline, AbsPowerBaseline, QuadraticBaseline, SinusoidBaseline)}


def baseline_from_dict(data: dict) -> Baseline:
    data = dict(data)
    cls = BASELINES.get(data.pop("tag", None))
    if cls is None:
        raise ParameterError("unknown baseline tag")
    return cls(**data)


# ---------------------------------------------------------------------------
# partition and binary vectors


@dataclass(frozen=True)
class GridPartition:
    """Cells ``Q_j = prod [(v_j - 1)/M, (v_j + 1)/M]`` for odd vectors ``v_j``."""

    d: int
    M: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ParameterError("d must be an integer >= 2")
        if int(self.M) != self.M or self.M < 2 or self.M % 2:
            raise ParameterError(f"M must be an even integer >= 2, got {self.M}")

    @property
    def s(self) -> int:
        return self.M // 2

    @property
    def m(self) -> int:
        return self.s ** (self.d - 1)

    @cached_property
    def odd_vectors(self) -> np.ndarray:
        vs = np.array(list(itertools.product(range(1, self.M, 2), repeat=self.d - 1)),
                      dtype=np.int64)
        vs.setflags(write=False)
        return vs

    def cell(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of cell ``j``."""
        self._check_index(j)
        v = self.odd_vectors[j]
        return (v - 1) / self.M, (v + 1) / self.M

    def center(self, j: int) -> np.ndarray:
        self._check_index(j)
        return self.odd_vectors[j] / self.M

    def contains(self, j: int, z) -> np.ndarray:
        self._check_index(j)
        z = np.asarray(z, dtype=float)
        # compare in grid units so faces are exact
        return np.max(np.abs(self.M * z - self.odd_vectors[j]), axis=-1) <= 1.0

    def locate(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Cell index and local coordinate ``M z - v_j`` for each row of ``z``.

        Points on shared faces go to the lower-indexed neighbour along each
        axis except at the upper edge of the cube.
        """
        z = np.asarray(z, dtype=float).reshape(-1, self.d - 1)
        k = np.clip(np.floor(z * self.s).astype(np.int64), 0, self.s - 1)
        u = self.M * z - (2 * k + 1)
        j = np.ravel_multi_index(tuple(k.T), (self.s,) * (self.d - 1))
        return j, u

    def _check_index(self, j):
        if not 0 <= int(j) < self.m:
            raise ParameterError(f"cell index {j} out of range [0, {self.m})")


def build_partition(d: int, M: int) -> GridPartition:
    return GridPartition(d, M)


@dataclass(frozen=True)
class ThetaVector:
    """A vertex of the hypercube {0,1}^m."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ParameterError("theta bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, m):
        return cls((0,) * m)

    @classmethod
    def ones(cls, m):
        return cls((1,) * m)

    @classmethod
    def unit(cls, m, j):
        if not 0 <= j < m:
            raise ParameterError("unit index out of range")
        return cls(tuple(int(i == j) for i in range(m)))

    @classmethod
    def from_string(cls, text: str):
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ParameterError(f"theta must be a bit string, got {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def from_index(cls, index: int, m: int):
        if not 0 <= index < 2 ** m:
            raise ParameterError("theta index out of range")
        return cls(tuple((index >> j) & 1 for j in range(m)))

    @classmethod
    def random(cls, m, rng: np.random.Generator):
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=m)))

    @property
    def m(self) -> int:
        return len(self.bits)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)

    @property
    def index(self) -> int:
        """Integer whose binary digit ``j`` is ``bits[j]``."""
        return sum(b << j for j, b in enumerate(self.bits))

    @property
    def active(self) -> int:
        return sum(self.bits)

    def __str__(self):
        return "".join(map(str, self.bits))

    def differing(self, other: "ThetaVector") -> list[int]:
        if self.m != other.m:
            raise ParameterError("theta lengths differ")
        return [j for j, (a, b) in enumerate(zip(self.bits, other.bits)) if a != b]

    def hamming(self, other: "ThetaVector") -> int:
        return len(self.differing(other))


# ---------------------------------------------------------------------------
# the family


class PerturbedHorizon(HorizonFunction):
    """``b_theta`` as a horizon function (carries the uniform constant K_Theta)."""

    def __init__(self, family: "PerturbedFamily", theta: ThetaVector):
        family.check_theta(theta)
        self.family, self.theta = family, theta
        self.d = family.d
        self.alpha = family.alpha
        self.holder_constant = family.K_theta

    def _evaluate(self, z):
        return self.family.b_theta(self.theta, z)


@dataclass(frozen=True, eq=False)
class PerturbedFamily:
    """``{b0 + amplitude * sum_j theta_j phi_j : theta in {0,1}^m}``."""

    partition: GridPartition
    profile: BumpProfile
    baseline: Baseline
    amplitude: Fraction | float
    gamma: float
    alpha: float = 1.0
    class_tag: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ParameterError("amplitude must be positive")
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must lie in (0, 1]")
        if self.gamma < self.alpha:
            raise ParameterError("gamma must be at least alpha")
        if self.profile.dim != self.partition.d - 1 or self.baseline.d != self.partition.d:
            raise ParameterError("profile/baseline dimension mismatch")

    d = property(lambda self: self.partition.d)
    M = property(lambda self: self.partition.M)
    m = property(lambda self: self.partition.m)

    @property
    def C(self) -> float:
        return float(self.amplitude)

    @property
    def gamma_tilde(self) -> float:
        return self.gamma / self.alpha

    @property
    def K_theta(self) -> float:
        return self.baseline.holder_constant + self.profile.K_phi / 2.0

    @property
    def r(self) -> float:
        return min(1.0, (2.0 * self.profile.C_phi) ** (-1.0 / self.alpha))

    def check_theta(self, theta: ThetaVector):
        if theta.m != self.m:
            raise ParameterError(f"theta has length {theta.m}, family needs {self.m}")

    def local_bump(self, j: int, z) -> np.ndarray:
        """``phi(M z - v_j)`` for 0-based cell index ``j``."""
        self.partition._check_index(j)
        z = np.asarray(z, dtype=float)
        return self.profile(self.M * z - self.partition.odd_vectors[j])

    def perturbation(self, theta: ThetaVector, z) -> np.ndarray:
        """``amplitude * theta_j * phi_j(z)`` using the cell that contains ``z``."""
        self.check_theta(theta)
        j, u = self.partition.locate(z)
        bits = theta.array[j]
        out = np.zeros(len(j))
        on = bits == 1
        if np.any(on):
            out[on] = self.C * self.profile(u[on])
        return out

    def b_theta(self, theta: ThetaVector, z):
        z2 = np.asarray(z, dtype=float).reshape(-1, self.d - 1)
        return self.baseline(z2) + self.perturbation(theta, z2)

    def horizon(self, theta: ThetaVector) -> PerturbedHorizon:
        return PerturbedHorizon(self, theta)

    # -- serialisation ------------------------------------------------------

    def descriptor(self, theta: ThetaVector | None = None) -> dict:
        out = {
            "class": self.class_tag,
            "d": self.d,
            "M": self.M,
            "gamma": self.gamma,
            "gamma_tilde": self.gamma_tilde,
            "alpha": self.alpha,
            "amplitude": self.amplitude,
            "baseline": self.baseline.to_dict(),
            "profile": self.profile.to_dict(),
        }
        if theta is not None:
            self.check_theta(theta)
            out["theta"] = str(theta)
        return out

    @classmethod
    def from_descriptor(cls, data: dict):
        """Rebuild ``(family, theta_or_None)`` from :meth:`descriptor` output."""
        family = cls(
            partition=GridPartition(int(data["d"]), int(data["M"])),
            profile=profile_from_dict(data["profile"]),
            baseline=baseline_from_dict(data["baseline"]),
            amplitude=parse_number(data["amplitude"]),
            gamma=data["gamma"],
            alpha=data["alpha"],
            class_tag=data["class"],
        )
        theta = ThetaVector.from_string(data["theta"]) if data.get("theta") else None
        return family, theta


# ---------------------------------------------------------------------------
# validation


@dataclass
class ConstructionReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def by_name(self, name: str) -> CheckReport:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def probe_points(partition: GridPartition, budget: int, seed: int = 0) -> np.ndarray:
    """Scrambled Sobol points plus every cell centre and every grid corner."""
    k = partition.d - 1
    sob = qmc.Sobol(d=k, scramble=True, seed=seed).random(max(budget, 2))
    ticks = np.arange(0, partition.M + 1, 2) / partition.M
    corners = np.array(list(itertools.product(ticks, repeat=k)))
    centers = partition.odd_vectors / partition.M
    return np.vstack([sob, corners, centers])


def validate_construction(family: PerturbedFamily, probes: int = 4096,
                          seed: int = 0) -> ConstructionReport:
    """Check the structural requirements of the family on deterministic probes."""
    rng = np.random.default_rng(seed)
    part, prof = family.partition, family.profile
    C = family.C
    pts = probe_points(part, probes, seed)
    checks = []

    amp_bound = family.M ** (-family.alpha) / 4.0
    checks.append(CheckReport("amplitude", C, amp_bound, slack=1e-15 * amp_bound,
                              budget=1, seed=seed))

    b0 = family.baseline(pts)
    checks.append(CheckReport("baseline_lower", float(b0.min()), C, relation="ge",
                              slack=1e-15, budget=len(pts), seed=seed))
    checks.append(CheckReport("baseline_upper", float(b0.max()), 1.0 - 3.0 * C,
                              slack=1e-15, budget=len(pts), seed=seed))

    cells = range(part.m) if part.m <= 4096 else rng.choice(part.m, 4096, replace=False)
    count = np.zeros(len(pts), dtype=np.int64)
    for j in cells:
        count += family.local_bump(int(j), pts) > 0
    overlap = int(count.max())
    checks.append(CheckReport("support_disjoint", overlap, 1, budget=len(pts), seed=seed))

    u = rng.uniform(-1.2, 1.2, size=(probes, prof.dim))
    u = np.vstack([u, np.zeros((1, prof.dim))])
    vals = prof(u)
    sup = np.max(np.abs(u), axis=1)
    viol = [abs(float(prof(np.zeros(prof.dim))) - 1.0),
            float(np.max(-vals)), float(np.max(vals - 1.0)),
            float(np.max(np.where(sup >= 1.0, np.abs(vals), 0.0))),
            float(np.max(np.abs(vals - 1.0) - prof.C_phi * sup ** prof.alpha))]
    checks.append(CheckReport("profile_properties", max(viol), 0.0, slack=1e-12,
                              budget=len(u), seed=seed, details={"violations": viol}))

    r = family.r
    near = rng.uniform(-r, r, size=(probes, prof.dim))
    checks.append(CheckReport("profile_half_on_r_ball", float(np.min(prof(near))), 0.5,
                              relation="ge", budget=probes, seed=seed, details={"r": r}))

    thetas = [ThetaVector.zeros(part.m), ThetaVector.ones(part.m)]
    thetas += [ThetaVector.random(part.m, rng) for _ in range(3)]
    moduli = [empirical_holder_modulus(family.horizon(t), family.alpha,
                                       pairs=max(probes // 4, 64), rng=rng) for t in thetas]
    checks.append(CheckReport("holder_modulus", max(moduli), family.K_theta,
                              slack=1e-9 * max(1.0, family.K_theta), budget=len(thetas),
                              seed=seed, details={"moduli": moduli}))
    return ConstructionReport(checks)
