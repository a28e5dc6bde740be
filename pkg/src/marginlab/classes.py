"""Parameter schedules for the Hölder, Barron and convex-Lipschitz classes.

Each schedule picks the grid size ``M`` and bump amplitude from ``(d, gamma,
n)`` so that the hypercube of perturbed boundaries stays statistically hard
to tell apart from ``n`` samples, and records the resulting lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import quadrature
from .construction import (AbsPowerBaseline, Baseline, BumpProfile, ConstantBaseline,
                           GridPartition, ParaboloidBump, PerturbedFamily,
                           ProductPlateauBump, QuadraticBaseline, SinusoidBaseline,
                           SupNormBump, probe_points)
from .errors import NumericError, ParameterError, PlanningError

KINDS = ("holder", "barron", "convex")
SCHWARTZ_SAFETY = 1.1
SCHWARTZ_XI_MAX = 200.0
SCHWARTZ_STEP = 0.05
SCHWARTZ_MAX_D = 3  # the grid has (4001)^(d-1) points
_MAX_M = 1 << 20


@dataclass(frozen=True)
class ClassSpec:
    """Function class of the boundary plus the margin exponent ``gamma``.

    ``alpha`` is the Hölder exponent (fixed to 1 for Barron and convex) and
    ``C`` the Fourier-moment budget of the Barron class.
    """

    kind: str
    gamma: float
    alpha: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"class must be one of {KINDS}, got {self.kind!r}")
        if not 0 < self.alpha <= 1:
            raise ParameterError("alpha must lie in (0, 1]")
        if self.kind != "holder" and self.alpha != 1:
            raise ParameterError(f"{self.kind} class has alpha = 1")
        if self.gamma < self.alpha:
            raise ParameterError("gamma must be at least alpha")
        if self.kind != "holder" and self.gamma < 1:
            raise ParameterError(f"{self.kind} class needs gamma >= 1")
        if self.C <= 0:
            raise ParameterError("C must be positive")

    @classmethod
    def holder(cls, alpha: float = 1.0, gamma: float = 1.0):
        return cls("holder", gamma, alpha)

    @classmethod
    def barron(cls, C: float = 1.0, gamma: float = 1.0):
        return cls("barron", gamma, 1.0, C)

    @classmethod
    def convex(cls, gamma: float = 1.0):
        return cls("convex", gamma)

    @property
    def gamma_tilde(self) -> float:
        return self.gamma / self.alpha

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "gamma": self.gamma, "alpha": self.alpha}
        if self.kind == "barron":
            out["C"] = self.C
        return out


# ---------------------------------------------------------------------------
# profiles and Fourier constants


def default_profile(kind: str, d: int, alpha: float = 1.0) -> BumpProfile:
    if kind == "holder":
        return SupNormBump(d - 1, alpha)
    if kind == "barron":
        return ProductPlateauBump(d - 1)
    if kind == "convex":
        return ParaboloidBump(d - 1)
    raise ParameterError(f"unknown class {kind!r}")


def profile_eval(kind: str, z):
    """Canonical bump of a class evaluated at ``z`` (shape (d-1,) or (N, d-1))."""
    z = np.asarray(z, dtype=float)
    dim = 1 if z.ndim == 0 else z.shape[-1]
    return default_profile(kind, dim + 1)(z)


def fourier_1d(factor, xi, support: float = 1.0, breaks=(), abstol: float = 1e-10):
    """``F[psi](xi) = ∫ psi(x) exp(-2πi x xi) dx`` for an even ``psi`` supported in [-support, support].

    Vector-valued adaptive Gauss-Kronrod quadrature over x (all frequencies at
    once), split at ``breaks``; raises NumericError when the estimated error
    exceeds ``abstol``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    edges = sorted({0.0, support, *[b for b in breaks if 0 < b < support]})
    omega = 2 * math.pi * xi

    def integrand(x):
        return float(factor(x)) * np.cos(omega * x)

    total = np.zeros_like(xi)
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad_vec(integrand, a, b, epsabs=1e-13, epsrel=1e-12,
                                    norm="max", limit=20000)
        total += val
        err += e
    if not np.all(np.isfinite(total)) or err > abstol:
        raise NumericError(f"Fourier quadrature did not converge (error {err})")
    return 2.0 * total


def fourier_1d_fast(factor, xi, support: float = 1.0, panels: int = 256, order: int = 16,
                    chunk: int = 2048):
    """Vectorised composite Gauss-Legendre version of :func:`fourier_1d`."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    nodes, weights = quadrature.piecewise_rule([0.0, support], order, panels)
    fw = factor(nodes) * weights
    out = np.empty_like(xi)
    for s in range(0, len(xi), chunk):
        out[s:s + chunk] = 2.0 * np.cos(2 * math.pi * np.outer(xi[s:s + chunk], nodes)) @ fw
    return out


def estimate_schwartz_constant(profile: ProductPlateauBump, d: int,
                               xi_max: float = SCHWARTZ_XI_MAX, step: float = SCHWARTZ_STEP,
                               safety: float = SCHWARTZ_SAFETY) -> float:
    """Upper estimate of ``sup |F[phi](xi)| (1 + |xi|_2)^(d+1)`` for a product bump.

    Grid maximum over ``[-xi_max, xi_max]^(d-1)`` (using evenness) times ``safety``.
    """
    if not hasattr(profile, "factor"):
        raise ParameterError("Schwartz constant needs a product profile")
    if profile.dim != d - 1:
        raise ParameterError("profile dimension does not match d")
    if d > SCHWARTZ_MAX_D:
        raise PlanningError(f"Schwartz grid search is limited to d <= {SCHWARTZ_MAX_D}")
    grid = np.arange(0.0, xi_max + step / 2, step)
    breaks = [b for b in profile.axis_breaks() if b > 0]
    ft = np.abs(fourier_1d(profile.factor, grid, support=1.0, breaks=breaks))
    if d == 2:
        best = float(np.max(ft * (1 + grid) ** (d + 1)))
    else:
        best = 0.0
        rest = np.array([1.0])
        sq_rest = np.array([0.0])
        for _ in range(d - 2):
            rest = np.outer(rest, ft).ravel()
            sq_rest = np.add.outer(sq_rest, grid ** 2).ravel()
        for i, g in enumerate(grid):
            val = ft[i] * rest * (1 + np.sqrt(g * g + sq_rest)) ** (d + 1)
            best = max(best, float(val.max()))
    return safety * best


def barron_tilde_constant(C_d: float, d: int) -> float:
    return (2.0 ** ((d + 5) / 2) * math.pi * C_d * (d - 1)
            * (1 + 3.0 ** (d - 1) * (d - 1) * math.pi ** 2 / 6))


@lru_cache(maxsize=None)
def barron_constants(d: int) -> tuple[float, float]:
    """``(C_d, C_tilde_d)`` for the canonical product plateau bump."""
    C_d = estimate_schwartz_constant(ProductPlateauBump(d - 1), d)
    return C_d, barron_tilde_constant(C_d, d)


# ---------------------------------------------------------------------------
# planning


@dataclass(frozen=True, eq=False)
class PlannedParameters:
    spec: ClassSpec
    d: int
    n: int
    M: int
    M_star: float
    amplitude: Fraction | float
    m: int
    r: float
    C_phi: float
    K_phi: float
    K_b0: float
    gamma_tilde: float
    vartheta: Fraction | float
    lower_bound: float
    rate_exponent: float
    family: PerturbedFamily
    extras: dict = field(default_factory=dict)

    @property
    def C(self) -> float:
        return float(self.amplitude)

    def to_dict(self) -> dict:
        return {
            "class_spec": self.spec.to_dict(),
            "d": self.d, "n": self.n, "M": self.M, "M_star": self.M_star,
            "amplitude": self.amplitude, "m": self.m, "r": self.r,
            "C_phi": self.C_phi, "K_phi": self.K_phi, "K_b0": self.K_b0,
            "K_theta": self.family.K_theta, "gamma_tilde": self.gamma_tilde,
            "vartheta": self.vartheta, "vartheta_float": float(self.vartheta),
            "lower_bound": self.lower_bound, "rate_exponent": self.rate_exponent,
            **self.extras,
        }


def _is_int(x: float) -> bool:
    return float(x).is_integer()


def _amplitude(spec: ClassSpec, d: int, M: int, barron_scale: float | None):
    if spec.kind == "holder":
        if spec.alpha == 1:
            return Fraction(1, 4 * M)
        return M ** (-spec.alpha) / 4.0
    if spec.kind == "convex":
        return Fraction(1, 4 * M * M * (d - 1))
    return barron_scale * M ** (-(d + 1) / 2)


def _vartheta(gt: float, n: int, C, M: int, d: int):
    if isinstance(C, Fraction) and _is_int(gt):
        g = int(gt)
        return Fraction(2) ** (g + 4) * n * C ** g / Fraction(M) ** (d - 1)
    return 2.0 ** (gt + 4) * n * float(C) ** gt * float(M) ** (-(d - 1))


def _feasible(vartheta) -> bool:
    if isinstance(vartheta, Fraction):
        return vartheta <= Fraction(1, 4)
    return vartheta <= 0.25 * (1 + 1e-12)


def rate_exponent(spec: ClassSpec, d: int) -> float:
    g = spec.gamma
    if spec.kind == "holder":
        return -g / (g + d - 1)
    if spec.kind == "barron":
        return -g / (g + 2 * (d - 1) / (d + 1))
    return -2 * g / ((d - 1) + 2 * g)


def default_baseline(spec: ClassSpec, d: int) -> Baseline:
    if spec.kind == "convex":
        return QuadraticBaseline(d)
    return ConstantBaseline(d, 0.5, spec.alpha)


def figure_baseline(spec: ClassSpec, d: int) -> Baseline:
    """Non-constant exemplar baselines (Hölder spike, Barron sinusoid)."""
    if spec.kind == "holder":
        return AbsPowerBaseline(d, 0.38, 0.3, spec.alpha, spec.alpha)
    if spec.kind == "barron":
        return SinusoidBaseline(d)
    return QuadraticBaseline(d)


def plan_parameters(spec: ClassSpec, d: int, n: int, baseline: Baseline | None = None,
                    M: int | None = None) -> PlannedParameters:
    """Choose ``M`` and the amplitude for ``(spec, d, n)`` and build the family.

    ``M`` is the smallest even integer meeting the feasibility constraint
    (exact rational arithmetic where the amplitude is rational). Passing ``M``
    forces the grid size; it must be even and feasible.
    """
    if int(d) != d or d < 2:
        raise ParameterError("d must be an integer >= 2")
    if int(n) != n or n < 1:
        raise ParameterError("n must be a positive integer")
    d, n = int(d), int(n)
    gt = spec.gamma_tilde
    g = spec.gamma
    baseline = baseline or default_baseline(spec, d)
    if baseline.d != d:
        raise ParameterError("baseline dimension mismatch")
    if spec.kind != "convex" and baseline.alpha < spec.alpha:
        raise ParameterError("baseline is rougher than the class exponent")
    profile = default_profile(spec.kind, d, spec.alpha)
    extras: dict = {}
    barron_scale = None

    if spec.kind == "holder":
        M_star = 2.0 ** ((-gt + 6) / (g + d - 1)) * n ** (1.0 / (g + d - 1))
    elif spec.kind == "convex":
        M_star = (2.0 ** (-g + 6) * (d - 1) ** (-g) * n) ** (1.0 / ((d - 1) + 2 * g))
    else:
        C_d, C_tilde = barron_constants(d)
        moment = baseline.fourier_moment
        if moment is None:
            raise ParameterError("Barron baseline needs a known Fourier moment")
        if moment > spec.C / 2:
            raise ParameterError(f"baseline moment {moment} exceeds C/2 = {spec.C / 2}")
        barron_scale = spec.C / (2.0 * C_tilde)
        p = (d + 1) * g / 2 + (d - 1)
        M_star = (2.0 ** (g + 6) * barron_scale ** g * n) ** (1.0 / p)
        extras.update(C_d=C_d, C_tilde_d=C_tilde, schwartz_safety=SCHWARTZ_SAFETY,
                      baseline_moment=moment)

    def vt(Mv):
        return _vartheta(gt, n, _amplitude(spec, d, Mv, barron_scale), Mv, d)

    if M is not None:
        if int(M) != M or M < 2 or M % 2:
            raise PlanningError(f"forced M must be an even integer >= 2, got {M}")
        M = int(M)
        if not _feasible(vt(M)):
            raise PlanningError(f"forced M={M} violates the feasibility constraint")
    else:
        M = max(2, 2 * math.ceil(M_star / 2))
        while not _feasible(vt(M)):
            M += 2
            if M > _MAX_M:
                raise PlanningError("no feasible grid size")
        while M > 2 and _feasible(vt(M - 2)):
            M -= 2

    amp = _amplitude(spec, d, M, barron_scale)
    C = float(amp)
    if C > M ** (-spec.alpha) / 4 * (1 + 1e-12):
        raise PlanningError(f"amplitude {C} exceeds M^-alpha/4 at M={M}")
    partition = GridPartition(d, M)
    b0 = baseline(probe_points(partition, 1024))
    if b0.min() < C or b0.max() > 1 - 3 * C:
        raise PlanningError("baseline leaves the admissible band [C, 1 - 3C]")

    family = PerturbedFamily(partition, profile, baseline, amp, g, spec.alpha, spec.kind)
    r = family.r
    theta = vt(M)
    lower = r ** (d - 1) / 8.0 ** (gt + 2) * C ** gt
    return PlannedParameters(
        spec=spec, d=d, n=n, M=M, M_star=M_star, amplitude=amp, m=partition.m, r=r,
        C_phi=profile.C_phi, K_phi=profile.K_phi, K_b0=baseline.holder_constant,
        gamma_tilde=gt, vartheta=theta, lower_bound=lower,
        rate_exponent=rate_exponent(spec, d), family=family, extras=extras)


# ---------------------------------------------------------------------------
# corollary rates


@dataclass(frozen=True)
class RateFormula:
    exponent: float
    constant: float
    value: float

    def to_dict(self):
        return {"exponent": self.exponent, "constant": self.constant, "value": self.value}


def rate_constant(spec: ClassSpec, d: int) -> float:
    g, gt = spec.gamma, spec.gamma_tilde
    if spec.kind == "holder":
        return 2.0 ** (-(5 * (d - 1) / spec.alpha + 13 * gt + 6))
    if spec.kind == "barron":
        _, C_tilde = barron_constants(d)
        q = spec.C / C_tilde
        p = (d + 1) * g / 2 + (d - 1)
        c_star = q ** (-g / p) + 0.5
        return (4.0 ** (-(d - 1)) / 8.0 ** (g + 2) * (q / 2) ** g
                * (2 * c_star) ** (-(d + 1) * g / 2)
                * (2.0 ** (g + 6) * (q / 2) ** g) ** (-((d + 1) * g / 2) / p))
    q = (d - 1) + 2 * g
    profile = ParaboloidBump(d - 1)
    r = min(1.0, 1.0 / (2 * profile.C_phi))
    c_star = (2.0 * (d - 1)) ** (g / q) + 0.5
    return (r ** (d - 1) * (d - 1) ** (-g) / 2.0 ** (5 * g + 6)
            * (2 * c_star) ** (-2 * g)
            * (2.0 ** (-g + 6) * (d - 1) ** (-g)) ** (-2 * g / q))


def theoretical_rate(spec: ClassSpec, d: int, n: int) -> RateFormula:
    if int(d) != d or d < 2 or n < 1:
        raise ParameterError("need d >= 2 and n >= 1")
    e = rate_exponent(spec, d)
    c = rate_constant(spec, d)
    return RateFormula(e, c, c * n ** e)
