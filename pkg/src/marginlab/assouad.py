"""Test regions, the projection estimator and the hypercube lower bound.

Inside each cell, the region ``E_j`` is a small box around the bump peak
times a vertical band that lies above ``b0`` but below ``b0 + C phi_j``. On
``E_j`` the label is 1 when bump ``j`` is off and 0 when it is on, so any
predictor can be turned into a guess of ``theta`` region by region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .classes import PlannedParameters, _feasible
from .construction import PerturbedFamily, ThetaVector
from .errors import ConsistencyError, NumericError, ParameterError
from .geometry import classify
from .reports import CheckReport
from .rng import substream

BAND_LOW = 0.5
BAND_HIGH = 0.75


@dataclass(frozen=True)
class ERegion:
    j: int
    center: np.ndarray
    half_width: float
    measure: float
    lower_bound: float

    def to_dict(self):
        return {"j": self.j, "center": self.center.tolist(), "half_width": self.half_width,
                "measure": self.measure, "lower_bound": self.lower_bound}


def e_region_lower_bound(family: PerturbedFamily) -> float:
    return (2 * family.r) ** (family.d - 1) * family.C * float(family.M) ** (-(family.d - 1)) / 8


def build_e_regions(family: PerturbedFamily) -> list[ERegion]:
    """One region per cell with its Lebesgue measure by quadrature."""
    r, M, d, C = family.r, family.M, family.d, family.C
    measure = (C * (BAND_HIGH - BAND_LOW) * float(M) ** (-(d - 1))
               * family.profile.cube_integral(lambda phi: np.asarray(phi, dtype=float), r))
    lower = e_region_lower_bound(family)
    if measure < lower * (1 - 1e-12):
        raise ConsistencyError(f"E-region measure {measure} below its bound {lower}")
    centers = family.partition.odd_vectors / M
    return [ERegion(j, centers[j], r / M, measure, lower) for j in range(family.m)]


def region_probes(family: PerturbedFamily, region: ERegion, count: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Uniform-in-z points of ``E_j`` with x_d uniform across the band."""
    k = family.d - 1
    z = region.center + region.half_width * rng.uniform(-1.0, 1.0, size=(count, k))
    phi = family.local_bump(region.j, z)
    lo = family.baseline(z) + family.C * phi * BAND_LOW
    xd = lo + family.C * phi * (BAND_HIGH - BAND_LOW) * rng.random(count)
    return np.column_stack([z, xd])


def _region_rule(family: PerturbedFamily, region: ERegion, order: int):
    k = family.d - 1
    h = region.half_width
    z, wz = quadrature.box_rule([[-h, h]] * k, order, 2)
    z = z + region.center
    phi = family.local_bump(region.j, z)
    lo = family.baseline(z) + family.C * phi * BAND_LOW
    width = family.C * phi * (BAND_HIGH - BAND_LOW)
    t, w = quadrature.unit_rule(order)
    xd = lo[:, None] + width[:, None] * t[None, :]
    weights = wz[:, None] * width[:, None] * w[None, :]
    pts = np.column_stack([np.repeat(z, len(t), axis=0), xd.ravel()])
    return pts, weights.ravel()


def project_estimator(predictor, family: PerturbedFamily, regions=None,
                      order: int = 8) -> ThetaVector:
    """Closest hypercube vertex to ``predictor`` on the E-regions (ties go to 0)."""
    regions = regions if regions is not None else build_e_regions(family)
    bits = []
    for reg in regions:
        pts, w = _region_rule(family, reg, order)
        p = np.asarray(predictor(pts), dtype=float)
        if not np.all(np.isfinite(p)):
            raise NumericError("predictor returned non-finite values")
        to_one = float(np.dot(w, (p - 1.0) ** 2))   # distance to the theta_j = 0 label
        to_zero = float(np.dot(w, p * p))          # distance to the theta_j = 1 label
        bits.append(1 if to_zero < to_one else 0)
    return ThetaVector(tuple(bits))


def assouad_bound(m: int, vartheta: float) -> float:
    """``(m/2)(1 - sqrt(vartheta (1 - vartheta/4)))``."""
    if m < 1:
        raise ParameterError("m must be positive")
    vartheta = float(vartheta)
    if not 0 <= vartheta < 2:
        raise ParameterError("vartheta must lie in [0, 2)")
    return m / 2.0 * (1.0 - math.sqrt(vartheta * (1.0 - vartheta / 4.0)))


def minimax_lower_bound(plan: PlannedParameters) -> float:
    """``r^(d-1) / 8^(gt+2) * C^gt`` for a feasible plan."""
    if not _feasible(plan.vartheta):
        raise ParameterError("plan violates the feasibility constraint")
    gt = plan.gamma_tilde
    return plan.r ** (plan.d - 1) / 8.0 ** (gt + 2) * plan.C ** gt


def risk_per_hamming(family: PerturbedFamily) -> float:
    """Risk guaranteed per wrongly projected coordinate."""
    gt = family.gamma_tilde
    return ((2 * family.r) ** (family.d - 1) / 8.0 ** (gt + 1) * family.C ** gt
            * float(family.M) ** (-(family.d - 1)))


def check_e_regions(family: PerturbedFamily, probes: int = 1000, thetas: int = 20,
                    seed: int = 0) -> list[CheckReport]:
    """Measure bound, label identity on probes, and exact recovery of ``h_theta``."""
    regions = build_e_regions(family)
    reports = [CheckReport("e_region_measure", min(r.measure for r in regions),
                           regions[0].lower_bound, relation="ge",
                           details={"measure": regions[0].measure})]
    bad = 0
    for th in (ThetaVector.zeros(family.m), ThetaVector.ones(family.m)):
        h = family.horizon(th)
        for reg in regions:
            pts = region_probes(family, reg, probes, substream(seed, "e-probe", reg.j))
            bad += int(np.sum(classify(h, pts) != 1 - th.bits[reg.j]))
    reports.append(CheckReport("e_region_labels", bad, 0, budget=probes * family.m * 2,
                               details={"mismatches": bad}))
    rng = substream(seed, "e-project")
    wrong = 0
    for _ in range(thetas):
        th = ThetaVector.random(family.m, rng)
        h = family.horizon(th)
        if project_estimator(lambda x, h=h: classify(h, x), family, regions) != th:
            wrong += 1
    reports.append(CheckReport("e_region_projection", wrong, 0, budget=thetas,
                               details={"wrong": wrong}))
    return reports
