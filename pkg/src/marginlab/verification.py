"""Numerical checks of the inequalities the lower-bound argument relies on.

Integrals over the cube use a tensor rule: composite Gauss-Legendre in the
first d-1 coordinates with breakpoints at cell faces and profile kinks, and
in x_d a piecewise rule split at every place the density changes formula.
Monte Carlo is used where quadrature is impractical (margin masses, d >= 3).
"""
from __future__ import annotations

import math

import numpy as np
from scipy import stats

from . import quadrature
from .classes import barron_constants, fourier_1d_fast
from .construction import PerturbedFamily, ProductPlateauBump, ThetaVector
from .densities import HardInstance, normalizer_bracket
from .errors import NumericError, ParameterError
from .geometry import HorizonFunction, empirical_holder_modulus, numeric_boundary_distance
from .reports import CheckReport

QUAD_TOL = 1e-8


# ---------------------------------------------------------------------------
# generic integration


def mc_integrate(integrand, N: int, rng: np.random.Generator, domain=None):
    """Monte Carlo mean of ``integrand`` with its standard error.

    ``domain`` is a HardInstance (draws from its measure), a pair of corner
    arrays ``(lo, hi)`` (uniform draws scaled by the volume), or an integer
    dimension meaning the unit cube.
    """
    if N < 100:
        raise ParameterError("Monte Carlo needs at least 100 draws")
    if isinstance(domain, HardInstance):
        pts = domain.sample(N, rng)
        scale = 1.0
    else:
        if isinstance(domain, int):
            lo, hi = np.zeros(domain), np.ones(domain)
        else:
            lo, hi = (np.asarray(a, dtype=float) for a in domain)
        pts = lo + (hi - lo) * rng.random((N, len(lo)))
        scale = float(np.prod(hi - lo))
    vals = np.asarray(integrand(pts), dtype=float) * scale
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite integrand value")
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N))


def outer_rule(family: PerturbedFamily, panels: int = 4, order: int = 12,
               extra_breaks=()) -> tuple[np.ndarray, np.ndarray]:
    """Rule over [0,1]^(d-1) with breakpoints at cell faces and profile kinks."""
    odd = np.arange(1, family.M, 2)
    rel = np.asarray(family.profile.axis_breaks())
    breaks = np.unique(np.concatenate([((odd[:, None] + rel[None, :]) / family.M).ravel(),
                                       np.clip(np.asarray(extra_breaks, float), 0, 1),
                                       [0.0, 1.0]]))
    return quadrature.box_rule([breaks] * (family.d - 1), order, panels)


def column_breaks(instances, z) -> np.ndarray:
    """Per-z x_d breakpoints where any of the given densities changes formula."""
    fam = instances[0].family
    C = fam.C
    b0 = fam.baseline(z)
    cols = [np.zeros(len(z)), np.ones(len(z)), b0 - C, b0 + 3 * C]
    for inst in instances:
        p = fam.perturbation(inst.theta, z)
        cols += [b0 + p, b0 + C + 2 * p]
    return np.sort(np.clip(np.column_stack(cols), 0.0, 1.0), axis=1)


def _inner_settings(gt: float, order: int | None):
    if float(gt).is_integer():
        return max(order or 8, int(gt) + 2), 0
    return order or 10, 10


def instance_rule(instances, panels=4, order=12, inner_order=None, extra_breaks=(),
                  extra_column=None):
    """Points and weights covering the cube, adapted to the given instances."""
    gt = instances[0].gamma_tilde
    io, grading = _inner_settings(gt, inner_order)
    z, wz = outer_rule(instances[0].family, panels, order, extra_breaks)
    br = column_breaks(instances, z)
    if extra_column is not None:
        br = np.sort(np.column_stack([br, np.broadcast_to(extra_column, (len(z), len(extra_column)))]),
                     axis=1)
    return quadrature.column_rule(z, wz, br, io, grading)


def quad_mass(instance: HardInstance, panels: int = 4, order: int = 12):
    """``∫ f_theta`` by quadrature with a refinement-based error estimate."""
    vals = []
    for p in (panels, 2 * panels):
        pts, w = instance_rule([instance], p, order)
        vals.append(float(np.dot(w, instance.density(pts))))
    return vals[1], abs(vals[1] - vals[0])


def check_normalization(instance: HardInstance, N: int = 200_000, seed: int = 0,
                        tol: float | None = None) -> CheckReport:
    """``|∫ f - 1|`` by quadrature (d = 2) or uniform Monte Carlo (d >= 3)."""
    lo, hi = normalizer_bracket(instance.C)
    details = {"normalizer": instance.normalizer, "bracket": [lo, hi],
               "in_bracket": lo - 1e-12 <= instance.normalizer <= hi + 1e-12}
    if instance.d == 2:
        mass, err = quad_mass(instance)
        details.update(method="quadrature", mass=mass)
        rep = CheckReport("normalization", abs(mass - 1.0), tol or 1e-6, error=err,
                          slack=0.0, budget=None, seed=None, details=details)
    else:
        rng = np.random.default_rng(seed)
        mass, se = mc_integrate(instance.density, N, rng, instance.d)
        details.update(method="monte_carlo", mass=mass)
        rep = CheckReport("normalization", abs(mass - 1.0), tol or 1e-3, error=se,
                          slack=3 * se, budget=N, seed=seed, details=details)
    if not details["in_bracket"]:
        rep.status = "fail"
    return rep


# ---------------------------------------------------------------------------
# margin condition


def margin_constants(instance: HardInstance) -> tuple[float, float]:
    """Small-epsilon constant and the global fallback constant of the margin bound."""
    C, gt = instance.C, instance.gamma_tilde
    Kt = instance.horizon.distance_constant
    small = Kt ** gt
    big = small + (0.5 * C ** (gt - 1) + 1.0 / (1.0 - 4.0 * C)) * (C / Kt) ** (-gt)
    return small, big


def margin_masses(instance: HardInstance, epsilons, N: int, rng: np.random.Generator,
                  resolution: float | None = None):
    """Monte Carlo estimates of ``mu(dist(x, boundary) <= eps)`` and their standard errors."""
    eps = np.asarray(epsilons, dtype=float)
    x = instance.sample(N, rng)
    b = instance.horizon
    z, xd = x[:, :-1], x[:, -1]
    gap = np.abs(xd - b(z))
    lower = (gap / b.distance_constant) ** (1.0 / b.alpha)
    dist = np.full(N, np.inf)
    dist[gap <= eps.min()] = gap[gap <= eps.min()]
    amb = (gap > eps.min()) & (lower <= eps.max())
    if np.any(amb):
        dist[amb] = numeric_boundary_distance(b, x[amb], resolution)
    hits = dist[:, None] <= eps[None, :]
    mu = hits.mean(axis=0)
    se = np.sqrt(np.maximum(mu * (1 - mu), 0.0) / N)
    return mu, se, int(amb.sum())


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def check_margin(instance: HardInstance, epsilons=None, N: int = 100_000, seed: int = 0,
                 constant: str = "proof", resolution: float | None = None) -> CheckReport:
    """``mu(B_eps) <= C_margin eps^gamma`` on a grid of eps, with 3-se slack.

    ``constant="proof"`` uses the small-eps constant where it applies and the
    global constant elsewhere; ``constant="small"`` uses the small-eps
    constant throughout. The reported value is the largest
    ``mu_hat - bound - 3 se`` over the grid (pass iff it is <= 0).
    """
    fam = instance.family
    if epsilons is None:
        epsilons = np.geomspace(fam.C / 10, fam.C, 10)
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0) or np.any(eps > 1):
        raise ParameterError("epsilons must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    mu, se, n_amb = margin_masses(instance, eps, N, rng, resolution)
    small, big = margin_constants(instance)
    Kt = instance.horizon.distance_constant
    use_small = (Kt * eps ** fam.alpha <= fam.C) | (constant == "small")
    const = np.where(use_small, small, big)
    bound = const * eps ** fam.gamma
    excess = mu - bound - 3 * se
    details = {
        "epsilons": eps.tolist(), "mu_hat": mu.tolist(), "se": se.tolist(),
        "bounds": bound.tolist(), "constant_small": small, "constant_global": big,
        "K_tilde": Kt, "slope": loglog_slope(eps, mu), "gamma": fam.gamma,
        "numeric_distances": n_amb, "constant_rule": constant,
    }
    return CheckReport("margin", float(excess.max()), 0.0, error=float(se.max()),
                       budget=N, seed=seed, details=details)


# ---------------------------------------------------------------------------
# pairwise bounds and Hellinger tensorisation


def tensorize_hellinger(rho2: float, n: int) -> float:
    """Squared Hellinger distance between n-fold products: ``2(1 - (1 - rho2/2)^n)``."""
    if not 0 <= rho2 <= 2 + 1e-12:
        raise ParameterError("squared Hellinger distance must lie in [0, 2]")
    return 2.0 * (1.0 - (1.0 - rho2 / 2.0) ** n)


def pairwise_bounds(family: PerturbedFamily, n: int) -> dict:
    C, gt, M, d = family.C, family.gamma_tilde, family.M, family.d
    base = C ** gt * float(M) ** (-(d - 1))
    return {"l1": 2 ** (gt + 3) * base, "disagreement": 2 ** (gt + 1) * base,
            "hellinger": 2 ** (gt + 4) * n * base}


def pairwise_integrals(family, theta, theta_prime, panels=4, order=12):
    i1, i2 = HardInstance(family, theta), HardInstance(family, theta_prime)
    pts, w = instance_rule([i1, i2], panels, order)
    f, g = i1.density(pts), i2.density(pts)
    agree = i1.labels(pts) == i2.labels(pts)
    sf, sg = np.sqrt(f), np.sqrt(g)
    return {
        "l1": float(np.dot(w, np.abs(f - g))),
        "disagreement": float(np.dot(w, np.where(agree, 0.0, f + g))),
        "rho2": float(np.dot(w, np.where(agree, (sf - sg) ** 2, f + g))),
        "bhattacharyya": float(np.dot(w, np.where(agree, sf * sg, 0.0))),
        "mass_theta": float(np.dot(w, f)),
        "mass_theta_prime": float(np.dot(w, g)),
    }


def check_pairwise_bounds(family: PerturbedFamily, theta: ThetaVector,
                          theta_prime: ThetaVector, n: int, panels: int = 4,
                          order: int = 12, tol: float = QUAD_TOL):
    """L1, disagreement-mass and tensorised Hellinger bounds for Hamming neighbours.

    Returns three CheckReports. The Hellinger report also carries the
    Bhattacharyya route ``2(1 - BC^n)`` for the n-fold product, which must agree
    with the tensorisation formula.
    """
    if theta.hamming(theta_prime) != 1:
        raise ParameterError("pairwise bounds need Hamming distance exactly 1")
    if n < 1:
        raise ParameterError("n must be positive")
    coarse = pairwise_integrals(family, theta, theta_prime, panels, order)
    fine = pairwise_integrals(family, theta, theta_prime, 2 * panels, order)
    err = {k: abs(fine[k] - coarse[k]) for k in fine}
    bounds = pairwise_bounds(family, n)
    rho2 = min(max(fine["rho2"], 0.0), 2.0)
    tens = tensorize_hellinger(rho2, n)
    via_bc = 2.0 * (1.0 - fine["bhattacharyya"] ** n)
    common = {"theta": str(theta), "theta_prime": str(theta_prime), "n": n,
              "panels": 2 * panels, "order": order}
    reports = (
        CheckReport("pairwise_l1", fine["l1"], bounds["l1"], error=err["l1"], slack=tol,
                    details=dict(common)),
        CheckReport("pairwise_disagreement", fine["disagreement"], bounds["disagreement"],
                    error=err["disagreement"], slack=tol, details=dict(common)),
        CheckReport("pairwise_hellinger", tens, bounds["hellinger"], error=n * err["rho2"],
                    slack=tol, details={**common, "rho2_single": rho2,
                                        "bhattacharyya": fine["bhattacharyya"],
                                        "tensorized_via_bhattacharyya": via_bc,
                                        "tensorization_gap": abs(tens - via_bc),
                                        "n_rho2": n * rho2,
                                        "masses": [fine["mass_theta"], fine["mass_theta_prime"]]}),
    )
    return reports


# ---------------------------------------------------------------------------
# Hölder modulus and Fourier moment


def check_holder_modulus(b: HorizonFunction, alpha: float, K: float, pairs: int = 4096,
                         seed: int = 0) -> CheckReport:
    if K <= 0:
        raise ParameterError("K must be positive")
    rng = np.random.default_rng(seed)
    mod = empirical_holder_modulus(b, alpha, pairs, rng)
    return CheckReport("holder_modulus", mod, K, slack=1e-9 * K, budget=pairs, seed=seed,
                       details={"alpha": alpha})


def fourier_moment_perturbation(family: PerturbedFamily, theta: ThetaVector,
                                radius: float | None = None, step: float = 0.05):
    """``∫ |xi| |F_1(xi)| d xi`` (per unit amplitude) on a truncated grid, and its tail bound.

    Works in the rescaled frequency ``eta = xi / 2π`` where the sum over
    active cells is ``s_theta(eta) = sum_j theta_j exp(-2πi v_j eta / M)``.
    """
    if family.d != 2:
        raise ParameterError("Fourier moments are computed for d = 2 only")
    prof = family.profile
    if not isinstance(prof, ProductPlateauBump):
        raise ParameterError("Fourier moments need the product plateau profile")
    M = family.M
    R = 200.0 * M if radius is None else float(radius)
    eta = np.arange(0.0, R + step / 2, step)
    active = np.flatnonzero(theta.array)
    C_d, _ = barron_constants(family.d)
    if len(active) == 0:
        return 0.0, 0.0
    ft = np.abs(fourier_1d_fast(prof.factor, eta / M, support=1.0))
    v = family.partition.odd_vectors[active, 0]
    s = np.zeros(len(eta), dtype=complex)
    for vj in v:
        s += np.exp(-2j * math.pi * vj * eta / M)
    integrand = eta * ft * np.abs(s)
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    half = float(trapezoid(integrand, eta))
    moment = 2 * math.pi / M * 2.0 * half
    a = R / M
    tail = 4 * math.pi * M * len(active) * C_d * (1 / (1 + a) - 1 / (2 * (1 + a) ** 2))
    return moment, tail


def check_barron_moment(family: PerturbedFamily, theta: ThetaVector, C: float,
                        radius: float | None = None, step: float = 0.05) -> CheckReport:
    """First Fourier moment of ``b_theta`` against the Barron budget ``C``.

    Passes when the truncated moment plus the analytic tail allowance is at
    most ``C``; a tail above 10% of ``C`` makes the report inconclusive.
    """
    family.check_theta(theta)
    base = family.baseline.fourier_moment
    if base is None:
        raise ParameterError("baseline Fourier moment unknown")
    per_unit, tail_unit = fourier_moment_perturbation(family, theta, radius, step)
    moment = base + family.C * per_unit
    tail = family.C * tail_unit
    rep = CheckReport("barron_moment", moment + tail, C, error=tail,
                      details={"moment": moment, "baseline_moment": base, "tail": tail,
                               "radius": 200.0 * family.M if radius is None else radius,
                               "step": step, "theta": str(theta)})
    if tail > 0.1 * C:
        rep.status = "inconclusive"
    return rep


# ---------------------------------------------------------------------------
# sampler goodness of fit


def grid_probabilities(instance: HardInstance, bins: int = 32, panels: int = 2,
                       order: int = 8) -> np.ndarray:
    """Probability of each cell of a ``bins x bins`` grid (d = 2) by quadrature."""
    if instance.d != 2:
        raise ParameterError("grid probabilities are implemented for d = 2")
    lines = np.linspace(0.0, 1.0, bins + 1)
    pts, w = instance_rule([instance], panels, order, extra_breaks=lines,
                           extra_column=lines)
    ix = np.clip((pts[:, 0] * bins).astype(int), 0, bins - 1)
    iy = np.clip((pts[:, 1] * bins).astype(int), 0, bins - 1)
    probs = np.zeros((bins, bins))
    np.add.at(probs, (ix, iy), w * instance.density(pts))
    return probs


def check_sampler_chi2(instance: HardInstance, N: int = 100_000, bins: int = 32,
                       seed: int = 0, alpha_level: float = 1e-3) -> CheckReport:
    rng = np.random.default_rng(seed)
    probs = grid_probabilities(instance, bins)
    x = instance.sample(N, rng)
    counts, _, _ = np.histogram2d(x[:, 0], x[:, 1], bins=bins, range=[[0, 1], [0, 1]])
    exp = probs.ravel() * N
    obs = counts.ravel()
    big = exp >= 5
    exp_m = np.append(exp[big], exp[~big].sum())
    obs_m = np.append(obs[big], obs[~big].sum())
    keep = exp_m > 0
    exp_m = exp_m[keep] * obs_m[keep].sum() / exp_m[keep].sum()
    stat, pval = stats.chisquare(obs_m[keep], exp_m)
    return CheckReport("sampler_chi2", float(pval), alpha_level, relation="ge", budget=N,
                       seed=seed, details={"statistic": float(stat), "bins": int(keep.sum()),
                                           "prob_total": float(probs.sum())})
