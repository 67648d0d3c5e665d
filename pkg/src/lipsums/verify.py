"""Invariant suite for the explicit constructions (embeddings and bump maps)."""

from __future__ import annotations

import math

import numpy as np

from . import rng
from .geometry import embedded_basis, equiangular_embedding, separation_check
from .lipfun import (
    SQRT2,
    McShaneScalar,
    NormFunctional,
    RayBump,
    SectorBump,
    finite_data_quotient,
    lip_constant_lower_mc,
)
from .spaces import INF, VectorTuple, lp, min_gain, operator_norm


def _check(passed, **fields) -> dict:
    return {"passed": bool(passed), **fields}


def sector_samples(f: SectorBump, count: int, seed: int) -> np.ndarray:
    """Points concentrated in and around the sectors (plus a spread-out fraction)."""
    g = rng.generator(seed, rng.PAIRS, 7)
    X = f.X
    n = len(f.centers)
    j = g.integers(0, n, count)
    z = g.standard_normal((count, X.dim))
    z /= X.norms(z)[:, None]
    radius = g.uniform(0.0, 0.9, count)
    t = np.exp(g.uniform(math.log(1e-2), math.log(1e2), count))
    pts = t[:, None] * (f.centers.vectors[j] + radius[:, None] * z)
    spread = count // 10
    pts[:spread] = 3.0 * g.standard_normal((spread, X.dim))
    return pts


def verify_constructions(eps: float = 0.05, N: int = 64, samples: int = 100_000,
                         lip_samples: int = 20_000, seed: int = 0) -> dict:
    """Run every construction invariant; returns ``{"checks": {...}, "all_passed": bool}``."""
    checks = {}
    g = rng.generator(seed, rng.SEARCH, 99)

    # closed-form equiangular embeddings
    for n_rows in sorted({6, N}):
        E = equiangular_embedding(n_rows)
        closed = 1.0 / math.cos(math.pi / (2 * n_rows))
        on, mg = operator_norm(E.map), min_gain(E.map)
        checks[f"equiangular_{n_rows}_norm"] = _check(
            abs(E.norm_upper - closed) <= 1e-12 and abs(on.value - closed) <= 1e-12,
            value=E.norm_upper, expected=closed, operator_norm=on.value)
        checks[f"equiangular_{n_rows}_gain"] = _check(
            abs(mg.value - 1.0) <= 1e-12, value=mg.value, expected=1.0)
    E = equiangular_embedding(N)
    sep = separation_check(E, trials=10_000, seed=seed)
    checks["separation"] = _check(sep.min_ratio >= 1 - 1e-9, min_ratio=sep.min_ratio,
                                  trials=sep.trials, witness=sep.witness)

    # sector bump on the equiangular centers, targets e_1, e_2 of l_1^2
    X = E.target
    Y = lp(1, 2)
    centers = embedded_basis(E)
    targets = VectorTuple(Y, np.eye(2))
    scales = np.exp(g.uniform(-2.0, 2.0, 2))
    f = SectorBump(centers, targets, scales)
    interp = f(centers.vectors * scales[:, None])
    err = float(np.max(np.abs(interp - scales[:, None] * targets.vectors)))
    checks["sector_interpolation"] = _check(err <= 1e-12, max_error=err)
    checks["sector_zero"] = _check(np.all(f(np.zeros(X.dim)) == 0.0))
    pts = sector_samples(f, samples, seed)
    counts = (f.bumps(pts) > 0).sum(axis=1)
    checks["sector_disjointness"] = _check(
        counts.max() <= 1, samples=int(samples), max_active=int(counts.max()),
        inside=int((counts == 1).sum()))
    lo = lip_constant_lower_mc(f, lip_samples, seed=seed)
    checks["sector_lipschitz"] = _check(lo.value <= SQRT2 + 1e-9 and lo.value >= 1.0,
                                        value=lo.value, bound=SQRT2)

    # ray bump: needs ||T|| <= 1 + eps for the stated eps
    E6 = equiangular_embedding(6)
    ray_E = E6 if E6.norm_upper <= 1 + eps else equiangular_embedding(
        max(2, math.ceil(math.pi / (2 * math.acos(1 / (1 + eps))))))
    y = VectorTuple(Y, np.diag(np.exp(g.uniform(-1.0, 1.0, 2))))
    rc = embedded_basis(ray_E, y.norms())
    h = RayBump(rc, y, eps)
    hom = max(float(np.max(np.abs(h(t * rc.vectors) - t * y.vectors))) for t in (0.1, 1.0, 10.0))
    checks["ray_homogeneity"] = _check(hom <= 1e-12, max_error=hom)
    checks["ray_zero"] = _check(np.all(h(np.zeros(ray_E.target.dim)) == 0.0))
    lo = lip_constant_lower_mc(h, lip_samples, seed=seed)
    checks["ray_lipschitz"] = _check(lo.value <= h.lip_upper() + 1e-9, value=lo.value,
                                     bound=h.lip_upper())

    # norm functional and scalar McShane extension
    nf = NormFunctional(X, Y, Y.unit(0))
    lo = lip_constant_lower_mc(nf, lip_samples, seed=seed)
    checks["norm_functional_lipschitz"] = _check(lo.value <= 1.0 + 1e-9, value=lo.value, bound=1.0)
    pts = VectorTuple(lp(INF, 2), g.standard_normal((5, 2)))
    vals = g.standard_normal(5)
    q = finite_data_quotient(VectorTuple(pts.space, np.vstack([pts.vectors, np.zeros(2)])),
                             np.append(vals, 0.0))
    m = McShaneScalar(pts, vals, q, Y)
    repro = float(np.max(np.abs(m.scalar(pts.vectors) - vals)))
    checks["mcshane_reproduces_data"] = _check(repro <= 1e-12, max_error=repro, L=q)
    lo = lip_constant_lower_mc(m, lip_samples, seed=seed)
    checks["mcshane_lipschitz"] = _check(lo.value <= q + 1e-9, value=lo.value, bound=q)

    return {"checks": checks, "all_passed": all(c["passed"] for c in checks.values())}
