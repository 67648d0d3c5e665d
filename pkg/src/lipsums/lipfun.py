"""Explicit Lipschitz maps ``f: X -> Y`` with ``f(0) = 0`` and Lipschitz estimation.

Every map evaluates on a single vector or on a batch (one vector per row) and
knows an analytic upper bound for its Lipschitz constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import rng
from .errors import InputError
from .spaces import NormedSpace, VectorTuple

SQRT2 = math.sqrt(2.0)
# pairs with a point this close to the origin are not sampled (ray bumps divide by ||x||)
ORIGIN_EXCLUSION = 1e-12
SEPARATION_ANGLES = 720


def _batch(space: NormedSpace, x) -> tuple[np.ndarray, bool]:
    x = space.check(x)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def _unbatch(out: np.ndarray, single: bool) -> np.ndarray:
    return out[0] if single else out


def pair_separation(centers: VectorTuple, angles: int = SEPARATION_ANGLES) -> float:
    """``min ||a x_j - b x_k|| / sqrt(a^2 + b^2)`` over pairs and a grid of (a, b) directions.

    The quotient is invariant under scaling (a, b), so a grid on the half
    circle covers all sampled (a, b). With ``n = 1`` this is ``||x_1||``.
    """
    x = centers.vectors
    th = np.arange(angles) * np.pi / angles
    a, b = np.cos(th), np.sin(th)
    best = float(centers.norms().min())
    for j, k in combinations(range(len(x)), 2):
        v = a[:, None] * x[j] - b[:, None] * x[k]
        best = min(best, float(centers.space.norms(v).min()))
    return best


class LipschitzFn:
    """Base class; subclasses set ``X``, ``Y`` and implement ``_eval``."""

    variant = "base"
    X: NormedSpace
    Y: NormedSpace

    def __call__(self, x) -> np.ndarray:
        xb, single = _batch(self.X, x)
        return _unbatch(self._eval(xb), single)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lip_upper(self) -> float:
        raise NotImplementedError

    def anchors(self) -> np.ndarray:
        """Points of X around which the map changes fastest."""
        return np.eye(self.X.dim)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class NormFunctional(LipschitzFn):
    """``f(x) = ||x|| y0`` for a unit vector ``y0``."""

    X: NormedSpace
    Y: NormedSpace
    y0: np.ndarray

    variant = "NormFunctional"

    def __post_init__(self):
        y0 = self.Y.check(np.asarray(self.y0, dtype=float))
        if abs(self.Y.norm(y0) - 1.0) > 1e-9:
            raise InputError("y0 must have norm one")
        object.__setattr__(self, "y0", y0)

    def _eval(self, x):
        return self.X.norms(x)[:, None] * self.y0[None, :]

    def lip_upper(self) -> float:
        return 1.0

    def to_json(self) -> dict:
        return {"variant": self.variant, "X": self.X.to_json(), "Y": self.Y.to_json(),
                "y0": self.y0.tolist()}


@dataclass(frozen=True, eq=False)
class SectorBump(LipschitzFn):
    """``f(x) = sum_j psi_j(x) y_j`` with ``psi_j(x) = a_j max(0, 1 - sqrt2 ||x/a_j - x_j||)``.

    Requires unit targets and centers with ``||a x_j - b x_k|| >= sqrt(a^2+b^2)``;
    then the supports are disjoint cones and ``||f||_Lip <= sqrt 2``.
    """

    centers: VectorTuple
    targets: VectorTuple
    scales: np.ndarray | None = None
    check: bool = True

    variant = "SectorBump"

    def __post_init__(self):
        n = len(self.centers)
        if len(self.targets) != n:
            raise InputError(f"{n} centers but {len(self.targets)} targets")
        scales = np.ones(n) if self.scales is None else np.asarray(self.scales, dtype=float)
        if scales.shape != (n,) or np.any(scales <= 0):
            raise InputError("scales must be n positive reals")
        object.__setattr__(self, "scales", scales)
        if np.any(np.abs(self.targets.norms() - 1.0) > 1e-9):
            raise InputError("sector bump targets must have norm one")
        if self.check:
            sep = pair_separation(self.centers)
            if sep < 1.0 - 1e-9:
                raise InputError(
                    f"centers violate the separation precondition (min ratio {sep:.6g} < 1)")

    @property
    def X(self) -> NormedSpace:
        return self.centers.space

    @property
    def Y(self) -> NormedSpace:
        return self.targets.space

    def bumps(self, x: np.ndarray) -> np.ndarray:
        """Matrix ``psi_j(x_i)`` of shape ``(batch, n)``."""
        xb, _ = _batch(self.X, x)
        a = self.scales
        diff = xb[:, None, :] / a[None, :, None] - self.centers.vectors[None, :, :]
        r = self.X.norms(diff)
        return a[None, :] * np.maximum(0.0, 1.0 - SQRT2 * r)

    def _eval(self, x):
        return self.bumps(x) @ self.targets.vectors

    def lip_upper(self) -> float:
        return SQRT2

    def anchors(self) -> np.ndarray:
        return self.scales[:, None] * self.centers.vectors

    def to_json(self) -> dict:
        return {"variant": self.variant, "centers": self.centers.to_json(),
                "targets": self.targets.to_json(), "scales": self.scales.tolist()}


@dataclass(frozen=True, eq=False)
class RayBump(LipschitzFn):
    """Positively homogeneous bump along the rays through the centers.

    ``f(x) = sum_j phi_j(x) y_j / ||x_j||`` with
    ``phi_j(x) = max(0, 1 - sqrt2 (1+eps) d_j(x)) ||x||``, ``phi_j(0) = 0`` and
    ``d_j(x) = ||x/||x|| - x_j/||x_j||||``. Requires normalized centers at
    mutual distance ``>= sqrt2 / (1+eps)``; then ``||f||_Lip <= 2 sqrt2 (1+eps) + 1``.
    """

    centers: VectorTuple
    targets: VectorTuple
    eps: float
    check: bool = True

    variant = "RayBump"

    def __post_init__(self):
        n = len(self.centers)
        if len(self.targets) != n:
            raise InputError(f"{n} centers but {len(self.targets)} targets")
        if not self.eps > 0:
            raise InputError("eps must be > 0")
        if np.any(self.centers.norms() <= 0):
            raise InputError("ray bump centers must be nonzero")
        if self.check:
            sep = self.normalized_separation()
            need = SQRT2 / (1.0 + self.eps)
            if sep < need - 1e-9:
                raise InputError(
                    f"normalized centers are {sep:.6g} apart; need >= {need:.6g}")

    @property
    def X(self) -> NormedSpace:
        return self.centers.space

    @property
    def Y(self) -> NormedSpace:
        return self.targets.space

    def directions(self) -> np.ndarray:
        return self.centers.vectors / self.centers.norms()[:, None]

    def normalized_separation(self) -> float:
        u = self.directions()
        if len(u) < 2:
            return math.inf
        i, j = np.triu_indices(len(u), k=1)
        return float(self.X.norms(u[i] - u[j]).min())

    def bumps(self, x: np.ndarray) -> np.ndarray:
        xb, _ = _batch(self.X, x)
        nx = self.X.norms(xb)
        out = np.zeros((xb.shape[0], len(self.centers)))
        nz = nx > 0
        if np.any(nz):
            u = xb[nz] / nx[nz, None]
            d = self.X.norms(u[:, None, :] - self.directions()[None, :, :])
            out[nz] = np.maximum(0.0, 1.0 - SQRT2 * (1.0 + self.eps) * d) * nx[nz, None]
        return out

    def _eval(self, x):
        weights = self.targets.vectors / self.centers.norms()[:, None]
        return self.bumps(x) @ weights

    def lip_upper(self) -> float:
        return 2.0 * SQRT2 * (1.0 + self.eps) + 1.0

    def anchors(self) -> np.ndarray:
        return self.centers.vectors

    def to_json(self) -> dict:
        return {"variant": self.variant, "centers": self.centers.to_json(),
                "targets": self.targets.to_json(), "eps": self.eps}


@dataclass(frozen=True, eq=False)
class McShaneScalar(LipschitzFn):
    """Scalar McShane extension ``g(x) = min_j (v_j + L ||x - p_j||)``, shifted so ``f(0) = 0``.

    The origin is added to the data with value 0 when absent, and the output is
    ``(g(x) - g(0)) * direction`` with ``direction`` a unit vector of Y. When
    ``L`` dominates the data quotient, ``g(0) = 0`` and the data are reproduced.
    """

    points: VectorTuple
    values: np.ndarray
    L: float
    Y: NormedSpace
    direction: np.ndarray | None = None

    variant = "McShaneScalar"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != len(self.points):
            raise InputError(f"{len(self.points)} points but {vals.shape[0]} values")
        if not self.L > 0:
            raise InputError("L must be positive")
        pts = self.points
        if not np.any(np.all(pts.vectors == 0.0, axis=1)):
            pts = VectorTuple(pts.space, np.vstack([pts.vectors, np.zeros(pts.space.dim)]))
            vals = np.append(vals, 0.0)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        direction = self.Y.unit(0) if self.direction is None else self.Y.check(self.direction)
        if abs(self.Y.norm(direction) - 1.0) > 1e-9:
            raise InputError("direction must have norm one")
        object.__setattr__(self, "direction", np.asarray(direction, dtype=float))

    @property
    def X(self) -> NormedSpace:
        return self.points.space

    def scalar(self, x) -> np.ndarray:
        xb, single = _batch(self.X, x)
        d = self.X.norms(xb[:, None, :] - self.points.vectors[None, :, :])
        g = np.min(self.values[None, :] + self.L * d, axis=1)
        g0 = np.min(self.values + self.L * self.points.norms())
        out = g - g0
        return out[0] if single else out

    def _eval(self, x):
        return self.scalar(x)[:, None] * self.direction[None, :]

    def lip_upper(self) -> float:
        return float(self.L)

    def anchors(self) -> np.ndarray:
        return self.points.vectors

    def to_json(self) -> dict:
        return {"variant": self.variant, "points": self.points.to_json(),
                "values": self.values.tolist(), "L": self.L, "Y": self.Y.to_json(),
                "direction": self.direction.tolist()}


def from_json(data: dict) -> LipschitzFn:
    v = data.get("variant")
    if v == "NormFunctional":
        return NormFunctional(NormedSpace.from_json(data["X"]), NormedSpace.from_json(data["Y"]),
                              np.asarray(data["y0"]))
    if v == "SectorBump":
        return SectorBump(VectorTuple.from_json(data["centers"]),
                          VectorTuple.from_json(data["targets"]), np.asarray(data["scales"]))
    if v == "RayBump":
        return RayBump(VectorTuple.from_json(data["centers"]),
                       VectorTuple.from_json(data["targets"]), float(data["eps"]))
    if v == "McShaneScalar":
        return McShaneScalar(VectorTuple.from_json(data["points"]), np.asarray(data["values"]),
                             float(data["L"]), NormedSpace.from_json(data["Y"]),
                             np.asarray(data["direction"]))
    raise InputError(f"unknown LipschitzFn variant {v!r}")


def lip_constant_upper(f: LipschitzFn) -> float:
    return f.lip_upper()


@dataclass(frozen=True)
class LipEstimate:
    value: float
    x: np.ndarray
    x_prime: np.ndarray

    def to_json(self) -> dict:
        return {"value": self.value, "witness": [self.x.tolist(), self.x_prime.tolist()]}


def _ratios(f: LipschitzFn, x: np.ndarray, xp: np.ndarray) -> np.ndarray:
    num = f.Y.norms(f(x) - f(xp))
    den = f.X.norms(x - xp)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def lip_constant_lower_mc(
    f: LipschitzFn,
    samples: int = 20_000,
    refine_iters: int = 200,
    seed: int = 0,
    refine_pairs: int = 16,
) -> LipEstimate:
    """Lower bound on ``||f||_Lip`` from sampled pairs plus local refinement.

    Half the pairs are clustered around ``f.anchors()`` at log-uniform scales,
    half are spread over a ball containing them. The best ``refine_pairs`` pairs
    are then improved by coordinate ascent on the quotient. Pair separations
    are kept above ``1e-5`` times the anchor scale so rounding in the numerator
    stays far below the quotient.
    """
    if samples < 2:
        raise InputError("samples must be >= 2")
    X = f.X
    g = rng.generator(seed, rng.PAIRS)
    anchors = np.atleast_2d(f.anchors())
    R = float(max(X.norms(anchors).max(), 1e-300))
    min_sep = 1e-5 * R

    def directions(m):
        z = g.standard_normal((m, X.dim))
        return z / X.norms(z)[:, None]

    def log_scales(m, lo, hi):
        return np.exp(g.uniform(math.log(lo), math.log(hi), m))

    m1 = samples // 2
    m2 = samples - m1
    base = anchors[g.integers(0, len(anchors), m1)]
    x1 = base + (R * log_scales(m1, 1e-4, 1.0))[:, None] * directions(m1)
    x1p = x1 + (R * log_scales(m1, 1e-4, 1.0))[:, None] * directions(m1)
    x2 = (2 * R * g.uniform(0, 1, m2))[:, None] * directions(m2)
    x2p = (2 * R * g.uniform(0, 1, m2))[:, None] * directions(m2)
    x = np.vstack([x1, x2])
    xp = np.vstack([x1p, x2p])
    keep = (X.norms(x) > ORIGIN_EXCLUSION) & (X.norms(xp) > ORIGIN_EXCLUSION) \
        & (X.norms(x - xp) >= min_sep)
    x, xp = x[keep], xp[keep]
    if x.shape[0] == 0:
        raise InputError("no admissible sample pairs")
    r = _ratios(f, x, xp)

    top = np.argsort(-r)[:refine_pairs]
    best_val, best_x, best_xp = -1.0, None, None
    for i in top:
        cx, cxp, cur = x[i].copy(), xp[i].copy(), float(r[i])
        step = 0.25 * float(X.norm(cx - cxp))
        for _ in range(refine_iters):
            coord = int(g.integers(0, 2 * X.dim))
            improved = False
            for sgn in (1.0, -1.0):
                tx, txp = cx.copy(), cxp.copy()
                if coord < X.dim:
                    tx[coord] += sgn * step
                else:
                    txp[coord - X.dim] += sgn * step
                if X.norm(tx - txp) < min_sep or min(X.norm(tx), X.norm(txp)) <= ORIGIN_EXCLUSION:
                    continue
                tv = float(_ratios(f, tx[None], txp[None])[0])
                if tv > cur:
                    cx, cxp, cur, improved = tx, txp, tv, True
                    break
            step = step * 1.5 if improved else step * 0.7
            step = max(step, 1e-3 * min_sep)
        if cur > best_val:
            best_val, best_x, best_xp = cur, cx, cxp
    return LipEstimate(best_val, best_x, best_xp)


def sector_indicator(f: SectorBump, x) -> set[int]:
    """Indices ``j`` with ``psi_j(x) > 0``."""
    if not isinstance(f, SectorBump):
        raise InputError("sector_indicator needs a SectorBump")
    return set(np.flatnonzero(f.bumps(x)[0] > 0).tolist())


def finite_data_quotient(points: VectorTuple, values) -> float:
    """``max_{j != k} ||y_j - y_k|| / ||x_j - x_k||`` for data ``x_j -> y_j``.

    ``values`` is a VectorTuple or a sequence of scalars (taken in R with |.|).
    """
    if isinstance(values, VectorTuple):
        vy, ynorms = values.vectors, values.space.norms
    else:
        vy = np.asarray(values, dtype=float).reshape(-1, 1)
        ynorms = lambda a: np.abs(a[..., 0])
    if vy.shape[0] != len(points):
        raise InputError(f"{len(points)} points but {vy.shape[0]} values")
    if len(points) < 2:
        return 0.0
    i, j = np.triu_indices(len(points), k=1)
    dx = points.space.norms(points.vectors[i] - points.vectors[j])
    if np.any(dx == 0):
        raise InputError("points must be pairwise distinct")
    return float(np.max(ynorms(vy[i] - vy[j]) / dx))
