"""Finite-dimensional normed spaces, vector tuples and linear maps.

Every space is ``l_p^n`` or its weighted variant with norm
``(sum_i w_i |x_i|^p)^(1/p)`` (``max_i w_i |x_i|`` for ``p = inf``).
Vectors are plain ``numpy`` arrays; batches of vectors are 2-D arrays with
one vector per row.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import InputError


class PInf(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"


INF = PInf.INF


def _check_exponent(p) -> float | PInf:
    if p is INF or (isinstance(p, str) and p.lower() in ("inf", "infinity")):
        return INF
    try:
        value = float(p)
    except (TypeError, ValueError):
        raise InputError(f"invalid exponent p={p!r}") from None
    if np.isinf(value) and value > 0:
        return INF
    if not value >= 1.0:
        raise InputError(f"p must be ≥ 1 (got {p!r})")
    return value


def dual_exponent(p: float | PInf) -> float | PInf:
    """Hoelder conjugate of ``p``."""
    if p is INF:
        return 1.0
    if p == 1.0:
        return INF
    return p / (p - 1.0)


def lp_norms(arr: np.ndarray, p: float | PInf) -> np.ndarray:
    """Unweighted l_p norms along the last axis."""
    a = np.abs(arr)
    if p is INF:
        return a.max(axis=-1) if a.shape[-1] else np.zeros(a.shape[:-1])
    if p == 1.0:
        return a.sum(axis=-1)
    if p == 2.0:
        return np.sqrt(np.einsum("...i,...i->...", a, a))
    # rescale by the max entry so large p does not overflow
    m = a.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    return m[..., 0] * np.power(np.power(a / safe, p).sum(axis=-1), 1.0 / p)


@dataclass(frozen=True)
class NormedSpace:
    """``l_p^dim``, optionally with positive coordinate weights."""

    p: float | PInf
    dim: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", _check_exponent(self.p))
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer (got {self.dim!r})")
        object.__setattr__(self, "dim", int(self.dim))
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.dim:
                raise InputError(f"expected {self.dim} weights, got {len(w)}")
            if not all(x > 0 and np.isfinite(x) for x in w):
                raise InputError("all weights must be strictly positive and finite")
            object.__setattr__(self, "weights", w)

    @property
    def kind(self) -> str:
        return "lp" if self.weights is None else "weighted_lp"

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2.0

    @property
    def scaling(self) -> np.ndarray:
        """Diagonal ``d`` with ``||x|| = ||d * x||_p`` (unweighted)."""
        if self.weights is None:
            return np.ones(self.dim)
        w = np.asarray(self.weights)
        return w if self.p is INF else w ** (1.0 / self.p)

    def check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[-1] != self.dim:
            raise InputError(
                f"dimension mismatch: space has dim {self.dim}, got shape {v.shape}"
            )
        return v

    def norms(self, arr: np.ndarray) -> np.ndarray:
        """Norms along the last axis of ``arr``."""
        arr = self.check(arr)
        if self.weights is not None:
            arr = arr * self.scaling
        return lp_norms(arr, self.p)

    def norm(self, v) -> float:
        v = self.check(v)
        if v.ndim != 1:
            raise InputError(f"norm expects a single vector, got shape {v.shape}")
        return float(self.norms(v))

    def unit(self, i: int = 0) -> np.ndarray:
        """Basis vector ``e_i`` rescaled to norm one."""
        e = np.zeros(self.dim)
        e[i] = 1.0
        return e / self.norm(e)

    def label(self) -> str:
        p = "inf" if self.p is INF else f"{self.p:g}"
        w = "w" if self.weights is not None else ""
        return f"l{p}{w}^{self.dim}"

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "p": "inf" if self.p is INF else self.p,
            "dim": self.dim,
        }
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "NormedSpace":
        if not isinstance(data, dict):
            raise InputError(f"space must be an object, got {data!r}")
        kind = data.get("kind", "lp")
        if kind not in ("lp", "weighted_lp"):
            raise InputError(f"unknown space kind {kind!r}")
        if "p" not in data or "dim" not in data:
            raise InputError("space requires fields 'p' and 'dim'")
        weights = data.get("weights")
        if kind == "weighted_lp" and weights is None:
            raise InputError("weighted_lp space requires 'weights'")
        return cls(data["p"], data["dim"], tuple(weights) if weights is not None else None)


def lp(p, dim: int) -> NormedSpace:
    return NormedSpace(p, dim)


def weighted_lp(p, weights: Sequence[float]) -> NormedSpace:
    return NormedSpace(p, len(weights), tuple(weights))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class VectorTuple:
    """Ordered nonempty list ``x_1, ..., x_n`` of vectors in one space."""

    space: NormedSpace
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1 and self.space.dim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0:
            raise InputError(f"a vector tuple needs a nonempty (n, dim) array, got {v.shape}")
        self.space.check(v)
        object.__setattr__(self, "vectors", _frozen(v))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, j) -> np.ndarray:
        return self.vectors[j]

    @property
    def n(self) -> int:
        return len(self)

    def norms(self) -> np.ndarray:
        return self.space.norms(self.vectors)

    def scaled(self, factors) -> "VectorTuple":
        f = np.broadcast_to(np.asarray(factors, dtype=float), (len(self),))
        return VectorTuple(self.space, self.vectors * f[:, None])

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "vectors": self.vectors.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "VectorTuple":
        return cls(NormedSpace.from_json(data["space"]), np.asarray(data["vectors"], dtype=float))


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Matrix of shape ``(codomain.dim, domain.dim)`` between two spaces."""

    matrix: np.ndarray
    domain: NormedSpace
    codomain: NormedSpace

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise InputError(
                f"matrix shape {m.shape} does not match "
                f"({self.codomain.dim}, {self.domain.dim})"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = self.domain.check(x)
        return x @ self.matrix.T

    def reduced(self) -> np.ndarray:
        """Matrix of the same map between the unweighted spaces."""
        return self.codomain.scaling[:, None] * self.matrix / self.domain.scaling[None, :]

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "LinearMap":
        return cls(
            np.asarray(data["matrix"], dtype=float),
            NormedSpace.from_json(data["domain"]),
            NormedSpace.from_json(data["codomain"]),
        )


def identity_map(space: NormedSpace) -> LinearMap:
    return LinearMap(np.eye(space.dim), space, space)


class NormValue(NamedTuple):
    value: float
    certified: bool


# --- duality helpers (unweighted l_p) -------------------------------------


def norming_vector(w: np.ndarray, p: float | PInf) -> np.ndarray:
    """A unit vector ``x`` of l_p maximizing ``<w, x>``, row-wise."""
    w = np.atleast_2d(w)
    out = np.zeros_like(w)
    if p is INF:
        out = np.sign(w)
        out[out == 0] = 1.0
        return out
    if p == 1.0:
        idx = np.argmax(np.abs(w), axis=1)
        rows = np.arange(w.shape[0])
        s = np.sign(w[rows, idx])
        out[rows, idx] = np.where(s == 0, 1.0, s)
        return out
    q = dual_exponent(p)
    a = np.abs(w) ** (q - 1.0)
    x = np.sign(w) * a
    nrm = lp_norms(x, p)[:, None]
    bad = nrm[:, 0] == 0
    x[bad] = 0.0
    x[bad, 0] = 1.0
    nrm[bad] = 1.0
    return x / nrm


def norm_gradient(y: np.ndarray, r: float | PInf) -> np.ndarray:
    """A subgradient of ``||y||_r`` at each row of ``y``."""
    y = np.atleast_2d(y)
    if r is INF:
        g = np.zeros_like(y)
        rows = np.arange(y.shape[0])
        idx = np.argmax(np.abs(y), axis=1)
        g[rows, idx] = np.sign(y[rows, idx])
        return g
    if r == 1.0:
        return np.sign(y)
    nrm = lp_norms(y, r)[:, None]
    nrm = np.where(nrm > 0, nrm, 1.0)
    return np.sign(y) * (np.abs(y) / nrm) ** (r - 1.0)


# --- operator norm and minimal gain ----------------------------------------

DEFAULT_RESTARTS = 32
DEFAULT_ITERS = 200
# LP-based refinement is run from this many of the most promising starts
POLYTOPE_STARTS = 8


def _starts(dim: int, restarts: int, seed: int, p, extra=None) -> np.ndarray:
    rng = np.random.default_rng([seed, dim])
    parts = [np.eye(dim)]
    if extra is not None:
        parts.append(np.atleast_2d(np.asarray(extra, dtype=float)))
    parts.append(rng.standard_normal((restarts, dim)))
    x = np.vstack(parts)
    nrm = lp_norms(x, p)[:, None]
    x = x[nrm[:, 0] > 0]
    return x / lp_norms(x, p)[:, None]


def _circle_candidates(rows: np.ndarray, r) -> np.ndarray:
    """Unit vectors of l_2^2 where the extremes of ``||A u||_r`` can occur (r in {1, inf})."""
    perp = lambda v: np.stack([-v[:, 1], v[:, 0]], axis=1)
    dirs = [perp(rows)]
    if r is INF:
        i, j = np.triu_indices(rows.shape[0], k=1)
        dirs += [perp(rows[i] - rows[j]), perp(rows[i] + rows[j])]
    d = np.vstack(dirs)
    nrm = np.linalg.norm(d, axis=1)
    return d[nrm > 1e-300] / nrm[nrm > 1e-300, None]


def _l2_circle_l1_max(a: np.ndarray) -> float:
    """Exact max of ``||A u||_1`` over the unit circle of l_2^2."""
    brk = _circle_candidates(a, 1.0)
    if brk.shape[0] == 0:
        return 0.0
    ang = np.sort(np.mod(np.arctan2(brk[:, 1], brk[:, 0]), np.pi))
    ang = np.concatenate([ang, [ang[0] + np.pi]])
    mids = 0.5 * (ang[:-1] + ang[1:])
    mid_u = np.stack([np.cos(mids), np.sin(mids)], axis=1)
    c = np.sign(mid_u @ a.T) @ a
    cn = np.linalg.norm(c, axis=1)
    crit = c[cn > 0] / cn[cn > 0, None]
    cand = np.vstack([brk, crit])
    return float(np.abs(cand @ a.T).sum(axis=1).max())


def operator_norm(
    T: LinearMap,
    mode: str = "exact_if_available",
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
) -> NormValue:
    """Operator norm ``sup ||T x|| / ||x||``.

    Closed forms are used for l_2 -> l_2 (largest singular value), any -> l_inf
    (row dual norms), l_1 -> any (column norms) and l_2^2 -> l_1 (arc
    enumeration). Otherwise, or with ``mode="estimate"``, a lower estimate is
    computed by the nonlinear power method (linearize the convex objective,
    maximize the linearization over the unit ball) from random starts.
    """
    if mode not in ("exact_if_available", "estimate"):
        raise InputError(f"unknown mode {mode!r}")
    a = T.reduced()
    p, r = T.domain.p, T.codomain.p
    if not np.any(a):
        return NormValue(0.0, True)
    if mode == "exact_if_available":
        if p == 2.0 and r == 2.0:
            return NormValue(float(np.linalg.svd(a, compute_uv=False)[0]), True)
        if r is INF:
            return NormValue(float(lp_norms(a, dual_exponent(p)).max()), True)
        if p == 1.0:
            return NormValue(float(lp_norms(a.T, r).max()), True)
        if p == 2.0 and r == 1.0 and a.shape[1] == 2:
            return NormValue(_l2_circle_l1_max(a), True)

    x = _starts(a.shape[1], restarts, seed, p)
    vals = lp_norms(x @ a.T, r)
    for _ in range(iters):
        g = norm_gradient(x @ a.T, r) @ a
        nxt = norming_vector(g, p)
        nv = lp_norms(nxt @ a.T, r)
        # each step cannot decrease the objective (convexity); keep the best anyway
        ok = nv > vals
        x[ok] = nxt[ok]
        gain = np.where(ok, nv - vals, 0.0)
        vals = np.maximum(vals, nv)
        if gain.max() <= 1e-15 * vals.max():
            break
    best = vals.max()
    return NormValue(float(best), False)


def min_gain(
    T: LinearMap,
    mode: str = "exact_if_available",
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
    starts: np.ndarray | None = None,
) -> NormValue:
    """Minimal gain ``inf_{||x|| = 1} ||T x||`` (``1/||T^-1||`` on the range).

    Exact for l_2 -> l_2 (smallest singular value) and for maps out of l_2^2
    into l_1 or l_inf, where the minimum sits at finitely many candidate
    directions. Otherwise an upper estimate by projected subgradient descent;
    ``starts`` seeds the descent with caller-chosen directions.
    """
    if mode not in ("exact_if_available", "estimate"):
        raise InputError(f"unknown mode {mode!r}")
    a = T.reduced()
    p, r = T.domain.p, T.codomain.p
    if np.linalg.matrix_rank(a) < a.shape[1]:
        return NormValue(0.0, True)
    if mode == "exact_if_available":
        if p == 2.0 and r == 2.0:
            return NormValue(float(np.linalg.svd(a, compute_uv=False)[-1]), True)
        if p == 2.0 and a.shape[1] == 2 and (r is INF or r == 1.0):
            cand = _circle_candidates(a, r)
            return NormValue(float(lp_norms(cand @ a.T, r).min()), True)
        if a.shape[1] == 1:
            return NormValue(float(lp_norms(a.T, r)[0] / lp_norms(np.ones(1), p)), True)

    if starts is not None:
        starts = np.atleast_2d(np.asarray(starts, dtype=float)) * T.domain.scaling
    x = _starts(a.shape[1], restarts, seed, p, extra=starts)
    best = math.inf
    if r is INF or r == 1.0:
        order = np.argsort(lp_norms(x @ a.T, r))[:POLYTOPE_STARTS]
        best = _polytope_ascent(a, p, r, x[order], iters)
    vals = lp_norms(x @ a.T, r)
    step = np.full(x.shape[0], 0.1)
    for _ in range(iters):
        g = norm_gradient(x @ a.T, r) @ a
        if p == 2.0:
            g = g - np.sum(g * x, axis=1, keepdims=True) * x
        trial = x - step[:, None] * g
        tn = lp_norms(trial, p)[:, None]
        trial = trial / np.where(tn > 0, tn, 1.0)
        tv = lp_norms(trial @ a.T, r)
        ok = tv < vals
        x[ok] = trial[ok]
        vals[ok] = tv[ok]
        step = np.where(ok, step * 1.2, step * 0.5)
        if step.max() < 1e-12:
            break
    return NormValue(float(min(best, vals.min())), False)


def _polytope_ascent(a: np.ndarray, p, r, starts: np.ndarray, iters: int) -> float:
    """Upper estimate of ``min ||a x||_r`` over the l_p sphere, r in {1, inf}.

    Equivalently ``1 / max{||x||_p : ||a x||_r <= 1}``; the convex ``||x||_p``
    is maximized over the polytope by repeatedly maximizing its linearization
    (one LP per step), which climbs monotonically to a vertex.
    """
    m, d = a.shape
    if r is INF:
        a_ub = np.vstack([a, -a])
        b_ub = np.ones(2 * m)
        nvar = d
    else:
        # variables (x, t) with -t <= a x <= t, sum t <= 1
        eye = np.eye(m)
        a_ub = np.vstack([
            np.hstack([a, -eye]),
            np.hstack([-a, -eye]),
            np.hstack([np.zeros((1, d)), np.ones((1, m))]),
        ])
        b_ub = np.concatenate([np.zeros(2 * m), [1.0]])
        nvar = d + m
    bounds = [(None, None)] * d + [(0, None)] * (nvar - d)
    best = math.inf
    for x in starts:
        x = x / lp_norms(a @ x, r)
        cur = lp_norms(x, p)
        for _ in range(iters):
            c = np.zeros(nvar)
            c[:d] = -norm_gradient(x[None, :], p)[0]
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status != 0:
                break
            nxt = res.x[:d]
            nv = lp_norms(nxt, p)
            if nv <= cur * (1 + 1e-12):
                break
            x, cur = nxt, nv
        best = min(best, float(lp_norms(a @ x, r) / lp_norms(x, p)))
    return best
