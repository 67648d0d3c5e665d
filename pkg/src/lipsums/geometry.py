"""Almost-isometric copies of l_2^n inside a target space.

Every embedding is normalized so that its minimal gain is one, i.e.
``||T z|| >= ||z||_2`` on the range, and carries an upper bound on ``||T||``.
How strong that bound is depends on the construction and is recorded in
``Embedding.certification``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConstructionError, InputError
from .spaces import INF, LinearMap, NormedSpace, VectorTuple, lp, min_gain, operator_norm

DEFAULT_CERT_POINTS = 20_000
DEFAULT_MAX_RETRIES = 50
PAIR_ANGLES = 64


@dataclass(frozen=True)
class Certification:
    kind: str  # "closed_form" or "sampled"
    points: int = 0
    seed: int = 0
    attempt: int = 0
    # True when both bounds came out of exact operator computations
    exact_bounds: bool = False

    def to_json(self) -> dict:
        return {"kind": self.kind, "points": self.points, "seed": self.seed,
                "attempt": self.attempt, "exact_bounds": self.exact_bounds}

    @classmethod
    def from_json(cls, data: dict) -> "Certification":
        return cls(**data)


@dataclass(frozen=True, eq=False)
class Embedding:
    map: LinearMap
    gain_lower: float
    norm_upper: float
    certification: Certification = field(default_factory=lambda: Certification("closed_form"))

    def __post_init__(self):
        if self.map.domain.p != 2.0 or self.map.domain.weights is not None:
            raise InputError("an embedding must be defined on unweighted l_2^n")
        if self.gain_lower > self.norm_upper * (1 + 1e-12):
            raise InputError("gain_lower exceeds norm_upper")

    @property
    def n(self) -> int:
        return self.map.domain.dim

    @property
    def target(self) -> NormedSpace:
        return self.map.codomain

    @property
    def distortion(self) -> float:
        return self.norm_upper / self.gain_lower

    def to_json(self) -> dict:
        return {
            "map": self.map.to_json(),
            "gain_lower": self.gain_lower,
            "norm_upper": self.norm_upper,
            "certification": self.certification.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Embedding":
        return cls(LinearMap.from_json(data["map"]), float(data["gain_lower"]),
                   float(data["norm_upper"]), Certification.from_json(data["certification"]))


def equiangular_embedding(N: int) -> Embedding:
    """``l_2^2 -> l_inf^N`` with rows ``(cos(k pi/N), sin(k pi/N)) / cos(pi/(2N))``.

    The 2N directions ``+-u_k`` are spaced ``pi/N`` apart, so for a unit ``z``
    the best of them is within ``pi/(2N)`` of ``z``: ``max_k |<u_k, z>|`` lies in
    ``[cos(pi/(2N)), 1]``. After scaling, the minimal gain is exactly one and
    ``||T|| = 1/cos(pi/(2N))``.
    """
    if N < 2:
        raise InputError("N must be >= 2")
    k = np.arange(N)
    c = math.cos(math.pi / (2 * N))
    rows = np.stack([np.cos(k * np.pi / N), np.sin(k * np.pi / N)], axis=1) / c
    T = LinearMap(rows, lp(2, 2), lp(INF, N))
    return Embedding(T, 1.0, 1.0 / c, Certification("closed_form", exact_bounds=True))


def coordinate_embedding(n: int, target: NormedSpace) -> Embedding:
    """Coordinate inclusion ``l_2^n -> l_2^m``; an isometry for unweighted targets."""
    if target.p != 2.0 or target.weights is not None or target.dim < n:
        raise InputError("coordinate embedding needs an unweighted l_2 target of dim >= n")
    m = np.zeros((target.dim, n))
    m[:n, :n] = np.eye(n)
    return Embedding(LinearMap(m, lp(2, n), target), 1.0, 1.0,
                     Certification("closed_form", exact_bounds=True))


def certification_points(n: int, points: int, seed: int, attempt: int) -> np.ndarray:
    """Unit vectors of l_2^n used to certify an embedding.

    Random directions plus, for every pair ``j < k``, a grid of ``PAIR_ANGLES``
    directions in the plane of ``e_j, e_k`` (the planes probed by separation
    checks).
    """
    g = rng.generator(seed, rng.CERT, 2 * attempt + 1).standard_normal((points, n))
    parts = [g / np.linalg.norm(g, axis=1, keepdims=True), np.eye(n)]
    if n >= 2:
        th = np.arange(PAIR_ANGLES) * np.pi / PAIR_ANGLES
        for j in range(n):
            for k in range(j + 1, n):
                z = np.zeros((PAIR_ANGLES, n))
                z[:, j], z[:, k] = np.cos(th), np.sin(th)
                parts.append(z)
    return np.vstack(parts)


def _gaussian_map(n: int, target: NormedSpace, seed: int, attempt: int) -> np.ndarray:
    g = rng.generator(seed, rng.CERT, 2 * attempt).standard_normal((target.dim, n))
    if target.p is INF:
        # unit rows: the sup norm then only sees directions, not row lengths
        g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g / target.scaling[:, None]


def random_embedding(
    n: int,
    target: NormedSpace,
    eps: float,
    cert_points: int = DEFAULT_CERT_POINTS,
    seed: int = 0,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> Embedding:
    """Random Gaussian map ``l_2^n -> target`` with empirical distortion ``<= 1 + eps``.

    The minimal gain is estimated by the minimum over certification points,
    refined by descent (exact where a closed form exists); the map is divided by
    it. The norm bound is the larger of the sampled maximum and ``operator_norm``.
    Neither is a proof unless ``certification.exact_bounds`` is set.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if not eps > 0:
        raise InputError("eps must be > 0")
    if target.dim < n:
        raise InputError(f"target dimension {target.dim} is smaller than n={n}")
    best = math.inf
    for attempt in range(max_retries):
        m = _gaussian_map(n, target, seed, attempt)
        T = LinearMap(m, lp(2, n), target)
        z = certification_points(n, cert_points, seed, attempt)
        vals = target.norms(z @ m.T)
        order = np.argsort(vals)[:8]
        mg = min_gain(T, starts=z[order], seed=seed)
        lo = min(float(vals.min()), mg.value)
        if lo <= 0:
            continue
        on = operator_norm(T, seed=seed)
        hi = max(float(vals.max()), on.value)
        ratio = hi / lo
        best = min(best, ratio)
        if ratio <= 1 + eps:
            T = LinearMap(m / lo, lp(2, n), target)
            cert = Certification("sampled", cert_points, seed, attempt,
                                 exact_bounds=mg.certified and on.certified)
            return Embedding(T, 1.0, ratio, cert)
    raise ConstructionError(
        f"no embedding of l_2^{n} into {target.label()} with distortion <= {1 + eps:g} "
        f"after {max_retries} attempts (best {best:.4f}); use a larger target dimension"
    )


def embedded_basis(E: Embedding, lengths=None) -> VectorTuple:
    """The vectors ``lengths_j * T e_j``."""
    cols = E.map.matrix.T.copy()
    if lengths is not None:
        lengths = np.asarray(lengths, dtype=float)
        if lengths.shape != (E.n,):
            raise InputError(f"expected {E.n} lengths, got shape {lengths.shape}")
        if np.any(lengths <= 0):
            raise InputError("lengths must be positive")
        cols *= lengths[:, None]
    return VectorTuple(E.target, cols)


@dataclass(frozen=True)
class SeparationReport:
    min_ratio: float
    passed: bool
    trials: int
    witness: dict
    cert_min_ratio: float | None = None

    def to_json(self) -> dict:
        return {"min_ratio": self.min_ratio, "passed": self.passed, "trials": self.trials,
                "witness": self.witness, "cert_min_ratio": self.cert_min_ratio}


def separation_check(E: Embedding, trials: int = 10_000, seed: int = 0,
                     tol: float = 1e-9) -> SeparationReport:
    """Check ``||a x_j - b x_k|| >= gain_lower * sqrt(a^2 + b^2)`` on samples.

    Pairs ``j != k`` and ``a, b in [-10, 10]`` are drawn at random; the
    degenerate pairs ``(a, b) = (1, 0)`` for every ``j`` are always included.
    For sampled embeddings the minimum over the certification points is also
    reported.
    """
    x = E.map.matrix.T
    n = E.n
    g = rng.generator(seed, rng.PAIRS)
    if n >= 2:
        j = g.integers(0, n, trials)
        k = (j + g.integers(1, n, trials)) % n
    else:
        j = k = np.zeros(trials, dtype=int)
    ab = g.uniform(-10.0, 10.0, (trials, 2))
    if n < 2:
        ab[:, 1] = 0.0
    a = np.concatenate([ab[:, 0], np.ones(n)])
    b = np.concatenate([ab[:, 1], np.zeros(n)])
    j = np.concatenate([j, np.arange(n)])
    k = np.concatenate([k, np.arange(n)])
    vec = a[:, None] * x[j] - b[:, None] * x[k]
    den = np.hypot(a, b)
    ok = den > 0
    ratios = E.target.norms(vec[ok]) / den[ok]
    i = int(np.argmin(ratios))
    min_ratio = float(ratios[i])
    idx = np.flatnonzero(ok)[i]
    witness = {"j": int(j[idx]), "k": int(k[idx]), "a": float(a[idx]), "b": float(b[idx])}
    cert_min = None
    if E.certification.kind == "sampled":
        c = E.certification
        z = certification_points(n, c.points, c.seed, c.attempt)
        cert_min = float(E.target.norms(z @ E.map.matrix.T).min())
    passed = min_ratio >= E.gain_lower - tol
    return SeparationReport(min_ratio, passed, int(ratios.shape[0]), witness, cert_min)
