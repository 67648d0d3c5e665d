"""Noise families and estimators of ``E ||sum_j xi_j x_j||^2``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import rng
from .errors import CapacityError, InputError
from .spaces import NormedSpace, VectorTuple

FAMILIES = ("gaussian", "rademacher", "uniform", "discrete_symmetric")
MAX_EXACT_N = 24


@dataclass(frozen=True)
class NoiseSpec:
    """Symmetric scalar law with ``E|xi|^2 = 1`` and all moments finite.

    For ``discrete_symmetric`` the atoms are ``(value, prob)`` pairs; they must
    be closed under negation with equal weights, and the values are rescaled
    here so the second moment is exactly one.
    """

    family: str = "gaussian"
    atoms: tuple[tuple[float, float], ...] | None = field(default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        if self.family != "discrete_symmetric":
            if self.atoms is not None:
                raise InputError("atoms are only allowed for discrete_symmetric noise")
            return
        if not self.atoms:
            raise InputError("discrete_symmetric noise requires atoms")
        merged: dict[float, float] = {}
        for v, pr in self.atoms:
            v, pr = float(v), float(pr)
            if not (np.isfinite(v) and pr >= 0):
                raise InputError(f"invalid atom ({v}, {pr})")
            merged[v] = merged.get(v, 0.0) + pr
        total = sum(merged.values())
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"atom probabilities sum to {total}, expected 1")
        for v, pr in merged.items():
            if abs(merged.get(-v, -1.0) - pr) > 1e-12:
                raise InputError(f"atoms are not symmetric: value {v} has no matching {-v}")
        m2 = sum(pr * v * v for v, pr in merged.items())
        if m2 <= 0:
            raise InputError("noise is identically zero")
        scale = 1.0 / math.sqrt(m2)
        atoms = tuple(sorted((v * scale, pr) for v, pr in merged.items() if pr > 0))
        object.__setattr__(self, "atoms", atoms)

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on (0, 1) to draws by inverse CDF."""
        if self.family == "gaussian":
            return ndtri(u)
        if self.family == "rademacher":
            return np.where(u < 0.5, -1.0, 1.0)
        if self.family == "uniform":
            return math.sqrt(3.0) * (2.0 * u - 1.0)
        values = np.array([a[0] for a in self.atoms])
        cdf = np.cumsum([a[1] for a in self.atoms])
        cdf[-1] = 1.0
        return values[np.searchsorted(cdf, u, side="right").clip(max=len(values) - 1)]

    def second_moment(self) -> float:
        if self.family == "discrete_symmetric":
            return math.fsum(pr * v * v for v, pr in self.atoms)
        return 1.0

    def to_json(self) -> dict:
        out = {"family": self.family}
        if self.atoms is not None:
            out["atoms"] = [list(a) for a in self.atoms]
        return out

    @classmethod
    def from_json(cls, data) -> "NoiseSpec":
        if isinstance(data, str):
            return cls(data)
        if not isinstance(data, dict) or "family" not in data:
            raise InputError(f"noise must be a family name or an object with 'family', got {data!r}")
        atoms = data.get("atoms")
        return cls(data["family"], tuple(tuple(a) for a in atoms) if atoms is not None else None)


GAUSSIAN = NoiseSpec("gaussian")
RADEMACHER = NoiseSpec("rademacher")


@dataclass(frozen=True)
class SumEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error,
                "samples": self.samples, "seed": self.seed}

    @classmethod
    def from_values(cls, values: np.ndarray, seed: int) -> "SumEstimate":
        s = values.shape[0]
        sd = float(np.std(values, ddof=1)) if s > 1 else 0.0
        return cls(float(np.mean(values)), sd / math.sqrt(s), s, int(seed))


def noise_block(spec: NoiseSpec, n: int, seed: int, start: int, count: int) -> np.ndarray:
    """Draws for samples ``start .. start+count-1``, shape ``(count, n)``."""
    u = rng.uniforms(seed, rng.NOISE, start * n, count * n)
    return spec.transform(u).reshape(count, n)


def sample_noise(spec: NoiseSpec, n: int, seed: int, index: int = 0) -> np.ndarray:
    """The ``n`` draws of sample ``index``; deterministic in ``(seed, index)``."""
    if n < 1:
        raise InputError("n must be >= 1")
    return noise_block(spec, n, seed, index, 1)[0]


def squared_norm_samples(
    vectors: np.ndarray,
    space: NormedSpace,
    spec: NoiseSpec,
    samples: int,
    seed: int,
    workers: int = 1,
) -> np.ndarray:
    """Per-sample values ``||sum_j xi_j x_j||^2``, computed in fixed-size chunks."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    n = vectors.shape[0]

    def chunk(bounds):
        lo, hi = bounds
        xi = noise_block(spec, n, seed, lo, hi - lo)
        return space.norms(xi @ vectors) ** 2

    parts = rng.ordered_map(chunk, rng.chunk_bounds(samples), workers)
    return np.concatenate(parts)


def second_moment_mc(
    tup: VectorTuple,
    spec: NoiseSpec = GAUSSIAN,
    samples: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> SumEstimate:
    """Monte Carlo estimate of ``E ||sum_j xi_j x_j||^2``."""
    if samples < 2:
        raise InputError("samples must be >= 2")
    vals = squared_norm_samples(tup.vectors, tup.space, spec, samples, seed, workers)
    return SumEstimate.from_values(vals, seed)


def paired_ratio(num_vals: np.ndarray, den_vals: np.ndarray, scale: float) -> tuple[float, float]:
    """``sqrt(mean N / mean D) / scale`` and its delta-method standard error (paired draws)."""
    mn, md = float(np.mean(num_vals)), float(np.mean(den_vals))
    rho = mn / md
    value = math.sqrt(rho) / scale
    s = num_vals.shape[0]
    if s < 2 or rho == 0:
        return value, 0.0
    resid = num_vals - rho * den_vals
    se_rho = float(np.std(resid, ddof=1)) / (md * math.sqrt(s))
    return value, se_rho / (2.0 * math.sqrt(rho) * scale)


def sign_patterns(n: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start .. stop-1`` of the sign table with the last sign fixed to +1."""
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n - 1, dtype=np.int64)[None, :]) & 1
    signs = 1.0 - 2.0 * bits
    return np.hstack([signs, np.ones((stop - start, 1))])


def exact_rademacher_values(vectors: np.ndarray, space: NormedSpace) -> np.ndarray:
    """``||sum_j eps_j x_j||^2`` for all sign patterns up to a global sign."""
    vectors = np.atleast_2d(vectors)
    n = vectors.shape[0]
    if n > MAX_EXACT_N:
        raise CapacityError(
            f"exact Rademacher enumeration needs 2^{n} terms; n must be <= {MAX_EXACT_N}")
    total = 1 << (n - 1)
    out = np.empty(total)
    for lo, hi in rng.chunk_bounds(total, 1 << 16):
        out[lo:hi] = space.norms(sign_patterns(n, lo, hi) @ vectors) ** 2
    return out


def second_moment_exact_rademacher(tup: VectorTuple) -> float:
    """Exact average of ``||sum_j eps_j x_j||^2`` over ``eps in {-1, 1}^n``.

    Patterns ``eps`` and ``-eps`` give the same norm, so only half are visited.
    """
    vals = exact_rademacher_values(tup.vectors, tup.space)
    return math.fsum(vals) / vals.shape[0]


def first_absolute_moment(spec: NoiseSpec) -> float:
    """``E|xi|``."""
    if spec.family == "gaussian":
        return math.sqrt(2.0 / math.pi)
    if spec.family == "rademacher":
        return 1.0
    if spec.family == "uniform":
        return math.sqrt(3.0) / 2.0
    return math.fsum(pr * abs(v) for v, pr in spec.atoms)
