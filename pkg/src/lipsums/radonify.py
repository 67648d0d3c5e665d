"""Gaussian (gamma-radonifying) norms of finite-atom simple functions.

A simple function ``phi = sum_j 1_{S_j} (x) x_j`` over disjoint atoms of mass
``mu_j`` induces ``u_phi h = int h phi dmu``. The normalized indicators
``mu_j^(-1/2) 1_{S_j}`` are orthonormal, which gives
``||u_phi||^2 = E ||sum_j gamma_j mu_j^(1/2) x_j||^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .lipfun import LipschitzFn
from .randomsum import GAUSSIAN, SumEstimate, paired_ratio, squared_norm_samples
from .spaces import NormedSpace, VectorTuple


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    masses: np.ndarray
    values: VectorTuple

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).reshape(-1)
        if m.size == 0:
            raise InputError("a simple function needs at least one atom")
        if np.any(~np.isfinite(m)) or np.any(m <= 0):
            raise InputError("atom masses must lie in (0, inf)")
        if m.shape[0] != len(self.values):
            raise InputError(f"{m.shape[0]} atoms but {len(self.values)} values")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def space(self) -> NormedSpace:
        return self.values.space

    def gaussian_vectors(self) -> np.ndarray:
        """The vectors ``mu_j^(1/2) x_j`` whose Gaussian sum has the norm of ``u_phi``."""
        return np.sqrt(self.masses)[:, None] * self.values.vectors

    def scaled(self, alpha: float) -> "SimpleFunction":
        return SimpleFunction(self.masses, VectorTuple(self.space, alpha * self.values.vectors))

    def __sub__(self, other: "SimpleFunction") -> "SimpleFunction":
        if not np.array_equal(self.masses, other.masses) or self.space != other.space:
            raise InputError("subtract aligned simple functions only (see align)")
        return SimpleFunction(self.masses,
                              VectorTuple(self.space, self.values.vectors - other.values.vectors))

    def to_json(self) -> dict:
        return {"masses": self.masses.tolist(), "values": self.values.vectors.tolist(),
                "space": self.space.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "SimpleFunction":
        space = NormedSpace.from_json(data["space"])
        return cls(np.asarray(data["masses"]), VectorTuple(space, np.asarray(data["values"])))


def from_tuple(tup: VectorTuple, masses) -> SimpleFunction:
    """``phi = sum_j h_j (x) x_j`` with ``h_j = mu_j^(-1/2) 1_{S_j}``.

    Its value on atom j is ``mu_j^(-1/2) x_j`` and ``||u_phi|| = (E||sum gamma_j x_j||^2)^(1/2)``.
    """
    m = np.asarray(masses, dtype=float)
    return SimpleFunction(m, tup.scaled(m ** -0.5))


@dataclass(frozen=True)
class EllNorm:
    value: float
    std_error: float
    estimate: SumEstimate
    exact: float | None = None

    def to_json(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "estimate": self.estimate.to_json(), "exact": self.exact}


def _sqrt_se(est: SumEstimate) -> tuple[float, float]:
    v = math.sqrt(max(est.mean, 0.0))
    return v, (est.std_error / (2 * v) if v > 0 else 0.0)


def l2x_norm(phi: SimpleFunction) -> float:
    """``(sum_j mu_j ||x_j||^2)^(1/2)``, the Bochner L^2 norm."""
    return math.sqrt(math.fsum(phi.masses * phi.values.norms() ** 2))


def ell_norm(phi: SimpleFunction, samples: int = 100_000, seed: int = 0,
             workers: int = 1) -> EllNorm:
    """Gaussian norm of ``u_phi`` by Monte Carlo; on l_2 spaces also the closed form.

    In an inner product space the cross terms vanish and the closed form is
    ``l2x_norm(phi)``; it is reported in ``exact`` alongside the estimate.
    """
    vals = squared_norm_samples(phi.gaussian_vectors(), phi.space, GAUSSIAN, samples, seed,
                                workers)
    est = SumEstimate.from_values(vals, seed)
    value, se = _sqrt_se(est)
    exact = l2x_norm(phi) if phi.space.is_hilbert else None
    return EllNorm(value, se, est, exact)


def lift(f: LipschitzFn, phi: SimpleFunction) -> SimpleFunction:
    """``f(phi) = sum_j 1_{S_j} (x) f(x_j)`` on the same atoms."""
    if phi.space != f.X:
        raise InputError("simple function does not take values in the domain of f")
    return SimpleFunction(phi.masses, VectorTuple(f.Y, f(phi.values.vectors)))


def align(phi: SimpleFunction, psi: SimpleFunction, shared: bool = True,
          strict: bool = False) -> tuple[SimpleFunction, SimpleFunction]:
    """Re-express ``phi`` and ``psi`` on one atom list.

    With ``shared=True`` the two functions are declared to live on the same
    atoms; identical mass lists are returned unchanged. Otherwise (or when the
    masses differ and ``strict`` is off) the atoms are treated as disjoint:
    the union list is ``phi``'s atoms followed by ``psi``'s, each function
    padded with zero vectors on the other's atoms.
    """
    if phi.space != psi.space:
        raise InputError("simple functions take values in different spaces")
    if shared:
        if np.array_equal(phi.masses, psi.masses):
            return phi, psi
        if strict:
            raise InputError("atom lists differ but shared atoms were required")
    masses = np.concatenate([phi.masses, psi.masses])
    zp = np.zeros((len(psi.masses), phi.space.dim))
    zf = np.zeros((len(phi.masses), phi.space.dim))
    a = SimpleFunction(masses, VectorTuple(phi.space, np.vstack([phi.values.vectors, zp])))
    b = SimpleFunction(masses, VectorTuple(psi.space, np.vstack([zf, psi.values.vectors])))
    return a, b


def zero_like(phi: SimpleFunction) -> SimpleFunction:
    return phi.scaled(0.0)


@dataclass(frozen=True)
class LiftRatio:
    ratio: float
    std_error: float
    numerator: SumEstimate
    denominator: SumEstimate

    def to_json(self) -> dict:
        return {"ratio": self.ratio, "std_error": self.std_error,
                "numerator": self.numerator.to_json(), "denominator": self.denominator.to_json()}


def lift_lipschitz_ratio(f: LipschitzFn, phi: SimpleFunction, psi: SimpleFunction | None = None,
                         samples: int = 100_000, seed: int = 0, shared: bool = True,
                         workers: int = 1) -> LiftRatio:
    """``||u_{f(phi)} - u_{f(psi)}|| / ||u_phi - u_psi||`` with shared Gaussian draws.

    ``psi`` defaults to the zero function on ``phi``'s atoms.
    """
    psi = zero_like(phi) if psi is None else psi
    phi, psi = align(phi, psi, shared=shared)
    dx = phi - psi
    if not np.any(dx.values.vectors):
        raise InputError("phi and psi coincide; the ratio is undefined")
    dy = lift(f, phi) - lift(f, psi)
    num = squared_norm_samples(dy.gaussian_vectors(), f.Y, GAUSSIAN, samples, seed, workers)
    den = squared_norm_samples(dx.gaussian_vectors(), f.X, GAUSSIAN, samples, seed, workers)
    value, se = paired_ratio(num, den, 1.0)
    return LiftRatio(value, se, SumEstimate.from_values(num, seed),
                     SumEstimate.from_values(den, seed))
