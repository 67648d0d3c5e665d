"""Witness search for type 2, cotype 2 and R-boundedness constants, and the
Lipschitz transfer ratio.

All constants are reported as lower bounds attained by an explicit witness.
The search maximizes a Monte Carlo objective on a fixed set of draws (common
random numbers, one set per restart); each restart's final witness is then
re-evaluated on a fresh, larger sample shared by all restarts, and the
largest re-evaluated value is reported. With Rademacher noise and
``n <= EXACT_SEARCH_N`` every objective is computed exactly by enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import rng
from .errors import CapacityError, InputError
from .geometry import (
    Embedding,
    coordinate_embedding,
    embedded_basis,
    equiangular_embedding,
    random_embedding,
)
from .lipfun import LipschitzFn, RayBump, SectorBump
from .randomsum import (
    GAUSSIAN,
    MAX_EXACT_N,
    RADEMACHER,
    NoiseSpec,
    SumEstimate,
    exact_rademacher_values,
    noise_block,
    paired_ratio,
    sign_patterns,
    squared_norm_samples,
)
from .spaces import INF, LinearMap, NormedSpace, VectorTuple

EXACT_SEARCH_N = 12


def derive_seed(seed: int, *tags) -> int:
    """Deterministic 64-bit child seed of ``seed`` for the given tags."""
    words = [int(seed) & rng.MASK64]
    for t in tags:
        if isinstance(t, str):
            words.extend(t.encode())
        else:
            words.append(int(t) & rng.MASK64)
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class WitnessSearchConfig:
    restarts: int = 8
    iters: int = 200
    step: float = 0.25
    samples_per_eval: int = 4096
    eval_samples: int = 100_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ("restarts", "iters", "samples_per_eval", "eval_samples", "workers"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be positive")
        if not self.step > 0:
            raise InputError("step must be positive")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    def to_json(self) -> dict:
        # workers is left out: results never depend on it
        return {"restarts": self.restarts, "iters": self.iters, "step": self.step,
                "samples_per_eval": self.samples_per_eval, "eval_samples": self.eval_samples,
                "seed": self.seed}


@dataclass(frozen=True, eq=False)
class ConstantEstimate:
    constant: str
    lower_bound: float
    std_error: float
    witness: VectorTuple
    noise: NoiseSpec
    diagnostics: tuple[SumEstimate, SumEstimate | None]
    exact: bool = False
    restart: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.witness)

    def to_json(self) -> dict:
        out = {
            "constant": self.constant,
            "space": self.witness.space.to_json(),
            "noise": self.noise.to_json(),
            "n": self.n,
            "lower_bound": self.lower_bound,
            "std_error": self.std_error,
            "exact": self.exact,
            "witness": self.witness.vectors.tolist(),
            "restart": self.restart,
            "seeds": [d.seed for d in self.diagnostics if d is not None],
            "samples": [d.samples for d in self.diagnostics if d is not None],
            "diagnostics": [d.to_json() if d is not None else None for d in self.diagnostics],
        }
        out.update(self.extras)
        return out


# --- second-moment oracles --------------------------------------------------


class MomentOracle:
    """``E ||sum_j xi_j v_j||^2`` for any tuple ``v`` on a fixed set of draws.

    With ``exact=True`` the draws are all Rademacher sign patterns (up to a
    global sign, which does not change the norm).
    """

    def __init__(self, space: NormedSpace, noise: NoiseSpec, n: int, samples: int,
                 seed: int, exact: bool = False):
        self.space = space
        self.exact = exact
        if exact:
            self.xi = sign_patterns(n, 0, 1 << (n - 1))
        else:
            self.xi = noise_block(noise, n, seed, 0, samples)

    def __call__(self, v: np.ndarray) -> float:
        return float(np.mean(self.space.norms(self.xi @ v) ** 2))


def _moment(vectors, space, noise, samples, seed, exact, workers) -> tuple[np.ndarray, SumEstimate]:
    if exact:
        vals = exact_rademacher_values(vectors, space)
        return vals, SumEstimate(math.fsum(vals) / len(vals), 0.0, len(vals), seed)
    vals = squared_norm_samples(vectors, space, noise, samples, seed, workers)
    return vals, SumEstimate.from_values(vals, seed)


def use_exact(noise: NoiseSpec, n: int, exact: bool | None = None) -> bool:
    """Whether to enumerate sign patterns; ``None`` picks enumeration for small Rademacher n."""
    if exact is None:
        return noise.family == "rademacher" and n <= EXACT_SEARCH_N
    if exact:
        if noise.family != "rademacher":
            raise InputError("exact evaluation requires rademacher noise")
        if n > MAX_EXACT_N:
            raise CapacityError(
                f"exact Rademacher enumeration needs 2^{n} terms; n must be <= {MAX_EXACT_N}")
    return bool(exact)


# --- generic coordinate ascent ---------------------------------------------


def _ascend(objective: Callable[[np.ndarray], float], x0: np.ndarray, iters: int,
            step: float, gen: np.random.Generator,
            project: Callable[[np.ndarray], np.ndarray] | None = None) -> tuple[np.ndarray, float]:
    """Random coordinate ascent with an adaptive relative step; never accepts a worse point."""
    x = project(x0) if project else x0.copy()
    cur = objective(x)
    n, d = x.shape
    scale = float(np.sqrt(np.mean(x * x))) or 1.0
    h = step
    for _ in range(iters):
        j, i = int(gen.integers(n)), int(gen.integers(d))
        moved = False
        for sgn in (1.0, -1.0):
            trial = x.copy()
            trial[j, i] += sgn * h * scale
            if project:
                trial = project(trial)
            val = objective(trial)
            if val > cur:
                x, cur, moved = trial, val, True
                break
        h = min(h * 1.3, 4.0) if moved else max(h * 0.85, 1e-6)
    return x, cur


def _basis_start(space: NormedSpace, n: int) -> np.ndarray:
    x = np.zeros((n, space.dim))
    for j in range(n):
        x[j, j % space.dim] = 1.0
    return x / space.norms(x)[:, None]


def _start(space: NormedSpace, n: int, seed: int, restart: int) -> np.ndarray:
    if restart == 0:
        return _basis_start(space, n)
    return rng.generator(seed, rng.SEARCH, restart).standard_normal((n, space.dim))


def _check_common(space: NormedSpace, noise: NoiseSpec, n: int):
    if not isinstance(space, NormedSpace):
        raise InputError("space must be a NormedSpace")
    if int(n) != n or n < 1:
        raise InputError("n must be a positive integer")


def _search_ratio(kind: str, space: NormedSpace, noise: NoiseSpec, n: int,
                  config: WitnessSearchConfig, exact: bool | None = None) -> ConstantEstimate:
    """Shared driver for type2 / cotype2 / normalized type2 searches."""
    _check_common(space, noise, n)
    exact = use_exact(noise, n, exact)
    project = None
    if kind == "type2_normalized":
        target = n ** -0.5

        def project(v):
            nv = space.norms(v)
            nv = np.where(nv > 0, nv, 1.0)
            return v * (target / nv)[:, None]

    def ratio_from(m2: float, v: np.ndarray) -> float:
        s = float(np.sum(space.norms(v) ** 2))
        if kind == "cotype2":
            return math.sqrt(s / m2) if m2 > 0 else 0.0
        return math.sqrt(m2 / s) if s > 0 else 0.0

    exact_oracle = MomentOracle(space, noise, n, 0, 0, exact=True) if exact else None
    witnesses = []
    for r in range(config.restarts):
        oracle = exact_oracle or MomentOracle(
            space, noise, n, config.samples_per_eval, derive_seed(config.seed, "search", r))
        x0 = _start(space, n, config.seed, r)
        gen = rng.generator(config.seed, rng.SEARCH, 1_000_000 + r)
        x, _ = _ascend(lambda v: ratio_from(oracle(v), v), x0, config.iters, config.step, gen,
                       project)
        witnesses.append(x)

    eval_seed = derive_seed(config.seed, "eval")
    best = None
    for r, x in enumerate(witnesses):
        _, est = _moment(x, space, noise, config.eval_samples, eval_seed, exact, config.workers)
        value = ratio_from(est.mean, x)
        se = _ratio_se(kind, est, value)
        if best is None or value > best[0]:
            best = (value, se, r, x, est)
    value, se, r, x, est = best
    return ConstantEstimate(kind, value, se, VectorTuple(space, x), noise, (est, None),
                            exact=exact, restart=r, extras={"config": config.to_json()})


def _ratio_se(kind: str, est: SumEstimate, value: float) -> float:
    if est.std_error == 0 or est.mean <= 0:
        return 0.0
    # delta method for sqrt(m2 / s) and sqrt(s / m2) with s deterministic
    return value * est.std_error / (2.0 * est.mean)


def type2_lower(space: NormedSpace, noise: NoiseSpec, n: int,
                config: WitnessSearchConfig = WitnessSearchConfig(),
                exact: bool | None = None) -> ConstantEstimate:
    """Lower bound on the type 2 constant from ``(E||sum xi_j x_j||^2 / sum ||x_j||^2)^(1/2)``."""
    return _search_ratio("type2", space, noise, n, config, exact)


def cotype2_lower(space: NormedSpace, noise: NoiseSpec, n: int,
                  config: WitnessSearchConfig = WitnessSearchConfig(),
                  exact: bool | None = None) -> ConstantEstimate:
    """Lower bound on the cotype 2 constant from ``(sum ||x_j||^2 / E||sum xi_j x_j||^2)^(1/2)``."""
    return _search_ratio("cotype2", space, noise, n, config, exact)


def type2_normalized_sup(space: NormedSpace, noise: NoiseSpec, n: int,
                         config: WitnessSearchConfig = WitnessSearchConfig(),
                         exact: bool | None = None) -> ConstantEstimate:
    """Type 2 search restricted to tuples with ``||y_j|| = n^(-1/2)`` for all j.

    For Gaussian and Rademacher noise the supremum over this slice (and all n)
    is the Gaussian type 2 constant itself.
    """
    if noise.family not in ("gaussian", "rademacher"):
        raise InputError("type2_normalized_sup supports gaussian or rademacher noise only")
    return _search_ratio("type2_normalized", space, noise, n, config, exact)


def replay(est: ConstantEstimate, seed: int, samples: int | None = None,
           workers: int = 1) -> tuple[float, float]:
    """Re-evaluate a type/cotype witness on fresh draws; returns (value, std_error)."""
    if est.constant not in ("type2", "cotype2", "type2_normalized"):
        raise InputError(f"replay does not support {est.constant!r}")
    x = est.witness
    samples = samples or est.diagnostics[0].samples
    _, m = _moment(x.vectors, x.space, est.noise, samples, seed, est.exact, workers)
    s = float(np.sum(x.norms() ** 2))
    value = math.sqrt(s / m.mean) if est.constant == "cotype2" else math.sqrt(m.mean / s)
    return value, _ratio_se(est.constant, m, value)


# --- transfer ratio ----------------------------------------------------------


@dataclass(frozen=True)
class TransferResult:
    ratio: float
    std_error: float
    numerator: SumEstimate
    denominator: SumEstimate
    lip: float

    def to_json(self) -> dict:
        return {"ratio": self.ratio, "std_error": self.std_error, "lip": self.lip,
                "numerator": self.numerator.to_json(), "denominator": self.denominator.to_json()}


def transfer_ratio(f: LipschitzFn, tup: VectorTuple, scales=None, noise: NoiseSpec = GAUSSIAN,
                   samples: int = 100_000, seed: int = 0, exact: bool = False,
                   workers: int = 1) -> TransferResult:
    """``(E||sum xi_j a_j^-1 f(a_j x_j)||^2)^(1/2) / (||f||_Lip (E||sum xi_j x_j||^2)^(1/2))``.

    ``||f||_Lip`` is the analytic bound ``f.lip_upper()``. Numerator and
    denominator use the same draws. ``exact=True`` (Rademacher only)
    enumerates all sign patterns instead.
    """
    if tup.space != f.X:
        raise InputError("tuple does not live in the domain of f")
    n = len(tup)
    a = np.ones(n) if scales is None else np.asarray(scales, dtype=float)
    if a.shape != (n,) or np.any(a <= 0):
        raise InputError("scales must be n positive reals")
    if not np.any(tup.vectors):
        raise InputError("all x_j are zero; the ratio is undefined")
    if exact and noise.family != "rademacher":
        raise InputError("exact evaluation requires rademacher noise")
    z = f(tup.vectors * a[:, None]) / a[:, None]
    num_vals, num = _moment(z, f.Y, noise, samples, seed, exact, workers)
    den_vals, den = _moment(tup.vectors, f.X, noise, samples, seed, exact, workers)
    value, se = paired_ratio(num_vals, den_vals, f.lip_upper())
    if exact:
        se = 0.0  # a full enumeration has no sampling error
    return TransferResult(value, se, num, den, f.lip_upper())


def default_embedding(X: NormedSpace, n: int, eps: float, seed: int) -> Embedding:
    """The embedding ``l_2^n -> X`` used by the counterexample assembly."""
    if X.p == 2.0 and X.weights is None and X.dim >= n:
        return coordinate_embedding(n, X)
    if X.p is INF and X.weights is None and n == 2:
        return equiangular_embedding(X.dim)
    return random_embedding(n, X, eps, seed=seed)


def transfer_counterexample_search(X: NormedSpace, Y: NormedSpace, n: int, eps: float = 0.05,
                                   config: WitnessSearchConfig = WitnessSearchConfig(),
                                   noise: NoiseSpec = GAUSSIAN, candidates: int = 1,
                                   exact: bool = False,
                                   construction: str = "sector") -> ConstantEstimate:
    """Assemble the bump map that defeats the transfer inequality.

    ``construction="sector"`` (Gaussian or Rademacher noise): targets ``y_j``
    are a normalized type 2 witness of ``Y`` rescaled to norm one, centers are
    ``x_j = T e_j`` for an almost-isometric ``T: l_2^n -> X`` with minimal gain
    one, and ``f`` is the sector bump with all ``a_j = 1``. Then
    ``a_j^-1 f(a_j x_j) = y_j`` exactly, so the numerator is the type 2 sum of
    ``Y`` while the denominator is at most ``||T||`` times the Euclidean one.

    ``construction="ray"`` (any noise): targets are an unconstrained type 2
    witness, centers ``x_j = ||y_j|| T e_j`` and ``f`` is the ray bump with
    ``eps = ||T|| - 1``; it interpolates ``f(a x_j) = a y_j`` for every ``a > 0``.

    With ``candidates > 1`` random embeddings from several seeds are tried and
    the largest ratio is kept.
    """
    if construction not in ("sector", "ray"):
        raise InputError(f"unknown construction {construction!r}")
    if construction == "sector":
        if noise.family not in ("gaussian", "rademacher"):
            raise InputError("the sector construction supports gaussian or rademacher noise; "
                             "use construction='ray' for other noise")
        ywit = type2_normalized_sup(Y, noise, n, config)
        targets = VectorTuple(Y, ywit.witness.vectors / ywit.witness.norms()[:, None])
    else:
        targets = type2_lower(Y, noise, n, config).witness
    eval_seed = derive_seed(config.seed, "transfer")
    exact = exact or use_exact(noise, n)
    best = None
    for c in range(max(1, candidates)):
        E = default_embedding(X, n, eps, derive_seed(config.seed, "embed", c))
        if construction == "sector":
            centers = embedded_basis(E)
            f = SectorBump(centers, targets)
        else:
            centers = embedded_basis(E, targets.norms())
            f = RayBump(centers, targets, max(E.norm_upper - 1.0, 1e-12))
        tr = transfer_ratio(f, centers, None, noise, config.eval_samples, eval_seed, exact,
                            config.workers)
        if best is None or tr.ratio > best[0].ratio:
            best = (tr, E, f, centers)
        if E.certification.kind == "closed_form":
            break
    tr, E, f, centers = best
    _, ysum = _moment(targets.vectors, Y, noise, config.eval_samples, eval_seed, exact,
                      config.workers)
    extras = {
        "construction": construction,
        "targets": targets.vectors.tolist(),
        "scales": [1.0] * n,
        "embedding": E.to_json(),
        "distortion": E.distortion,
        "function": f.to_json(),
        "transfer": tr.to_json(),
        "target_sum": ysum.to_json(),
        # f(x_j) = y_j exactly, so these agree up to rounding
        "identity_gap": abs(tr.numerator.mean - ysum.mean),
        "config": config.to_json(),
    }
    return ConstantEstimate("transfer", tr.ratio, tr.std_error, centers, noise,
                            (tr.numerator, tr.denominator), exact=exact, extras=extras)


# --- R-boundedness -----------------------------------------------------------


def rbound_lower(family: Sequence[LinearMap], config: WitnessSearchConfig = WitnessSearchConfig(),
                 n: int | None = None) -> ConstantEstimate:
    """Lower bound on the R-bound of ``family`` with Rademacher noise.

    The ratio ``(E||sum r_j T_j x_j||^2 / E||sum r_j x_j||^2)^(1/2)`` is maximized
    over tuples of length ``n`` (default ``len(family)``), operator ``j`` being
    ``family[j % len(family)]``.
    """
    family = list(family)
    if not family:
        raise InputError("family must be nonempty")
    X, Y = family[0].domain, family[0].codomain
    if any(T.domain != X or T.codomain != Y for T in family):
        raise InputError("all maps must share domain and codomain")
    n = len(family) if n is None else int(n)
    if n < 1:
        raise InputError("n must be >= 1")
    mats = np.stack([family[j % len(family)].matrix for j in range(n)])
    exact = n <= EXACT_SEARCH_N

    def images(v):
        return np.einsum("jab,jb->ja", mats, v)

    def ratio(mx, my):
        return math.sqrt(my / mx) if mx > 0 else 0.0

    witnesses = []
    for r in range(config.restarts):
        sd = derive_seed(config.seed, "search", r)
        ox = MomentOracle(X, RADEMACHER, n, config.samples_per_eval, sd, exact)
        oy = MomentOracle(Y, RADEMACHER, n, config.samples_per_eval, sd, exact)
        gen = rng.generator(config.seed, rng.SEARCH, 1_000_000 + r)
        x, _ = _ascend(lambda v: ratio(ox(v), oy(images(v))), _start(X, n, config.seed, r),
                       config.iters, config.step, gen)
        witnesses.append(x)

    eval_seed = derive_seed(config.seed, "eval")
    best = None
    for r, x in enumerate(witnesses):
        yv, ey = _moment(images(x), Y, RADEMACHER, config.eval_samples, eval_seed, exact,
                         config.workers)
        xv, ex = _moment(x, X, RADEMACHER, config.eval_samples, eval_seed, exact, config.workers)
        if ex.mean <= 0:
            continue
        value, se = paired_ratio(yv, xv, 1.0)
        if exact:
            se = 0.0
        if best is None or value > best[0]:
            best = (value, se, r, x, ex, ey)
    value, se, r, x, ex, ey = best
    return ConstantEstimate("rbound", value, se, VectorTuple(X, x), RADEMACHER, (ex, ey),
                            exact=exact, restart=r, extras={"config": config.to_json()})


# --- growth experiments ------------------------------------------------------

ESTIMATORS = {
    "type2": type2_lower,
    "cotype2": cotype2_lower,
    "type2_normalized": type2_normalized_sup,
}


def growth_curve(constant: str, p, ns: Sequence[int], noise: NoiseSpec,
                 config: WitnessSearchConfig = WitnessSearchConfig()) -> list[tuple[int, float, float]]:
    """Rows ``(n, lower_bound, std_error)`` for ``l_p^n`` with ``n`` vectors each."""
    if constant not in ESTIMATORS:
        raise InputError(f"unknown constant {constant!r}; expected one of {sorted(ESTIMATORS)}")
    rows = []
    for n in ns:
        est = ESTIMATORS[constant](NormedSpace(p, n), noise, n, config)
        rows.append((int(n), est.lower_bound, est.std_error))
    return rows
