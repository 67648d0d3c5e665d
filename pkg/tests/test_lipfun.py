import math

import numpy as np
import pytest

from lipsums.errors import InputError
from lipsums.geometry import embedded_basis, equiangular_embedding
from lipsums.lipfun import (
    SQRT2,
    McShaneScalar,
    NormFunctional,
    RayBump,
    SectorBump,
    finite_data_quotient,
    from_json,
    lip_constant_lower_mc,
    pair_separation,
    sector_indicator,
)
from lipsums.spaces import INF, VectorTuple, lp


def _pair_quotients(f, k=50_000, seed=0, scale=3.0):
    g = np.random.default_rng(seed)
    x = scale * g.standard_normal((k, f.X.dim))
    xp = x + g.standard_normal((k, f.X.dim)) * np.exp(g.uniform(-6, 1, (k, 1)))
    return f.Y.norms(f(x) - f(xp)) / f.X.norms(x - xp)


@pytest.fixture(scope="module")
def sector():
    E = equiangular_embedding(16)
    centers = embedded_basis(E)
    targets = VectorTuple(lp(1, 2), np.eye(2))
    return SectorBump(centers, targets, np.array([0.5, 3.0]))


def test_sector_interpolates(sector):
    a = sector.scales
    out = sector(sector.centers.vectors * a[:, None])
    assert np.max(np.abs(out - a[:, None] * sector.targets.vectors)) <= 1e-12
    assert np.all(sector(np.zeros(16)) == 0)


def test_sector_supports_are_disjoint(sector):
    g = np.random.default_rng(1)
    j = g.integers(0, 2, 20_000)
    z = g.standard_normal((20_000, 16))
    z /= np.abs(z).max(axis=1, keepdims=True)
    pts = sector.centers.vectors[j] + g.uniform(0, 0.8, (20_000, 1)) * z
    pts *= np.exp(g.uniform(-3, 3, (20_000, 1)))
    active = (sector.bumps(pts) > 0).sum(axis=1)
    assert active.max() <= 1
    assert sector_indicator(sector, sector.centers.vectors[1] * 3.0) == {1}


def test_sector_lipschitz_bound(sector):
    assert _pair_quotients(sector).max() <= SQRT2 + 1e-9
    est = lip_constant_lower_mc(sector, 5000, seed=2)
    assert 1.0 <= est.value <= SQRT2 + 1e-9


def test_sector_preconditions():
    X = lp(2, 2)
    close = VectorTuple(X, np.array([[1.0, 0.0], [0.9, 0.1]]))
    with pytest.raises(InputError, match="separation"):
        SectorBump(close, VectorTuple(lp(1, 2), np.eye(2)))
    with pytest.raises(InputError, match="norm one"):
        SectorBump(VectorTuple(X, np.eye(2)), VectorTuple(lp(1, 2), 2 * np.eye(2)))


def test_pair_separation_orthonormal_l2():
    assert pair_separation(VectorTuple(lp(2, 3), np.eye(3))) == pytest.approx(1.0, abs=1e-12)


def test_ray_bump_homogeneous_and_bounded():
    E = equiangular_embedding(6)
    y = VectorTuple(lp(1, 2), np.array([[2.0, 0.0], [0.0, 0.5]]))
    centers = embedded_basis(E, y.norms())
    h = RayBump(centers, y, 0.05)
    assert h.lip_upper() == pytest.approx(3.96985, abs=1e-5)
    for t in (1e-3, 1.0, 250.0):
        assert np.max(np.abs(h(t * centers.vectors) - t * y.vectors)) <= 1e-12
    assert _pair_quotients(h).max() <= h.lip_upper() + 1e-9


def test_ray_bump_needs_separation():
    X = lp(2, 2)
    c = VectorTuple(X, np.array([[1.0, 0.0], [1.0, 0.5]]))
    with pytest.raises(InputError):
        RayBump(c, VectorTuple(lp(2, 2), np.eye(2)), 0.05)


def test_norm_functional():
    f = NormFunctional(lp(INF, 3), lp(2, 2), np.array([0.6, 0.8]))
    x = np.array([1.0, -4.0, 2.0])
    assert np.allclose(f(x), 4.0 * np.array([0.6, 0.8]))
    assert _pair_quotients(f).max() <= 1 + 1e-12
    assert lip_constant_lower_mc(f, 4000).value == pytest.approx(1.0, abs=1e-6)


def test_mcshane_reproduces_data_and_bound():
    g = np.random.default_rng(3)
    pts = VectorTuple(lp(1, 3), g.standard_normal((6, 3)))
    vals = g.standard_normal(6)
    aug = VectorTuple(pts.space, np.vstack([pts.vectors, np.zeros(3)]))
    L = finite_data_quotient(aug, np.append(vals, 0.0))
    f = McShaneScalar(pts, vals, L, lp(2, 1))
    assert np.max(np.abs(f.scalar(pts.vectors) - vals)) <= 1e-12
    assert f.scalar(np.zeros(3)) == 0.0
    assert _pair_quotients(f).max() <= L * (1 + 1e-12)


def test_mcshane_is_the_largest_extension():
    # any L-Lipschitz extension lies below min_j(v_j + L d(x, p_j)); the max formula is one
    g = np.random.default_rng(4)
    pts = VectorTuple(lp(2, 2), g.standard_normal((5, 2)))
    vals = g.standard_normal(5)
    aug = np.vstack([pts.vectors, np.zeros(2)])
    L = finite_data_quotient(VectorTuple(pts.space, aug), np.append(vals, 0.0))
    f = McShaneScalar(pts, vals, L, lp(2, 1))
    x = 3 * g.standard_normal((2000, 2))
    d = np.linalg.norm(x[:, None, :] - aug[None], axis=2)
    lower = np.max(np.append(vals, 0.0)[None] - L * d, axis=1)
    assert np.all(f.scalar(x) >= lower - 1e-12)


def test_finite_data_quotient_brute_force():
    g = np.random.default_rng(5)
    X, Y = lp(3, 2), lp(INF, 2)
    xs, ys = g.standard_normal((7, 2)), g.standard_normal((7, 2))
    brute = max(Y.norm(ys[i] - ys[j]) / X.norm(xs[i] - xs[j])
                for i in range(7) for j in range(7) if i != j)
    q = finite_data_quotient(VectorTuple(X, xs), VectorTuple(Y, ys))
    assert q == pytest.approx(brute, rel=1e-14)
    with pytest.raises(InputError):
        finite_data_quotient(VectorTuple(X, np.zeros((2, 2))), [0.0, 1.0])


def test_json_round_trip(sector):
    for f in (sector, NormFunctional(lp(2, 2), lp(1, 1), np.array([1.0]))):
        g = from_json(f.to_json())
        x = np.random.default_rng(6).standard_normal((10, f.X.dim))
        assert np.array_equal(f(x), g(x))
    with pytest.raises(InputError):
        from_json({"variant": "nope"})


def test_single_and_batch_evaluation_agree(sector):
    x = np.random.default_rng(7).standard_normal((4, 16))
    batch = sector(x)
    assert all(np.array_equal(sector(x[i]), batch[i]) for i in range(4))
    assert math.isfinite(float(sector(x[0]).sum()))
