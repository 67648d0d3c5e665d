import math

import numpy as np
import pytest

from lipsums.errors import ConstructionError, InputError
from lipsums.geometry import (
    Embedding,
    coordinate_embedding,
    embedded_basis,
    equiangular_embedding,
    random_embedding,
    separation_check,
)
from lipsums.spaces import INF, lp, lp_norms


@pytest.mark.parametrize("N", [2, 3, 6, 17, 64])
def test_equiangular_closed_form(N):
    E = equiangular_embedding(N)
    assert E.gain_lower == 1.0
    assert abs(E.norm_upper - 1 / math.cos(math.pi / (2 * N))) <= 1e-15
    # dense angle sweep brackets the sup norm of T u over the unit circle
    th = np.linspace(0, 2 * np.pi, 400_001)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    v = lp_norms(u @ E.map.matrix.T, INF)
    assert v.min() >= 1 - 1e-12
    assert v.max() <= E.norm_upper + 1e-12
    assert v.max() >= E.norm_upper - 1e-9


def test_equiangular_n6_distortion():
    assert abs(equiangular_embedding(6).distortion - 1.035276180410083) <= 1e-12


def test_coordinate_embedding_is_isometry():
    E = coordinate_embedding(3, lp(2, 5))
    assert E.distortion == 1.0
    with pytest.raises(InputError):
        coordinate_embedding(3, lp(1, 5))


@pytest.mark.parametrize("n,target,eps", [(2, lp(INF, 64), 0.05), (3, lp(1, 300), 0.25)])
def test_random_embedding_certification(n, target, eps):
    E = random_embedding(n, target, eps, cert_points=5000, seed=1)
    assert E.distortion <= 1 + eps
    assert E.certification.kind == "sampled"
    z = np.random.default_rng(2).standard_normal((50_000, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    v = target.norms(z @ E.map.matrix.T)
    assert v.min() >= 1 - 1e-9
    assert v.max() <= E.norm_upper + 1e-9


def test_random_embedding_failure_is_reported():
    with pytest.raises(ConstructionError, match="larger target"):
        random_embedding(3, lp(INF, 4), 0.01, cert_points=500, max_retries=3)


def test_random_embedding_rejects_small_target():
    with pytest.raises(InputError):
        random_embedding(5, lp(2, 3), 0.1)


def test_embedding_json_round_trip():
    E = random_embedding(2, lp(INF, 32), 0.1, cert_points=1000, seed=3)
    F = Embedding.from_json(E.to_json())
    assert np.array_equal(F.map.matrix, E.map.matrix)
    assert F.certification == E.certification


def test_embedded_basis_lengths():
    E = equiangular_embedding(8)
    b = embedded_basis(E, [2.0, 0.5])
    assert np.allclose(b.vectors, E.map.matrix.T * np.array([[2.0], [0.5]]))
    with pytest.raises(InputError):
        embedded_basis(E, [1.0, -1.0])


def test_separation_equiangular():
    rep = separation_check(equiangular_embedding(64), trials=10_000, seed=0)
    assert rep.passed and rep.min_ratio >= 1 - 1e-9
    assert rep.trials == 10_002


def test_separation_random_embedding_reports_cert_minimum():
    E = random_embedding(3, lp(INF, 128), 0.3, cert_points=2000, seed=0)
    rep = separation_check(E, trials=5000)
    assert rep.cert_min_ratio is not None and rep.cert_min_ratio >= 1 - 1e-9
    assert rep.min_ratio >= 1 - 1e-9
