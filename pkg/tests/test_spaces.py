import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lipsums.errors import InputError
from lipsums.spaces import (
    INF,
    LinearMap,
    NormedSpace,
    VectorTuple,
    dual_exponent,
    identity_map,
    lp,
    lp_norms,
    min_gain,
    norming_vector,
    operator_norm,
    weighted_lp,
)

exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.0, INF])
vec = arrays(np.float64, 5, elements=st.floats(-1e3, 1e3, allow_nan=False))
# numpy sums |x|^p directly, which underflows for tiny entries
moderate = st.one_of(st.just(0.0), st.floats(1e-30, 1e3), st.floats(-1e3, -1e-30))


def _np_ord(p):
    return np.inf if p is INF else p


@given(p=exponents, x=arrays(np.float64, 5, elements=moderate))
def test_norm_matches_numpy(p, x):
    assert math.isclose(lp(p, 5).norm(x), np.linalg.norm(x, ord=_np_ord(p)),
                        rel_tol=1e-12, abs_tol=1e-300)


@pytest.mark.parametrize("p", [1.5, 3.0, 7.0])
def test_tiny_vectors_do_not_underflow(p):
    x = np.full(5, 3.97e-237)
    assert lp(p, 5).norm(x) == pytest.approx(3.97e-237 * 5 ** (1 / p), rel=1e-12)


@settings(max_examples=200)
@given(p=exponents, x=vec, y=vec, t=st.floats(-100, 100, allow_nan=False))
def test_norm_axioms(p, x, y, t):
    X = lp(p, 5)
    assert X.norm(x + y) <= (X.norm(x) + X.norm(y)) * (1 + 1e-12) + 1e-9
    assert math.isclose(X.norm(t * x), abs(t) * X.norm(x), rel_tol=1e-12, abs_tol=1e-9)


@given(x=vec)
def test_norms_decrease_in_p(x):
    vals = [lp(p, 5).norm(x) for p in (1.0, 1.5, 2.0, 3.0, INF)]
    assert all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(vals, vals[1:]))


def test_large_p_does_not_overflow():
    x = np.array([1e200, 1e200])
    assert math.isclose(lp(50, 2).norm(x), 1e200 * 2 ** (1 / 50), rel_tol=1e-12)


def test_weighted_norm():
    X = weighted_lp(3, [1.0, 8.0])
    assert math.isclose(X.norm([1.0, 1.0]), 9 ** (1 / 3), rel_tol=1e-14)
    Y = weighted_lp(INF, [1.0, 3.0])
    assert Y.norm([2.0, 1.0]) == 3.0


def test_invalid_spaces():
    with pytest.raises(InputError, match="p must be ≥ 1"):
        lp(0.5, 3)
    with pytest.raises(InputError):
        lp(2, 0)
    with pytest.raises(InputError):
        weighted_lp(2, [1.0, -1.0])
    with pytest.raises(InputError):
        lp(2, 3).norm(np.ones(4))


def test_dual_exponent():
    assert dual_exponent(1.0) is INF
    assert dual_exponent(INF) == 1.0
    assert dual_exponent(3.0) == 1.5


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0, INF])
def test_norming_vector_attains_dual_norm(p):
    w = np.array([[0.3, -2.0, 1.0, 0.5]])
    x = norming_vector(w, p)
    assert math.isclose(lp_norms(x, p)[0], 1.0, rel_tol=1e-12)
    assert math.isclose(float(x[0] @ w[0]), lp_norms(w, dual_exponent(p))[0], rel_tol=1e-12)


def test_json_round_trip():
    X = weighted_lp(INF, [1.0, 2.0])
    assert NormedSpace.from_json(X.to_json()) == X
    assert X.to_json()["p"] == "inf"
    t = VectorTuple(X, np.arange(6.0).reshape(3, 2))
    assert np.array_equal(VectorTuple.from_json(t.to_json()).vectors, t.vectors)
    T = LinearMap(np.ones((2, 3)), lp(1, 3), X)
    assert np.array_equal(LinearMap.from_json(T.to_json()).matrix, T.matrix)


def test_vector_tuple_is_read_only():
    t = VectorTuple(lp(2, 2), np.eye(2))
    with pytest.raises(ValueError):
        t.vectors[0, 0] = 5.0


# --- operator norms against independent oracles --------------------------------


def _grid_sup(a, p, r, k=200_000, seed=0):
    """Crude sampled sup over the unit sphere of l_p^2 (a lower bound)."""
    th = np.linspace(0, 2 * np.pi, k, endpoint=False)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    u /= lp_norms(u, p)[:, None]
    v = lp_norms(u @ a.T, r)
    return v.max(), v.min()


def test_l2_l2_is_singular_value():
    a = np.random.default_rng(0).standard_normal((4, 3))
    T = LinearMap(a, lp(2, 3), lp(2, 4))
    s = np.linalg.svd(a, compute_uv=False)
    assert operator_norm(T) == (s[0], True)
    assert math.isclose(min_gain(T).value, s[-1], rel_tol=1e-12)


@pytest.mark.parametrize("p,r", [(1.0, 3.0), (1.5, INF), (2.0, INF), (INF, INF), (1.0, 1.0)])
def test_closed_forms_match_brute_force(p, r):
    a = np.random.default_rng(1).standard_normal((3, 2))
    T = LinearMap(a, lp(p, 2), lp(r, 3))
    hi, _ = _grid_sup(a, p, r)
    val = operator_norm(T)
    assert val.certified
    assert hi <= val.value * (1 + 1e-12)
    assert val.value - hi < 1e-6 * val.value


def test_l2_plane_into_l1_arc_enumeration():
    a = np.random.default_rng(2).standard_normal((7, 2))
    T = LinearMap(a, lp(2, 2), lp(1, 7))
    hi, lo = _grid_sup(a, 2.0, 1.0)
    assert operator_norm(T).certified
    assert abs(operator_norm(T).value - hi) < 1e-6
    # the grid minimum can only overshoot the exact minimum
    assert lo - 1e-4 <= min_gain(T).value <= lo * (1 + 1e-12)


def test_power_method_is_a_lower_bound():
    a = np.random.default_rng(3).standard_normal((5, 4))
    T = LinearMap(a, lp(1.5, 4), lp(3, 5))
    est = operator_norm(T, mode="estimate", seed=4)
    assert not est.certified
    x = np.random.default_rng(5).standard_normal((50_000, 4))
    sampled = (lp_norms(x @ a.T, 3.0) / lp_norms(x, 1.5)).max()
    assert est.value >= sampled * (1 - 1e-9)


def test_estimate_mode_agrees_with_exact_on_l2():
    a = np.random.default_rng(6).standard_normal((4, 4))
    T = LinearMap(a, lp(2, 4), lp(2, 4))
    assert math.isclose(operator_norm(T, mode="estimate").value, operator_norm(T).value,
                        rel_tol=1e-8)


def test_min_gain_rank_deficient_and_identity():
    T = LinearMap(np.array([[1.0, 1.0], [1.0, 1.0]]), lp(2, 2), lp(INF, 2))
    assert min_gain(T) == (0.0, True)
    assert min_gain(identity_map(lp(2, 3))).value == pytest.approx(1.0, abs=1e-12)


def test_min_gain_l_inf_descent_upper_bound():
    a = np.random.default_rng(7).standard_normal((6, 3))
    T = LinearMap(a, lp(2, 3), lp(INF, 6))
    mg = min_gain(T)
    x = np.random.default_rng(8).standard_normal((200_000, 3))
    sampled = (lp_norms(x @ a.T, INF) / np.linalg.norm(x, axis=1)).min()
    assert mg.value <= sampled * (1 + 1e-9)
    assert mg.value >= 0.97 * sampled


def test_weighted_map_norm():
    # diag(2, 1) between weighted l_inf spaces is the identity after rescaling
    X = weighted_lp(INF, [1.0, 2.0])
    Y = weighted_lp(INF, [0.5, 2.0])
    T = LinearMap(np.diag([2.0, 1.0]), X, Y)
    assert operator_norm(T).value == pytest.approx(1.0, abs=1e-14)
