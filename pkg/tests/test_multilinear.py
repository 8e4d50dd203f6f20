import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abstract_mixing.core_model import ExponentParams, Instance, ParameterError, ShapeError, WeightedFamily
from abstract_mixing.mixing import (
    ModelError,
    SeminormBallModel,
    check_seminorm_characterization,
    mixing_lower_bound,
)
from abstract_mixing.multilinear import (
    MultiFamily,
    MultilinearInstance,
    characterization_lhs,
    from_instance,
    multi_characterization_check,
    multi_mixing_lower_bound,
    multi_mixing_ratio,
    random_multilinear,
    reduce_t1,
    reduced_exponents,
)

E12 = ExponentParams(1.0, 2.0)


def linf_ball(nA, nC, nG, d, rng):
    return SeminormBallModel.linf(rng.uniform(-1, 1, (nA, nC, nG, d)))


def test_validation():
    H = (np.ones((4, 1, 1, 2)),)
    with pytest.raises(ShapeError):
        MultilinearInstance((2, 2), (1,), (1,), H, np.ones((3, 1, 1, 1)), (1.0,), E12)
    with pytest.raises(ShapeError):
        MultilinearInstance((2, 2), (1,), (1, 2), H, np.ones((4, 1, 2, 1)), (1.0,), E12)
    with pytest.raises(ParameterError):
        MultilinearInstance((2, 2), (1,), (1,), H, np.ones((4, 1, 1, 1)), (1.5,), E12)


def test_zero_witness():
    mi = random_multilinear(np.random.default_rng(0))
    zero = MultilinearInstance(mi.a_sizes, mi.c_sizes, mi.g_sizes, mi.H, np.zeros_like(mi.M), mi.p, mi.e)
    assert multi_mixing_lower_bound(zero, 30, 0)[0] == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_t1_reduction_bitwise(seed):
    rng = np.random.default_rng(seed)
    inst = Instance(rng.normal(size=(3, 2, 2)), rng.uniform(0.05, 1, (3, 2, 2, 3)), rng.normal(size=(3, 2, 2, 2)))
    e = ExponentParams(1.0, 2.0, 0.7)
    mi = from_instance(inst, e)
    a, fa = mixing_lower_bound(inst, e, None, 60, seed)
    b, _ = multi_mixing_lower_bound(mi, 60, seed)
    red = reduce_t1(mi)
    c, _ = mixing_lower_bound(red, reduced_exponents(mi), None, 60, seed)
    assert a == b == c
    np.testing.assert_array_equal(red.H, inst.H)
    np.testing.assert_array_equal(red.M, inst.M)


def test_identity_kernel_both_paths():
    rng = np.random.default_rng(1)
    H = rng.uniform(0.1, 1, (2, 1, 1, 3))
    inst = Instance(np.zeros((2, 1, 1)), H, H)
    e = ExponentParams(2.0, 2.0)
    mi = from_instance(inst, e)
    assert multi_mixing_lower_bound(mi, 30, 0)[0] == pytest.approx(1.0, rel=1e-12)
    assert mixing_lower_bound(reduce_t1(mi), reduced_exponents(mi), None, 30, 0)[0] == pytest.approx(1.0, rel=1e-12)


def test_reduce_errors():
    with pytest.raises(ParameterError):
        reduce_t1(random_multilinear(np.random.default_rng(2)))
    mi = random_multilinear(np.random.default_rng(2), a_sizes=(3,), g_sizes=(1, 2))
    with pytest.raises(ParameterError):
        reduce_t1(mi)


def test_constant_kernel_factor():
    rng = np.random.default_rng(3)
    q = 1.5
    mi = random_multilinear(rng, a_sizes=(2, 2), g_sizes=(1, 2), nK=(2, 3), e=ExponentParams(q, 3.0))
    H = (mi.H[0], np.ones_like(mi.H[1]))
    mi = MultilinearInstance(mi.a_sizes, mi.c_sizes, mi.g_sizes, H, mi.M, (1.0, q), mi.e)
    sigma = np.array([0.5, -2.0, 1.0])
    fam = MultiFamily(sigma, np.array([0, 3, 1]), np.zeros(3, int), np.array([[0, 1], [0, 0], [0, 1]]))
    first = np.max(np.sum(np.abs(sigma)[:, None] * H[0][fam.a, fam.c, 0, :], axis=0))
    hand = first * np.sum(np.abs(sigma) ** q) ** (1 / q)
    assert mi.denominator(fam) == pytest.approx(hand, rel=1e-14)
    # the joint g-index of (0, 1) in sizes (1, 2) is 1
    np.testing.assert_array_equal(mi.joint_g(fam.g), [1, 0, 1])


@given(st.integers(0, 10_000), st.integers(0, 1))
def test_denominator_monotone(seed, k):
    rng = np.random.default_rng(seed)
    mi = random_multilinear(rng)
    H = list(mi.H)
    H[k] = H[k] * (1 + rng.uniform(0, 1, H[k].shape))
    bigger = MultilinearInstance(mi.a_sizes, mi.c_sizes, mi.g_sizes, tuple(H), mi.M, mi.p, mi.e)
    assert multi_mixing_lower_bound(bigger, 30, seed)[0] <= multi_mixing_lower_bound(mi, 30, seed)[0] * (1 + 1e-12)


@given(st.integers(0, 10_000))
def test_case_split_agreement(seed):
    rng = np.random.default_rng(seed)
    ball = linf_ball(4, 1, 2, 2, rng)
    q = float(rng.uniform(0.5, 3))
    mi = random_multilinear(rng, e=ExponentParams(q, q), ball=ball)
    fam = next(iter([multi_mixing_lower_bound(mi, 5, seed)[1]]))
    vecs = rng.normal(size=(3, 2))
    a = characterization_lhs(ball, mi.as_family(fam), vecs, q, q, "equal")
    b = characterization_lhs(ball, mi.as_family(fam), vecs, q, q, "general")
    assert a == pytest.approx(b, rel=1e-9)
    r1 = multi_characterization_check(mi, ball, math.inf, 20, seed, path="equal").max_ratio
    r2 = multi_characterization_check(mi, ball, math.inf, 20, seed, path="general").max_ratio
    assert r1 == pytest.approx(r2, rel=1e-9)


def test_equal_path_needs_q_eq_s():
    rng = np.random.default_rng(4)
    ball = linf_ball(1, 1, 1, 2, rng)
    fam = WeightedFamily([1.0], [0], [0], [0])
    with pytest.raises(ParameterError):
        characterization_lhs(ball, fam, np.eye(2), 1.0, 2.0, "equal")


def test_single_vertex_t1_matches_single_factor():
    rng = np.random.default_rng(5)
    ball = linf_ball(2, 1, 1, 2, rng)
    inst = ball.instance(np.zeros((2, 1, 1)), rng.uniform(0.1, 1, (2, 1, 1, 3)))
    mi = from_instance(inst, E12)
    vec = ball.vertices[:1]
    wf = WeightedFamily([1.0, 0.4], [0, 1], [0, 0], [0, 0])
    mf = MultiFamily(wf.sigma, wf.a, wf.c, wf.g[:, None])
    a = check_seminorm_characterization(inst, ball, E12, None, math.inf, 0, 0, [(wf, vec)]).max_ratio
    b = multi_characterization_check(mi, ball, math.inf, 0, 0, [(mf, vec)]).max_ratio
    assert abs(a - b) <= 1e-12
    a = check_seminorm_characterization(inst, ball, E12, None, math.inf, 40, 3).max_ratio
    b = multi_characterization_check(mi, ball, math.inf, 40, 3).max_ratio
    assert abs(a - b) <= 1e-12


def test_model_mismatch():
    rng = np.random.default_rng(6)
    ball = linf_ball(4, 1, 2, 2, rng)
    mi = random_multilinear(rng)
    with pytest.raises(ModelError):
        multi_characterization_check(mi, ball, math.inf, 5, 0)


@pytest.mark.parametrize("seed", range(50))
def test_characterization_below_constant(seed):
    rng = np.random.default_rng(seed)
    ball = linf_ball(4, 1, 2, 2, rng)
    mi = random_multilinear(rng, ball=ball)
    const, wit = multi_mixing_lower_bound(mi, 200, seed)
    char = multi_characterization_check(mi, ball, const, 100, seed)
    assert char.max_ratio <= const + 1e-6
    assert multi_mixing_ratio(mi, wit) == const
