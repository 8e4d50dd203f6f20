import numpy as np
import pytest

from abstract_mixing.core_model import ExponentParams, Instance, ParameterError, ShapeError, SimplexMeasure
from abstract_mixing.adapters import (
    LinearOperatorSpec,
    LipschitzMapSpec,
    ValidationError,
    build_embedding_Jmu,
    build_linear_instance,
    build_lipschitz_instance,
    check_metric,
    classical_linear_mixing,
    classical_lipschitz_mixing,
    distance_net,
    embedding_domination_gap,
    lipschitz_codomain_rows,
    lipschitz_constant,
    linear_codomain_rows,
    path_metric,
    random_linear_spec,
    random_lipschitz_spec,
)
from abstract_mixing.mixing import check_conditions, mixing_upper_domination

E12 = ExponentParams(1.0, 2.0)


def test_identity_operator():
    spec = LinearOperatorSpec(np.eye(2))
    inst = build_linear_instance(spec)
    np.testing.assert_array_equal(inst.H, inst.M)
    for q in (1.0, 2.0):
        assert mixing_upper_domination(inst, ExponentParams(q, q), 6).value == pytest.approx(1.0, rel=1e-9)


def test_zero_operator():
    inst = build_linear_instance(LinearOperatorSpec(np.zeros((2, 2))))
    assert np.all(inst.M == 0) and np.all(inst.Q == 0)
    assert mixing_upper_domination(inst, E12, 6).value == 0.0


def test_diag_generic_matches_classical():
    spec = LinearOperatorSpec(np.diag([1.0, 0.0]))
    generic = mixing_upper_domination(build_linear_instance(spec), E12, 10).value
    assert generic == pytest.approx(classical_linear_mixing(spec, 1.0, 2.0, 10), rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_random_generic_matches_classical(seed):
    rng = np.random.default_rng(seed)
    lin = random_linear_spec(rng)
    assert mixing_upper_domination(build_linear_instance(lin), E12, 10).value == pytest.approx(
        classical_linear_mixing(lin, 1.0, 2.0, 10), rel=1e-6)
    lip = random_lipschitz_spec(rng)
    assert mixing_upper_domination(build_lipschitz_instance(lip), E12, 10).value == pytest.approx(
        classical_lipschitz_mixing(lip, 1.0, 2.0, 10), rel=1e-6)


def test_linear_validation():
    with pytest.raises(ShapeError):
        LinearOperatorSpec(np.eye(2), K_net=np.ones((2, 3)))
    with pytest.raises(ValidationError):
        LinearOperatorSpec(np.eye(2), K_net=np.array([[1.0, 0.5]]))
    with pytest.raises(ParameterError):
        LinearOperatorSpec(np.eye(2), domain_norm="weird")


def test_isometry_two_points():
    D = path_metric(2)
    spec = LipschitzMapSpec(D, D, [0, 1])
    inst = build_lipschitz_instance(spec)
    assert inst.probe_shape == (2, 1, 1)
    np.testing.assert_allclose(inst.Q.ravel(), [1.0, 1.0])
    for q in (1.0, 2.0):
        assert mixing_upper_domination(inst, ExponentParams(q, q), 6).value == pytest.approx(1.0, rel=1e-9)


def test_constant_map():
    spec = LipschitzMapSpec(path_metric(3), path_metric(2), [1, 1, 1])
    inst = build_lipschitz_instance(spec)
    assert np.all(inst.M == 0) and np.all(inst.Q == 0)
    assert mixing_upper_domination(inst, E12, 6).value == 0.0


def test_path_contraction():
    spec = LipschitzMapSpec(path_metric(3), 0.5 * path_metric(3), [0, 1, 2])
    generic = mixing_upper_domination(build_lipschitz_instance(spec), E12, 10).value
    assert generic == pytest.approx(classical_lipschitz_mixing(spec, 1.0, 2.0, 10), rel=1e-6)
    assert 0 < generic <= 0.5 + 1e-9


def test_metric_and_net_validation():
    with pytest.raises(ValidationError):
        check_metric([[0, 1], [2, 0]])
    with pytest.raises(ValidationError):
        check_metric([[1, 1], [1, 0]])
    with pytest.raises(ValidationError):
        check_metric([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    D = path_metric(3)
    with pytest.raises(ValidationError):
        LipschitzMapSpec(D, D, [0, 1, 2], K_net=[[0.0, 2.0, 2.0]])
    with pytest.raises(ValidationError):
        LipschitzMapSpec(D, D, [0, 1, 2], K_net=[[1.0, 1.0, 1.0]])
    with pytest.raises(ValidationError):
        LipschitzMapSpec(D, D, [0, 1, 5])


@pytest.mark.parametrize("seed", range(10))
def test_generated_nets_are_valid(seed):
    from abstract_mixing.adapters import random_metric
    D = random_metric(np.random.default_rng(seed), 5)
    check_metric(D)
    for f in distance_net(D):
        assert f[0] == 0.0
        assert lipschitz_constant(f, D) <= 1 + 1e-12


def test_embedding_uniform_is_norm_one():
    lin = LinearOperatorSpec(np.array([[1.0, 0.5], [-0.25, 0.75]]))
    inst = build_linear_instance(lin)
    mu = SimplexMeasure.uniform(inst.nW)
    layer, pi = build_embedding_Jmu(inst, mu, 2.0, linear_codomain_rows(lin))
    assert abs(pi - 1.0) <= 1e-9
    assert embedding_domination_gap(layer, mu, 2.0) <= 1e-12
    assert check_conditions(layer)["VI"]["violation"] <= 0
    lip = LipschitzMapSpec(path_metric(3), 0.5 * path_metric(3), [0, 1, 2])
    inst = build_lipschitz_instance(lip)
    _, pi = build_embedding_Jmu(inst, SimplexMeasure.uniform(inst.nW), 2.0, lipschitz_codomain_rows(lip))
    assert abs(pi - 1.0) <= 1e-9


def test_embedding_image_rows_at_most_one():
    lip = LipschitzMapSpec(path_metric(3), 0.5 * path_metric(3), [0, 1, 2])
    inst = build_lipschitz_instance(lip)
    _, pi = build_embedding_Jmu(inst, SimplexMeasure.uniform(inst.nW), 2.0)
    assert 0 < pi <= 1 + 1e-12


def test_embedding_zero_instance():
    inst = build_linear_instance(LinearOperatorSpec(np.zeros((2, 2))))
    _, pi = build_embedding_Jmu(inst, SimplexMeasure.uniform(inst.nW), 2.0)
    assert pi == 0.0


def test_embedding_dirac():
    inst = build_linear_instance(LinearOperatorSpec(np.eye(2)))
    mu = SimplexMeasure.dirac(0, inst.nW)
    layer, pi = build_embedding_Jmu(inst, mu, 2.0)
    np.testing.assert_allclose(layer.Q1, np.abs(layer.H1[..., 0]))
    assert pi == pytest.approx(1.0, abs=1e-12)


def test_embedding_errors():
    inst = build_linear_instance(LinearOperatorSpec(np.eye(2)))
    with pytest.raises(ParameterError):
        build_embedding_Jmu(inst, SimplexMeasure.uniform(inst.nW), 0.5)
    with pytest.raises(ParameterError):
        build_embedding_Jmu(inst, SimplexMeasure.uniform(3), 2.0)
    with pytest.raises(ParameterError):
        build_embedding_Jmu(inst, [0.5, 0.6, 0.0, 0.0], 2.0)


def test_degenerate_domain():
    with pytest.raises(ValidationError):
        build_lipschitz_instance(LipschitzMapSpec([[0.0]], [[0.0]], [0], K_net=[[0.0]], W_net=[[0.0]]))
