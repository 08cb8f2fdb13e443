import numpy as np
import pytest

from qrukit.algebra import build_generator, haar_unitary
from qrukit.gradients import (
    DatasetData,
    GaussianData,
    UniformData,
    UniformTheta,
    absorption_witness,
    check_variance_bound,
    information_content,
    layerwise_witness,
    variance_scan,
)
from qrukit.model import ArityError, GateStep, QruModel, layered_view
from qrukit.runner.oracles import random_model
from qrukit.spectrum import CapacityError

X1 = build_generator("X", 1)
Z1 = build_generator("Z", 1)


def rot_model():
    return QruModel(1, [GateStep.param(X1, 0)], Z1)


def shared_model():
    # exp(iZx) exp(iZ theta) sandwiched so that the output depends on theta + x
    steps = [GateStep.param(X1, 0), GateStep.param(Z1, 1), GateStep.encoding(Z1), GateStep.param(X1, 2)]
    return QruModel(1, steps, Z1)


def two_qubit_model():
    n = 2
    steps = [
        GateStep.param(build_generator("X", n), 0),
        GateStep.param(build_generator("ZZ", n), 1),
        GateStep.encoding(build_generator("Y", n)),
        GateStep.param(build_generator("X", n), 2),
        GateStep.param(build_generator("ZZ", n), 3),
        GateStep.encoding(build_generator("Y", n)),
    ]
    return QruModel(n, steps, build_generator("Z0", n))


def test_samplers():
    rng = np.random.default_rng(0)
    assert UniformTheta()(rng, 3, 2).shape == (3, 2)
    x = UniformData(1.0, 2.0)(rng, 1000)
    assert x.min() >= 1.0 and x.max() < 2.0
    assert GaussianData(5.0, 0.1)(rng, 1000).mean() == pytest.approx(5.0, abs=0.02)
    assert set(DatasetData([1.0, 2.0])(rng, 50)) <= {1.0, 2.0}
    with pytest.raises(ValueError):
        DatasetData([])


def test_identity_observable_has_zero_variance():
    rng = np.random.default_rng(1)
    m = random_model(rng, 2, 2)
    m = QruModel(m.n_qubits, m.steps, build_generator("I", m.n_qubits))
    scan = variance_scan(m, n_theta=50, n_x=4, seed=0)
    assert np.allclose(scan.expected_var, 0, atol=1e-20)
    assert np.allclose(scan.var_at_zero, 0, atol=1e-20)
    assert scan.grad_norm_mean == pytest.approx(0.0, abs=1e-12)


def test_single_qubit_variance():
    scan = variance_scan(rot_model(), n_theta=10_000, n_x=1, seed=3)
    assert abs(scan.var_at_zero[0] - 2.0) <= 3 * scan.var_at_zero_se[0]


def test_sampler_arity_error():
    with pytest.raises(ArityError):
        variance_scan(rot_model(), theta_sampler=lambda rng, n, m: np.zeros((n, m + 1)), n_theta=10, seed=0)


def test_shared_generator_variances_agree():
    scan = variance_scan(shared_model(), n_theta=4000, n_x=8, seed=4)
    diff, err = scan.difference()
    assert np.all(diff <= 3 * err)


def test_jensen_chain_and_zero_mean():
    m = two_qubit_model()
    scan = variance_scan(m, n_theta=2000, n_x=8, seed=5)
    assert np.all(scan.var_of_mean <= scan.expected_var + 3 * np.hypot(scan.var_of_mean_se, scan.expected_var_se))
    assert np.all(np.abs(scan.mean_grad) <= 4 * scan.mean_grad_se)


def test_witness_zero_without_encodings():
    m = two_qubit_model()
    w = absorption_witness(m, 0, "right", n_theta=50, seed=0)
    assert w.value == 0.0 and w.bias == 0.0


def test_witness_shared_generator_within_bias():
    m = QruModel(1, [GateStep.param(Z1, 0), GateStep.encoding(Z1)], X1)
    w = absorption_witness(m, 0, "left", n_theta=4000, seed=1)
    assert w.value <= 3 * w.bias + 3 * w.stderr


def test_witness_positive_and_seed_stable():
    m = two_qubit_model()
    a = absorption_witness(m, 2, "right", n_theta=3000, seed=10)
    b = absorption_witness(m, 2, "right", n_theta=3000, seed=11)
    assert a.value > 5 * a.bias and b.value > 5 * b.bias
    assert abs(a.value - b.value) <= 3 * np.hypot(a.stderr, b.stderr)


def test_witness_capacity():
    m = QruModel(6, [GateStep.param(build_generator("X", 6), 0), GateStep.encoding(build_generator("Z", 6))],
                 build_generator("Z0", 6))
    with pytest.raises(CapacityError):
        absorption_witness(m, 0, "left", n_theta=10, seed=0)


def test_layerwise_identity_encoding():
    zero = build_generator(np.zeros((4, 4)), 2)
    w = layerwise_witness(lambda rng: haar_unitary(4, rng), zero, n_theta=50, seed=0)
    assert w.value == pytest.approx(0.0, abs=1e-12)


def test_layerwise_local_two_design_absorbs():
    def block(rng):
        return np.kron(haar_unitary(2, rng), haar_unitary(2, rng))

    w = layerwise_witness(block, build_generator("Z0", 2), n_theta=4000, seed=2)
    assert w.value <= 3 * w.bias + 3 * w.stderr


def test_layerwise_shared_generator_layer():
    z = build_generator("Z", 2)
    w = layerwise_witness([GateStep.param(z, 0)], z, n_theta=4000, seed=3)
    assert w.value <= 3 * w.bias + 3 * w.stderr


def test_bound_checks():
    m = two_qubit_model()
    scan = variance_scan(m, n_theta=2000, n_x=8, seed=6)
    right = absorption_witness(m, 2, "right", n_theta=1000, seed=7, n_x=8)
    left = absorption_witness(m, 2, "left", n_theta=1000, seed=8, n_x=8)
    first = layered_view(m).layers[0]
    layer = layerwise_witness(first.block, first.encoding.generator, n_theta=1000, seed=9, n_x=8)
    rep = check_variance_bound(scan, right, left, m, layer)
    assert rep.passed
    assert rep.layered_rhs >= rep.rhs
    other = absorption_witness(m, 3, "left", n_theta=100, seed=8)
    with pytest.raises(ValueError):
        check_variance_bound(scan, right, other, m)


def test_bound_with_zero_witness():
    m = QruModel(1, [GateStep.param(Z1, 0), GateStep.encoding(Z1), GateStep.param(X1, 1)], Z1)
    scan = variance_scan(m, n_theta=4000, n_x=8, seed=12)
    right = absorption_witness(m, 1, "right", n_theta=200, seed=1)
    left = absorption_witness(m, 1, "left", n_theta=200, seed=2)
    assert left.value == 0.0
    diff, err = scan.difference()
    assert diff[1] <= 3 * err[1] + 4 * right.value


def test_information_content_flat():
    m = QruModel(1, [GateStep.param(X1, 0)], build_generator("I", 1))
    ic = information_content(m, 0.0, seed=0)
    assert ic.grad_proxy == 0.0 and ic.eps_max == 0.0
    assert np.all(ic.info == 0)


def test_information_content_single_qubit():
    # E|d/dtheta cos 2 theta| = 4 / pi
    ic = information_content(rot_model(), 0.0, {"step_size": 1.0}, seed=1)
    assert 0.5 * 4 / np.pi <= ic.grad_proxy <= 2 * 4 / np.pi
    assert ic.info.max() <= 1.0


def test_information_content_rejects_short_walk():
    with pytest.raises(ValueError):
        information_content(rot_model(), 0.0, {"n_steps": 10})
