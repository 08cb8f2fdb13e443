import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrukit.algebra import build_generator
from qrukit.model import (
    ArityError,
    GateStep,
    NotLayeredError,
    QruModel,
    base_pqc,
    evaluate_state,
    gradient,
    hypothesis,
    layered_view,
    value_and_gradient,
)
from qrukit.runner.oracles import random_model

X1 = build_generator("X", 1)
Z1 = build_generator("Z", 1)


def rot_model():
    # U = exp(iX theta), H = Z gives h = cos(2 theta)
    return QruModel(1, [GateStep.param(X1, 0)], Z1)


def sin_model():
    # U = exp(iZx) exp(iX pi/4), H = X gives h = sin(2x)
    steps = [GateStep.fixed(np.cos(np.pi / 4) * np.eye(2) + 1j * np.sin(np.pi / 4) * X1.matrix),
             GateStep.encoding(Z1)]
    return QruModel(1, steps, X1)


def test_empty_circuit_keeps_initial_state():
    m = QruModel(2, [], build_generator("Z0", 2))
    psi = evaluate_state(m, [], 0.3)
    assert np.allclose(psi, [1, 0, 0, 0])


def test_single_rotation_state():
    psi = evaluate_state(rot_model(), [np.pi / 4], 0.0)
    assert np.allclose(psi, [np.cos(np.pi / 4), 1j * np.sin(np.pi / 4)], atol=1e-12)


def test_identity_observable():
    rng = np.random.default_rng(0)
    m = random_model(rng, 3, 3)
    m = QruModel(m.n_qubits, m.steps, build_generator("I", m.n_qubits))
    th = rng.uniform(0, 6, (5, m.n_params))
    assert np.allclose(hypothesis(m, th, rng.normal(size=5)), 1.0)


def test_cos_and_sin_examples():
    assert hypothesis(rot_model(), [np.pi / 8], 0.0) == pytest.approx(np.sqrt(2) / 2, abs=1e-12)
    assert hypothesis(sin_model(), [], np.pi / 4) == pytest.approx(1.0, abs=1e-12)
    xs = np.linspace(-3, 3, 13)
    assert np.allclose(hypothesis(sin_model(), np.zeros(0), xs), np.sin(2 * xs), atol=1e-12)


def test_gradient_examples():
    assert gradient(rot_model(), [0.0], 0.0)[0] == pytest.approx(0.0, abs=1e-12)
    assert gradient(rot_model(), [np.pi / 8], 0.0)[0] == pytest.approx(-np.sqrt(2), abs=1e-12)


def test_arity_error():
    with pytest.raises(ArityError):
        hypothesis(rot_model(), [0.1, 0.2], 0.0)
    with pytest.raises(ArityError):
        gradient(rot_model(), 0.1, 0.0)


def test_batched_matches_loop():
    rng = np.random.default_rng(2)
    m = random_model(rng, 3, 4)
    th = rng.uniform(0, 6, (6, m.n_params))
    xs = rng.normal(size=6)
    h, g = value_and_gradient(m, th, xs)
    for i in range(6):
        assert h[i] == pytest.approx(hypothesis(m, th[i], xs[i]), abs=1e-12)
        assert np.allclose(g[i], gradient(m, th[i], xs[i]), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_norm_and_finite_difference(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 4, 4)
    th = rng.uniform(0, 2 * np.pi, m.n_params)
    x = float(rng.normal())
    psi = evaluate_state(m, th, x)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-10
    g = gradient(m, th, x)
    h = 1e-5
    fd = np.array([
        (hypothesis(m, th + h * e, x) - hypothesis(m, th - h * e, x)) / (2 * h) for e in np.eye(m.n_params)
    ])
    assert np.max(np.abs(g - fd)) <= 1e-6


def test_zero_mean_gradient():
    rng = np.random.default_rng(5)
    m = random_model(rng, 3, 3)
    n = 4000
    th = rng.uniform(0, 2 * np.pi, (n, m.n_params))
    g = gradient(m, th, np.full(n, 0.4))
    se = g.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(g.mean(axis=0)) <= 4 * se)


def test_single_qubit_gradient_variance():
    # Var[d/dtheta cos 2 theta] = E[4 sin^2 2 theta] = 2
    rng = np.random.default_rng(1)
    n = 10_000
    g = gradient(rot_model(), rng.uniform(0, 2 * np.pi, (n, 1)), np.zeros(n))[:, 0]
    sq = (g - g.mean()) ** 2
    assert abs(g.var(ddof=1) - 2.0) < 3 * sq.std(ddof=1) / np.sqrt(n)


def test_base_pqc():
    m = QruModel(1, [GateStep.param(X1, 0)], Z1)
    assert base_pqc(m).steps == m.steps
    enc = QruModel(1, [GateStep.param(X1, 0), GateStep.encoding(Z1)], X1)
    base = base_pqc(enc)
    assert hypothesis(base, [0.3], 0.0) == pytest.approx(hypothesis(base, [0.3], 2.0), abs=1e-14)
    rng = np.random.default_rng(3)
    rm = random_model(rng)
    th = rng.uniform(0, 6, rm.n_params)
    assert hypothesis(base_pqc(rm), th, 5.0) == pytest.approx(hypothesis(rm, th, 0.0), abs=1e-12)


def test_layered_view():
    def p(j):
        return GateStep.param(X1, j)

    e = GateStep.encoding(Z1)
    assert layered_view(QruModel(1, [p(0), e, p(1), e], Z1)).count == 2
    view = layered_view(QruModel(1, [p(0), p(1), e], Z1))
    assert view.count == 1 and len(view.layers[0].block) == 2
    view = layered_view(QruModel(1, [e], Z1))
    assert view.count == 1 and view.layers[0].block == ()
    with pytest.raises(NotLayeredError):
        layered_view(QruModel(1, [p(0)], Z1))
