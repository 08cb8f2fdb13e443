import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrukit.algebra import DimensionError, build_generator, haar_unitary
from qrukit.harmonic import (
    FrequencyProfile,
    apply_encoding,
    apply_unitary,
    frequency_weights,
    init_harmonic,
    measure_fourier,
    simulate_harmonic,
)
from qrukit.model import GateStep, QruModel, evaluate_state, hypothesis
from qrukit.runner.oracles import random_model
from qrukit.spectrum import CapacityError

X1 = build_generator("X", 1)
Z1 = build_generator("Z", 1)
PLUS = np.array([1, 1]) / np.sqrt(2)


def sin_model():
    u = np.cos(np.pi / 4) * np.eye(2) + 1j * np.sin(np.pi / 4) * X1.matrix
    return QruModel(1, [GateStep.fixed(u), GateStep.encoding(Z1)], X1)


def test_init():
    hs = init_harmonic([1, 0], 1.0)
    assert hs.keys.tolist() == [[0]]
    assert np.allclose(hs.coeffs[0], [1, 0])
    hs = init_harmonic(PLUS, 1.0)
    assert np.allclose(hs.coeffs[0], PLUS)
    assert hs.norm() == pytest.approx(1.0)
    assert frequency_weights(hs) == {(0,): pytest.approx(1.0)}
    with pytest.raises(ValueError):
        init_harmonic([1, 1], 1.0)


def test_apply_unitary():
    hs = init_harmonic(PLUS, 1.0)
    assert np.allclose(apply_unitary(hs, np.eye(2)).coeffs, hs.coeffs)
    u = haar_unitary(2, seed=1)
    assert np.allclose(apply_unitary(hs, u).coeffs[0], u @ PLUS)
    with pytest.raises(DimensionError):
        apply_unitary(hs, np.eye(4))


def test_encoding_examples():
    hs = apply_encoding(init_harmonic([1, 0], 1.0), Z1)
    assert hs.keys.tolist() == [[1]]
    assert np.allclose(hs.coeffs[0], [1, 0])
    w = frequency_weights(apply_encoding(init_harmonic(PLUS, 1.0), Z1))
    assert w == {(-1,): pytest.approx(0.5), (1,): pytest.approx(0.5)}
    zero = build_generator(np.zeros((2, 2)), 1)
    hs = apply_encoding(init_harmonic(PLUS, 1.0), zero)
    assert hs.keys.tolist() == [[0]] and np.allclose(hs.coeffs[0], PLUS)


def test_no_encoding_model_matches_statevector():
    rng = np.random.default_rng(4)
    steps = [GateStep.param(build_generator("Y", 2), 0), GateStep.fixed(haar_unitary(4, rng))]
    m = QruModel(2, steps, build_generator("Z0", 2))
    hs = simulate_harmonic(m, [0.7], mu=1.0)
    assert hs.keys.tolist() == [[0]]
    assert np.allclose(hs.coeffs[0], evaluate_state(m, [0.7], 0.0))


def test_worked_single_qubit_case():
    hs = simulate_harmonic(sin_model(), [])
    assert frequency_weights(hs) == {(-1,): pytest.approx(0.5), (1,): pytest.approx(0.5)}
    prof = measure_fourier(hs, X1)
    assert prof.coefficient(2) == pytest.approx(-0.5j, abs=1e-12)
    assert prof.coefficient(-2) == pytest.approx(0.5j, abs=1e-12)
    assert abs(prof.coefficient(0)) < 1e-12


def test_identity_observable_profile():
    rng = np.random.default_rng(9)
    m = random_model(rng, 3, 4)
    prof = measure_fourier(simulate_harmonic(m, rng.uniform(0, 6, m.n_params)), build_generator("I", m.n_qubits))
    assert prof.keys.shape[0] == 1
    assert prof.coefficient(np.zeros(prof.dims, dtype=int)) == pytest.approx(1.0, abs=1e-12)


def test_weights_invariant_under_unitary():
    hs = simulate_harmonic(sin_model(), [])
    after = apply_unitary(hs, haar_unitary(2, seed=5))
    a, b = frequency_weights(hs), frequency_weights(after)
    assert a.keys() == b.keys()
    assert all(abs(a[k] - b[k]) < 1e-12 for k in a)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_reconstruction_matches_statevector(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 4, 6)
    th = rng.uniform(0, 2 * np.pi, m.n_params)
    hs = simulate_harmonic(m, th)
    assert abs(hs.norm() - 1) <= 1e-10
    xs = rng.uniform(-5, 5, 50)
    for x in xs[:5]:
        assert np.allclose(hs.state_at(x), evaluate_state(m, th, x), atol=1e-9)
    prof = measure_fourier(hs, m.observable)
    assert np.max(np.abs(prof.evaluate(xs) - hypothesis(m, th, xs))) <= 1e-9
    assert prof.symmetry_error() <= 1e-10
    # Parseval-type bound
    assert np.sum(np.abs(prof.coeffs) ** 2) <= m.observable.spectral_norm ** 2 + 1e-10


def test_profile_matches_fft():
    rng = np.random.default_rng(11)
    n, L = 2, 3
    g = build_generator("0.5*X", n)
    steps = []
    for layer in range(L):
        steps += [GateStep.fixed(haar_unitary(4, rng)), GateStep.encoding(g)]
    m = QruModel(n, steps, build_generator("Z0", n))
    prof = measure_fourier(simulate_harmonic(m, []), m.observable)
    K = int(np.max(np.abs(prof.keys)))
    grid = 2 * K + 1
    xs = 2 * np.pi * np.arange(grid) / grid
    fft = np.fft.fft(hypothesis(m, np.zeros(0), xs)) / grid
    for k in range(-K, K + 1):
        assert abs(prof.coefficient(k) - fft[k % grid]) <= 1e-8


def test_support_growth_bound():
    n, L = 3, 5
    g = build_generator("X", n)
    steps = []
    for layer in range(L):
        steps += [GateStep.fixed(haar_unitary(8, layer)), GateStep.encoding(g)]
    hs = simulate_harmonic(QruModel(n, steps, g), [])
    # eigenvalues -3, -1, 1, 3 on the mu = 1 lattice
    assert np.max(np.abs(hs.keys)) <= 3 * L
    assert hs.size <= 2 * L * 3 + 1


def test_capacity_error():
    g = build_generator("X", 3)
    steps = []
    for layer in range(6):
        steps += [GateStep.fixed(haar_unitary(8, layer)), GateStep.encoding(g)]
    with pytest.raises(CapacityError, match="harmonic"):
        simulate_harmonic(QruModel(3, steps, g), [], capacity=10)


def test_profile_json_roundtrip():
    prof = measure_fourier(simulate_harmonic(sin_model(), []), X1)
    back = FrequencyProfile.from_json(prof.to_json())
    assert np.array_equal(back.keys, prof.keys)
    assert np.allclose(back.coeffs, prof.coeffs)
    assert back.observable_norm == prof.observable_norm
