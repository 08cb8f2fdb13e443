"""Brute-force cross-checks between independent computation routes.

Each case returns a dict with at least ``case``, ``max_error``, ``tolerance``
and ``passed``.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .._rng import make_rng
from ..algebra import build_generator, haar_unitary
from ..dirichlet import DirichletParams, dirichlet_mean, dirichlet_moment, dirichlet_sample, dirichlet_var
from ..harmonic import measure_fourier, simulate_harmonic
from ..model import GateStep, QruModel, gradient, hypothesis
from ..spectrum import SpectrumKernel, convolve, extract_kernel, power_convolve

GENERATORS = ("X", "Y", "Z", "0.5*X", "ZZ", "Z0", "X0 X1", "0.5*Z0 + 0.5*I", "Y1", "ZZ_all")


def random_model(rng, n_max: int = 4, l_max: int = 8) -> QruModel:
    """A random layered model mixing Pauli-sum generators and Haar blocks."""
    n = int(rng.integers(2, n_max + 1))
    L = int(rng.integers(1, l_max + 1))

    def pick():
        return build_generator(GENERATORS[int(rng.integers(len(GENERATORS)))], n)

    enc = pick()
    steps, j = [], 0
    for layer in range(L):
        if rng.random() < 0.3:
            steps.append(GateStep.fixed(haar_unitary(2**n, rng), layer))
        for _ in range(int(rng.integers(1, 4))):
            steps.append(GateStep.param(pick(), j, layer))
            j += 1
        steps.append(GateStep.encoding(enc if rng.random() < 0.7 else pick(), layer))
    steps.append(GateStep.param(pick(), j, L))
    return QruModel(n, steps, pick())


def harmonic_vs_statevector(seed=0, n_models: int = 50, n_x: int = 20) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(n_models):
        model = random_model(rng)
        theta = rng.uniform(0, 2 * np.pi, model.n_params)
        xs = rng.uniform(-np.pi, np.pi, n_x)
        prof = measure_fourier(simulate_harmonic(model, theta), model.observable)
        direct = hypothesis(model, theta, xs)
        worst = max(worst, float(np.max(np.abs(prof.evaluate(xs) - direct))))
    return {"case": "harmonic", "models": n_models, "max_error": worst, "tolerance": 1e-9,
            "passed": worst <= 1e-9}


def binomial_kernel(l_max: int = 20) -> dict:
    base = SpectrumKernel.from_dict({0: 0.5, 1: 0.5}, mu=1.0, N=2)
    worst = 0.0
    for L in range(1, l_max + 1):
        k = power_convolve(base, L)
        expect = np.array([comb(L, int(i)) / 2**L for i in k.keys[:, 0]])
        worst = max(worst, float(np.max(np.abs(k.weights - expect))), abs(k.keys.shape[0] - (L + 1)))
    return {"case": "binomial", "max_error": worst, "tolerance": 1e-12, "passed": worst <= 1e-12}


def geometric_kernel(l_max: int = 10) -> dict:
    # generators 2^l * (Z + I) / 2 on one qubit; together they cover {0..2^L - 1} uniformly
    acc = SpectrumKernel.from_dict({0: 1.0}, mu=1.0, N=1)
    worst = 0.0
    for L in range(1, l_max + 1):
        g = build_generator(f"{2 ** (L - 1) / 2!r}*Z + {2 ** (L - 1) / 2!r}*I", 1)
        acc = convolve(acc, extract_kernel(g, mu_hint=[1.0]))
        expect_keys = np.arange(2**L)
        err = 0.0 if np.array_equal(acc.keys[:, 0], expect_keys) else 1.0
        worst = max(worst, err, float(np.max(np.abs(acc.weights - 2.0**-L))))
    return {"case": "geometric", "max_error": worst, "tolerance": 1e-12, "passed": worst <= 1e-12}


def finite_difference(seed=0, n_triples: int = 100, h: float = 1e-5) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(n_triples):
        model = random_model(rng, n_max=3, l_max=3)
        theta = rng.uniform(0, 2 * np.pi, model.n_params)
        x = float(rng.normal())
        g = gradient(model, theta, x)
        shifts = np.eye(model.n_params) * h
        fd = (hypothesis(model, theta + shifts, x) - hypothesis(model, theta - shifts, x)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(g - fd))))
    return {"case": "gradient", "max_error": worst, "tolerance": 1e-6, "passed": worst <= 1e-6}


def dirichlet_moments(seed=0, n_samples: int = 100_000) -> dict:
    """Log-Gamma moments against closed forms, and Gamma-normalized samples against both."""
    rng = make_rng(seed)
    p = DirichletParams(rng.uniform(0.2, 3.0, 5))
    a, s = p.alpha, p.alpha_sum
    worst = 0.0
    for i in range(a.size):
        e = np.zeros(a.size)
        e[i] = 1
        worst = max(worst, abs(dirichlet_moment(p, e) - a[i] / s))
        e[i] = 2
        worst = max(worst, abs(dirichlet_moment(p, e) - a[i] * (a[i] + 1) / (s * (s + 1))))
    draws = dirichlet_sample(p, rng, n_samples)
    z_mean = np.abs(draws.mean(axis=0) - dirichlet_mean(p)) / (draws.std(axis=0, ddof=1) / np.sqrt(n_samples))
    sq = (draws - dirichlet_mean(p)) ** 2
    z_var = np.abs(sq.mean(axis=0) - dirichlet_var(p)) / (sq.std(axis=0, ddof=1) / np.sqrt(n_samples))
    max_z = float(max(z_mean.max(), z_var.max()))
    return {"case": "dirichlet", "max_error": float(worst), "tolerance": 1e-12, "max_z": max_z,
            "passed": bool(worst <= 1e-12 and max_z <= 4.0)}


CASES = {
    "harmonic": harmonic_vs_statevector,
    "binomial": binomial_kernel,
    "geometric": geometric_kernel,
    "gradient": finite_difference,
    "dirichlet": dirichlet_moments,
}
