"""Gradient-descent fitting of hypothesis functions to Fourier step targets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .._rng import make_rng
from ..harmonic import FrequencyProfile, measure_fourier, simulate_harmonic
from ..model import QruModel, value_and_gradient

TWO_PI = 2 * np.pi


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, iteration: int, loss: float, initial: float):
        self.iteration = iteration
        self.loss = loss
        self.initial = initial
        super().__init__(f"{message} (iteration {iteration}, loss {loss:.6g}, initial {initial:.6g})")


@dataclass
class TrainConfig:
    k_target: int = 4
    grid: int = 256
    learning_rate: float = 0.05
    iterations: int = 2000
    divergence_factor: float = 10.0
    divergence_patience: int = 50

    def __post_init__(self):
        if self.k_target < 1:
            raise ValueError("k_target must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.grid < 2 * self.k_target + 1:
            raise ValueError(f"a grid of {self.grid} points cannot represent frequency {self.k_target}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class TrainResult:
    theta: np.ndarray
    profile: FrequencyProfile
    loss_trace: np.ndarray
    k: np.ndarray
    target_abs: np.ndarray
    fitted_abs: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1])


def step_target(k_target: int) -> Callable[[np.ndarray], np.ndarray]:
    """y(x) = sum_{|k| <= K} exp(i k x) / (2K + 1), a periodic sinc."""
    def y(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, 1.0)
        for k in range(1, k_target + 1):
            out += 2 * np.cos(k * x)
        return out / (2 * k_target + 1)
    return y


def max_frequency(model: QruModel) -> float:
    """Largest frequency the hypothesis function can contain."""
    return 2 * sum(g.spectral_norm for g in model.encoding_generators)


def _profile_abs(profile: FrequencyProfile, ks: np.ndarray) -> np.ndarray:
    lookup: dict[float, complex] = {}
    for f, c in zip(profile.frequencies, profile.coeffs):
        key = round(float(f), 9)
        lookup[key] = lookup.get(key, 0j) + c
    return np.array([abs(lookup.get(round(float(k), 9), 0j)) for k in ks])


def train(
    model: QruModel,
    config: TrainConfig,
    seed=None,
    target: Callable[[np.ndarray], np.ndarray] | None = None,
    theta0=None,
) -> TrainResult:
    """Minimize the mean squared error to ``target`` on a uniform grid over [0, 2 pi).

    Plain gradient descent with a fixed learning rate. The default target is
    the Fourier step of width ``config.k_target``; any callable of x may be
    given instead. Raises :class:`TrainingDiverged` when the loss stays above
    ``divergence_factor`` times its initial value for ``divergence_patience``
    consecutive iterations.
    """
    if target is None:
        if config.k_target > max_frequency(model) + 1e-9:
            raise ValueError(
                f"target frequency {config.k_target} exceeds the model's maximum {max_frequency(model):g}"
            )
        target = step_target(config.k_target)
    m = model.n_params
    rng = make_rng(seed)
    theta = rng.uniform(0, TWO_PI, m) if theta0 is None else np.array(theta0, dtype=float)
    xs = np.linspace(0, TWO_PI, config.grid, endpoint=False)
    y = np.asarray(target(xs), dtype=float)

    trace = np.empty(config.iterations + 1)
    initial = None
    strikes = 0
    for it in range(config.iterations + 1):
        h, g = value_and_gradient(model, np.broadcast_to(theta, (config.grid, m)), xs)
        r = h - y
        loss = float(np.mean(r**2))
        trace[it] = loss
        if initial is None:
            initial = loss
        if not np.isfinite(loss):
            raise TrainingDiverged("loss is not finite", it, loss, initial)
        strikes = strikes + 1 if loss > config.divergence_factor * initial else 0
        if strikes >= config.divergence_patience:
            raise TrainingDiverged("loss diverged", it, loss, initial)
        if it == config.iterations:
            break
        theta = theta - config.learning_rate * 2 * np.mean(r[:, None] * g, axis=0)

    profile = measure_fourier(simulate_harmonic(model, theta), model.observable)
    top = int(np.floor(max_frequency(model) + 1e-9))
    ks = np.arange(0, top + 1)
    spec = np.abs(np.fft.rfft(y)) / config.grid
    tgt = np.where(ks < spec.size, spec[np.minimum(ks, spec.size - 1)], 0.0)
    return TrainResult(theta, profile, trace, ks, tgt, _profile_abs(profile, ks))
