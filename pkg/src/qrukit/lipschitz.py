"""Lipschitz constants of hypothesis functions from their Fourier coefficients."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .dirichlet import DEFAULT_EPS, tail_bound
from .harmonic import FrequencyProfile
from .spectrum import SpectrumKernel, kernel_moments

OVERSAMPLE = 16
MIN_SAMPLES = 100


class GridTooCoarseError(ValueError):
    pass


@dataclass
class LipschitzReport:
    lambda_bound: float
    numeric_lipschitz: float
    theory_lower: float
    theory_upper: float
    observable_norm: float

    def to_dict(self) -> dict:
        return asdict(self)


def lambda_bound(profile: FrequencyProfile) -> float:
    """sum_omega |mu . omega| |a_omega|, an upper bound on max_x |h'(x)|."""
    return float(np.sum(np.abs(profile.frequencies) * np.abs(profile.coeffs)))


def _default_interval(profile: FrequencyProfile) -> tuple[float, float]:
    return 0.0, 2 * np.pi / float(np.min(profile.mu))


def numeric_lipschitz(profile: FrequencyProfile, grid_points: int | None = None, interval=None) -> float:
    """max |h'(x)| by grid search followed by local refinement.

    The search interval is one period 2 pi / mu for one-dimensional lattices
    and ``[0, 2 pi / min(mu)]`` otherwise, unless given. The grid must
    resolve the highest frequency with at least four points per period.
    """
    w = np.abs(profile.frequencies)
    if w.size == 0 or np.max(w) == 0:
        return 0.0
    lo, hi = interval if interval is not None else _default_interval(profile)
    length = hi - lo
    # periods of the fastest component that fit in the interval
    cycles = max(1.0, float(np.max(w)) * length / (2 * np.pi))
    needed = int(np.ceil(4 * cycles))
    if grid_points is None:
        grid_points = OVERSAMPLE * int(np.ceil(cycles)) + 1
    if grid_points < needed:
        raise GridTooCoarseError(
            f"{grid_points} grid points cannot resolve the top frequency; use at least {needed}"
        )
    xs = np.linspace(lo, hi, grid_points, endpoint=interval is not None)
    vals = np.abs(profile.derivative(xs))
    best = float(vals.max())
    step = xs[1] - xs[0]
    for i in np.argsort(vals)[-8:]:
        res = minimize_scalar(
            lambda x: -abs(profile.derivative(x)),
            bounds=(xs[i] - step, xs[i] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(-res.fun))
    return best


def average_bounds(kernel: SpectrumKernel, L: int, observable_norm: float = 1.0) -> tuple[float, float]:
    """Large-L bracket for E[Lambda].

    Lower: sqrt(2 L) ||H|| ||mu|| sqrt(min eig Sigma);
    upper: (4 / sqrt(pi)) sqrt(L) ||H|| ||mu|| sqrt(tr Sigma), with Sigma the
    kernel covariance in lattice units. For one-dimensional lattices both
    reduce to mu sigma_g forms.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    _, cov = kernel_moments(kernel)
    mu_norm = float(np.linalg.norm(kernel.mu))
    lam_min = max(float(np.linalg.eigvalsh(cov)[0]), 0.0)
    lower = np.sqrt(2 * L) * observable_norm * mu_norm * np.sqrt(lam_min)
    upper = 4 / np.sqrt(np.pi) * np.sqrt(L) * observable_norm * mu_norm * np.sqrt(float(np.trace(cov)))
    return float(lower), float(upper)


def lipschitz_report(
    profile: FrequencyProfile, kernel: SpectrumKernel, L: int, grid_points: int | None = None
) -> LipschitzReport:
    lower, upper = average_bounds(kernel, L, profile.observable_norm)
    return LipschitzReport(
        lambda_bound(profile), numeric_lipschitz(profile, grid_points), lower, upper, profile.observable_norm
    )


@dataclass
class DeviationTable:
    t: np.ndarray
    empirical: np.ndarray
    coarse_bound: np.ndarray
    refined_bound: np.ndarray
    reference: float
    mean_deviation: float

    CSV_HEADER = ("t", "empirical", "coarse_bound", "refined_bound")

    def rows(self) -> list[dict]:
        return [
            {"t": float(a), "empirical": float(b), "coarse_bound": float(c), "refined_bound": float(d)}
            for a, b, c, d in zip(self.t, self.empirical, self.coarse_bound, self.refined_bound)
        ]


def deviation_cdf(
    samples,
    kernel: SpectrumKernel,
    L: int,
    observable_norm: float = 1.0,
    t_grid=None,
    eps: float = DEFAULT_EPS,
) -> DeviationTable:
    """Empirical P(Lambda - reference >= t) next to the coarse and refined tail bounds.

    ``reference`` is the lower end of ``average_bounds``.
    """
    lam = np.asarray(samples, dtype=float).reshape(-1)
    if lam.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {lam.size}")
    reference = average_bounds(kernel, L, observable_norm)[0]
    dev = lam - reference
    if t_grid is None:
        t_grid = np.linspace(0.0, max(float(dev.max()), 0.0) * 1.1 + 1e-12, 64)
    t = np.asarray(t_grid, dtype=float)
    emp = (dev[None, :] >= t[:, None]).mean(axis=1)
    coarse = np.atleast_1d(tail_bound(t, kernel, L, "coarse", eps, observable_norm))
    refined = np.atleast_1d(tail_bound(t, kernel, L, "refined", eps, observable_norm))
    return DeviationTable(t, emp, coarse, refined, reference, float(dev.mean()))
