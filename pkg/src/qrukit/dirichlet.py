"""Dirichlet distributions over frequency weights and the derived tail bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._rng import make_rng
from .spectrum import SpectrumKernel, power_convolve

DEFAULT_EPS = 1e-10


@dataclass(frozen=True, eq=False)
class DirichletParams:
    alpha: np.ndarray
    keys: np.ndarray | None = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float)).copy()
        if a.ndim != 1 or a.size == 0 or np.any(a <= 0) or not np.all(np.isfinite(a)):
            raise ValueError("alpha must be a non-empty vector of positive reals")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def alpha_sum(self) -> float:
        return float(self.alpha.sum())

    @property
    def size(self) -> int:
        return self.alpha.size


def params_from_kernel(kernel: SpectrumKernel, n_qubits: int) -> DirichletParams:
    """alpha = 2^n * kernel weights, aligned with ``kernel.keys``."""
    return DirichletParams(2.0**n_qubits * kernel.weights, kernel.keys)


def dirichlet_sample(p: DirichletParams, seed=None, size: int | None = None) -> np.ndarray:
    """Draw from Dir(alpha) by normalizing independent Gamma(alpha_i, 1) variables."""
    rng = make_rng(seed)
    shape = (p.size,) if size is None else (size, p.size)
    y = rng.standard_gamma(np.broadcast_to(p.alpha, shape))
    total = y.sum(axis=-1, keepdims=True)
    # tiny alphas can underflow every coordinate; fall back to the largest draw's index
    empty = total[..., 0] == 0
    if np.any(empty):
        idx = np.argmax(np.broadcast_to(p.alpha, shape)[empty], axis=-1)
        y[empty] = 0.0
        y[empty, idx] = 1.0
        total[empty] = 1.0
    return y / total


def dirichlet_moment(p: DirichletParams, k) -> float:
    """E[prod_i x_i^{k_i}] evaluated in log-Gamma space."""
    k = np.asarray(k, dtype=float)
    if k.shape != p.alpha.shape or np.any(k < 0):
        raise ValueError("moment order must be a non-negative vector matching alpha")
    a = p.alpha
    s = a.sum()
    log = gammaln(s) - gammaln(s + k.sum()) + np.sum(gammaln(a + k) - gammaln(a))
    return float(np.exp(log))


def dirichlet_mean(p: DirichletParams) -> np.ndarray:
    return p.alpha / p.alpha_sum


def dirichlet_var(p: DirichletParams) -> np.ndarray:
    s = p.alpha_sum
    m = p.alpha / s
    return m * (1 - m) / (s + 1)


def dirichlet_cov(p: DirichletParams) -> np.ndarray:
    s = p.alpha_sum
    m = p.alpha / s
    cov = -np.outer(m, m) / (s + 1)
    cov[np.diag_indices_from(cov)] = dirichlet_var(p)
    return cov


def beta_marginal(p: DirichletParams, i: int) -> tuple[float, float]:
    """Parameters (a, b) of the Beta marginal of coordinate i."""
    a = float(p.alpha[i])
    return a, p.alpha_sum - a


def aggregate(p: DirichletParams, groups) -> DirichletParams:
    """Dirichlet of summed coordinate groups (``groups`` lists index arrays)."""
    return DirichletParams(np.array([p.alpha[np.asarray(g)].sum() for g in groups]))


def expected_abs_coeff_bound(alpha_k: float, observable_norm: float = 1.0) -> float:
    """Upper bound on E|a_k| when |a_k|^2 / ||H||^2 is Beta(alpha_k, 1)-dominated.

    E[sqrt(p)] = alpha/(alpha + 1/2) for p ~ Beta(alpha, 1), and that is
    itself at most 2 alpha.
    """
    if alpha_k <= 0:
        raise ValueError("alpha_k must be positive")
    return observable_norm * min(alpha_k / (alpha_k + 0.5), 2.0 * alpha_k)


def x_max(alpha, eps: float = DEFAULT_EPS):
    """Level below which a Gamma-quotient variable with shape alpha stays w.p. 1 - eps.

    Solves 2^-alpha - (1 + 1/x)^-alpha = eps for x; when 2^-alpha <= eps the
    tail never reaches eps inside (0, 1) and the trivial bound 1 is returned.
    """
    a = np.asarray(alpha, dtype=float)
    base = 2.0 ** (-a) - eps
    out = np.ones_like(a)
    ok = base > 0
    with np.errstate(over="ignore"):
        # (base^(-1/a) - 1) computed as expm1 for accuracy when a is tiny
        inner = np.expm1(-np.log(base[ok]) / a[ok])
    out[ok] = np.minimum(1.0, 1.0 / inner)
    return out if out.ndim else float(out)


def _tail_sum(kernel: SpectrumKernel, L: int, mode: str, eps: float, observable_norm: float) -> float:
    k2 = power_convolve(kernel, 2 * L)
    freq = k2.keys @ k2.mu
    nz = np.abs(freq) > 0
    if mode == "coarse":
        caps = np.ones(int(nz.sum()))
    elif mode == "refined":
        caps = x_max(k2.weights[nz], eps)
    else:
        raise ValueError(f"unknown tail-bound mode {mode!r}")
    return float(np.sum((freq[nz] * observable_norm) ** 2 * caps))


def tail_bound(
    t,
    kernel: SpectrumKernel,
    L: int,
    mode: str = "refined",
    eps: float = DEFAULT_EPS,
    observable_norm: float = 1.0,
):
    """Hoeffding-type bound on P(Lambda - ||H|| sqrt(2L) mu sigma >= t).

    Each summand mu |k| |a_k| ranges over [0, mu |k| ||H|| c_k] with
    c_k = 1 (coarse) or c_k = x_max(K^{*2L}(k), eps) (refined); the bound is
    (1/2) exp(-t^2 / sum_k (mu k ||H||)^2 c_k). Negative t gives 1.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    s = _tail_sum(kernel, L, mode, eps, observable_norm)
    t = np.asarray(t, dtype=float)
    out = np.where(t < 0, 1.0, 0.5 * np.exp(-np.maximum(t, 0.0) ** 2 / s) if s > 0 else 0.0)
    out = np.where((t >= 0) & (s == 0), np.where(t == 0, 0.5, 0.0), out)
    return out if out.ndim else float(out)


def tail_denominator(kernel: SpectrumKernel, L: int, mode: str = "refined", eps: float = DEFAULT_EPS,
                     observable_norm: float = 1.0) -> float:
    """The sum in the exponent of ``tail_bound``."""
    return _tail_sum(kernel, L, mode, eps, observable_norm)
