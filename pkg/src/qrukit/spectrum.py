"""Spectrum kernels on integer frequency lattices.

A kernel maps lattice points k (integer vectors of length D) to normalized
eigenvalue multiplicities; the physical frequency of k is ``mu @ k``. One
dimension covers the harmonic case, D > 1 the case of generators whose
eigenvalues need several incommensurate base frequencies.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .algebra import DEGENERACY_RTOL, Generator, group_eigenvalues

WEIGHT_TOL = 1e-12
LATTICE_TOL = 1e-9
MAX_DENOMINATOR = 10**6
# rationals with huge numerators are floating-point noise, not a lattice
MAX_LATTICE_INDEX = 4096
MAX_PAIRS = 50_000_000


class AnharmonicError(ValueError):
    """No common base frequency could be found; pass ``mu_hint``."""


class LatticeMismatchError(ValueError):
    pass


class CapacityError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FrequencyLattice:
    mu: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        bounds = np.atleast_1d(np.asarray(self.bounds, dtype=np.int64)).copy()
        if mu.ndim != 1 or mu.size == 0 or np.any(mu <= 0):
            raise ValueError("mu must be a non-empty vector of positive reals")
        if bounds.shape != mu.shape or np.any(bounds < 0):
            raise ValueError("bounds must be non-negative, one per dimension")
        mu.setflags(write=False)
        bounds.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def from_mu(cls, mu) -> "FrequencyLattice":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        return cls(mu, np.zeros(mu.size, dtype=np.int64))

    @property
    def dims(self) -> int:
        return self.mu.size

    def widened(self, keys: np.ndarray) -> "FrequencyLattice":
        if len(keys) == 0:
            return self
        reach = np.max(np.abs(keys), axis=0)
        return FrequencyLattice(self.mu, np.maximum(self.bounds, reach))

    def compatible(self, other: "FrequencyLattice") -> bool:
        return self.dims == other.dims and np.allclose(self.mu, other.mu, rtol=1e-12, atol=0.0)


def merge_keys(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows of an integer key array and the inverse index.

    Rows are encoded as mixed-radix integers, so the unique keys come out in
    lexicographic order.
    """
    keys = np.asarray(keys, dtype=np.int64)
    if keys.shape[0] == 0:
        return keys.reshape(0, keys.shape[1]), np.zeros(0, dtype=np.int64)
    lo = keys.min(axis=0)
    span = keys.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) > 2**62:
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1)
    strides = np.ones_like(span)
    for d in range(span.size - 2, -1, -1):
        strides[d] = strides[d + 1] * span[d + 1]
    codes = (keys - lo) @ strides
    ucodes, inv = np.unique(codes, return_inverse=True)
    uniq = np.empty((ucodes.size, keys.shape[1]), dtype=np.int64)
    rem = ucodes.copy()
    for d in range(span.size):
        uniq[:, d], rem = np.divmod(rem, strides[d])
    return uniq + lo, inv.reshape(-1)


def _accumulate(keys: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = merge_keys(keys)
    return uniq, np.bincount(inv, weights=weights, minlength=len(uniq))


@dataclass(frozen=True, eq=False)
class SpectrumKernel:
    """Normalized multiplicities on a frequency lattice.

    ``keys`` has shape (P, D) and is lexicographically sorted; ``weights``
    has shape (P,), is strictly positive and sums to one. ``N`` is the
    dimension of the matrix the kernel came from (or the product of source
    dimensions after convolution).
    """

    mu: np.ndarray
    keys: np.ndarray
    weights: np.ndarray
    N: int

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        keys = np.asarray(self.keys, dtype=np.int64).reshape(-1, mu.size)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if keys.shape[0] != w.size:
            raise ValueError("keys and weights disagree in length")
        if np.any(w <= 0):
            raise ValueError("kernel weights must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, w.size) ** 0.5 + WEIGHT_TOL:
            raise ValueError(f"kernel weights sum to {w.sum()!r}, expected 1")
        keys, w = _accumulate(keys, w)
        for a in (mu, keys, w):
            a.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "N", int(self.N))

    @classmethod
    def from_dict(cls, weights: dict, mu, N: int) -> "SpectrumKernel":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        keys = np.array([np.atleast_1d(k) for k in weights], dtype=np.int64).reshape(-1, mu.size)
        return cls(mu, keys, np.array(list(weights.values()), dtype=float), N)

    @property
    def dims(self) -> int:
        return self.mu.size

    @property
    def lattice(self) -> FrequencyLattice:
        return FrequencyLattice.from_mu(self.mu).widened(self.keys)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(v) for v in k): float(w) for k, w in zip(self.keys, self.weights)}

    def weight(self, k) -> float:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        hit = np.all(self.keys == k, axis=1)
        return float(self.weights[hit][0]) if hit.any() else 0.0

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense array over the bounding box and the key of its [0, ..., 0] cell."""
        lo = self.keys.min(axis=0)
        shape = tuple(self.keys.max(axis=0) - lo + 1)
        out = np.zeros(shape)
        out[tuple((self.keys - lo).T)] = self.weights
        return out, lo

    def to_json(self) -> str:
        doc = {
            "mu": [float(m) for m in self.mu],
            "N": self.N,
            "weights": [{"k": [int(v) for v in k], "w": float(w)} for k, w in zip(self.keys, self.weights)],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SpectrumKernel":
        doc = json.loads(text)
        keys = np.array([e["k"] for e in doc["weights"]], dtype=np.int64)
        w = np.array([e["w"] for e in doc["weights"]], dtype=float)
        return cls(np.array(doc["mu"], dtype=float), keys, w, doc["N"])


def delta_kernel(mu, N: int = 1) -> SpectrumKernel:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    return SpectrumKernel(mu, np.zeros((1, mu.size), dtype=np.int64), np.ones(1), N)


def _rational(r: float) -> Fraction | None:
    f = Fraction(r).limit_denominator(MAX_DENOMINATOR)
    if abs(float(f) - r) > LATTICE_TOL * max(1.0, abs(r)):
        return None
    return f


def detect_mu(eigenvalues: Iterable[float]) -> float:
    """Largest mu such that every value is an integer multiple of it.

    Values are compared through rational approximations of their ratios to
    the smallest nonzero magnitude. Raises AnharmonicError when no such mu
    exists with lattice indices up to ``MAX_LATTICE_INDEX``.
    """
    vals = np.asarray(list(eigenvalues), dtype=float)
    scale = max(float(np.max(np.abs(vals), initial=0.0)), 1e-300)
    nonzero = vals[np.abs(vals) > LATTICE_TOL * scale]
    if nonzero.size == 0:
        return 1.0
    ref = float(np.min(np.abs(nonzero)))
    fracs = []
    for v in np.unique(nonzero):
        f = _rational(v / ref)
        if f is None:
            raise AnharmonicError(
                f"eigenvalue ratio {v / ref!r} is not rational within tolerance; pass mu_hint"
            )
        fracs.append(f)
    q = 1
    for f in fracs:
        q = q * f.denominator // math.gcd(q, f.denominator)
    nums = [int(f * q) for f in fracs]
    g = 0
    for n in nums:
        g = math.gcd(g, n)
    if max(abs(n) for n in nums) // g > MAX_LATTICE_INDEX:
        raise AnharmonicError("eigenvalues need an implausibly fine lattice; pass mu_hint")
    return ref * g / q


def joint_mu(generators: Sequence[Generator]) -> float:
    """Common base frequency of several generators (harmonic case)."""
    vals = np.concatenate([g.eigenvalues for g in generators]) if generators else np.zeros(0)
    return detect_mu(vals)


def _solve_offsets(values: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Integer vectors k with mu @ k == value for each value."""
    d = mu.size
    scale = max(float(np.max(np.abs(values), initial=0.0)), float(mu.max()))
    tol = LATTICE_TOL * scale
    if d == 1:
        k = np.rint(values / mu[0])
        bad = np.abs(k * mu[0] - values) > tol
        if np.any(bad):
            raise AnharmonicError(f"eigenvalues {values[bad]} are not multiples of mu={mu[0]!r}")
        return k.astype(np.int64)[:, None]
    reach = int(np.ceil(scale / mu.min())) + 1
    box = np.array(list(itertools.product(range(-reach, reach + 1), repeat=d)), dtype=np.int64)
    if box.shape[0] > 5_000_000:
        raise CapacityError("lattice search box too large for this mu_hint")
    # prefer the shortest index vector when several fit
    box = box[np.argsort(np.abs(box).sum(axis=1), kind="stable")]
    freqs = box @ mu
    out = np.empty((values.size, d), dtype=np.int64)
    for i, v in enumerate(values):
        hit = np.flatnonzero(np.abs(freqs - v) <= tol)
        if hit.size == 0:
            raise AnharmonicError(f"eigenvalue {v!r} does not lie on the lattice spanned by mu={mu}")
        out[i] = box[hit[0]]
    return out


def lattice_offsets(g: Generator, mu) -> np.ndarray:
    """Lattice point of every eigenvalue of ``g`` (shape (N, D), eigenvalue order)."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    groups = group_eigenvalues(g.eigenvalues, DEGENERACY_RTOL)
    reps = np.array([v for v, _ in groups])
    ks = _solve_offsets(reps, mu)
    out = np.empty((g.dim, mu.size), dtype=np.int64)
    for (_, idx), k in zip(groups, ks):
        out[idx] = k
    return out


def extract_kernel(g: Generator, mu_hint=None) -> SpectrumKernel:
    """Normalized multiplicity kernel m(lambda)/N of a generator.

    Without ``mu_hint`` the base frequency is detected (one-dimensional
    lattice); with it, each eigenvalue is expressed as ``mu_hint @ k`` for an
    integer vector k.
    """
    mu = np.atleast_1d(np.asarray(detect_mu(g.eigenvalues) if mu_hint is None else mu_hint, dtype=float))
    keys = lattice_offsets(g, mu)
    uniq, w = _accumulate(keys, np.full(g.dim, 1.0 / g.dim))
    return SpectrumKernel(mu, uniq, w, g.dim)


def _check_same_lattice(a: SpectrumKernel, b: SpectrumKernel):
    if a.dims != b.dims or not np.allclose(a.mu, b.mu, rtol=1e-12, atol=0.0):
        raise LatticeMismatchError(f"kernels live on different lattices: mu={a.mu} vs {b.mu}")


def convolve(a: SpectrumKernel, b: SpectrumKernel) -> SpectrumKernel:
    _check_same_lattice(a, b)
    if a.weights.size * b.weights.size > MAX_PAIRS:
        raise CapacityError("convolution support too large")
    keys = (a.keys[:, None, :] + b.keys[None, :, :]).reshape(-1, a.dims)
    w = np.outer(a.weights, b.weights).reshape(-1)
    uniq, acc = _accumulate(keys, w)
    # far tails can underflow to exactly zero
    keep = acc > 0
    return SpectrumKernel(a.mu, uniq[keep], acc[keep], a.N * b.N)


def power_convolve(k: SpectrumKernel, L: int) -> SpectrumKernel:
    """L-fold self-convolution by repeated squaring."""
    if L < 1:
        raise ValueError("L must be >= 1")
    result = None
    base = k
    while True:
        if L & 1:
            result = base if result is None else convolve(result, base)
        L >>= 1
        if not L:
            return result
        base = convolve(base, base)


def kernel_moments(k: SpectrumKernel) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix over lattice indices."""
    mean = k.weights @ k.keys
    centered = k.keys - mean
    cov = (centered * k.weights[:, None]).T @ centered
    return mean, cov


@dataclass(frozen=True, eq=False)
class GaussianLimit:
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def variance(self) -> float:
        if self.covariance.shape != (1, 1):
            raise ValueError("variance is only defined for one-dimensional lattices")
        return float(self.covariance[0, 0])

    def density(self, keys) -> np.ndarray:
        """Normal density at integer lattice points (unit cell volume)."""
        keys = np.asarray(keys, dtype=float).reshape(-1, self.mean.size)
        diff = keys - self.mean
        cov = np.atleast_2d(self.covariance)
        inv = np.linalg.pinv(cov)
        quad = np.einsum("pi,ij,pj->p", diff, inv, diff)
        eig = np.linalg.eigvalsh(cov)
        det = float(np.prod(eig[eig > 1e-300]))
        rank = int(np.sum(eig > 1e-300))
        return np.exp(-0.5 * quad) / np.sqrt((2 * np.pi) ** rank * det)


def gaussian_limit(k: SpectrumKernel, L: int) -> GaussianLimit:
    if L < 1:
        raise ValueError("L must be >= 1")
    mean, cov = kernel_moments(k)
    return GaussianLimit(L * mean, L * cov)
