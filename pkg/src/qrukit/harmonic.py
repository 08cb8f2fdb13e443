"""Frequency-resolved statevector simulation.

The state after a re-uploading circuit is written as
``psi(x) = sum_k c_k exp(i (mu @ k) x)``, one complex vector ``c_k`` per
populated lattice point k. Unitaries act on each ``c_k`` separately; an
encoding gate splits every ``c_k`` along the eigenvectors of its generator
and moves each piece to ``k + k(lambda)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import DimensionError, Generator, expm_i
from .model import ENCODING, FIXED, PARAM, ArityError, QruModel
from .spectrum import (
    CapacityError,
    FrequencyLattice,
    LatticeMismatchError,
    joint_mu,
    lattice_offsets,
    merge_keys,
)

PRUNE_TOL = 1e-14
DEFAULT_CAPACITY = 10**6


@dataclass(frozen=True, eq=False)
class HarmonicState:
    """Coefficient matrix over (lattice point, basis index).

    ``coeffs[p]`` is the vector attached to lattice point ``keys[p]``.
    """

    n_qubits: int
    lattice: FrequencyLattice
    keys: np.ndarray
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def size(self) -> int:
        return self.keys.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def state_at(self, x) -> np.ndarray:
        """Reconstructed statevector(s) at x; shape (N,) or (B, N)."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        phases = np.exp(1j * np.outer(xs, self.keys @ self.lattice.mu))
        out = phases @ self.coeffs
        return out if np.ndim(x) else out[0]

    def columns(self) -> dict[tuple[int, ...], np.ndarray]:
        return {tuple(int(v) for v in k): c for k, c in zip(self.keys, self.coeffs)}


@dataclass(frozen=True, eq=False)
class FrequencyProfile:
    """Fourier coefficients a_omega of a hypothesis function.

    ``h(x) = sum_omega a_omega exp(i (mu @ omega) x)``.
    """

    mu: np.ndarray
    keys: np.ndarray
    coeffs: np.ndarray
    observable_norm: float = 1.0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "keys", np.asarray(self.keys, dtype=np.int64).reshape(-1, mu.size))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex).reshape(-1))

    @classmethod
    def from_dict(cls, coeffs: dict, mu=1.0, observable_norm: float = 1.0) -> "FrequencyProfile":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        keys = np.array([np.atleast_1d(k) for k in coeffs], dtype=np.int64).reshape(-1, mu.size)
        return cls(mu, keys, np.array(list(coeffs.values()), dtype=complex), observable_norm)

    @property
    def dims(self) -> int:
        return self.mu.size

    @property
    def frequencies(self) -> np.ndarray:
        return self.keys @ self.mu

    def as_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in k): complex(a) for k, a in zip(self.keys, self.coeffs)}

    def coefficient(self, k) -> complex:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        hit = np.all(self.keys == k, axis=1)
        return complex(self.coeffs[hit][0]) if hit.any() else 0j

    def evaluate(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        val = (np.exp(1j * np.outer(xs, self.frequencies)) @ self.coeffs).real
        return val if np.ndim(x) else float(val[0])

    def derivative(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        w = self.frequencies
        val = (np.exp(1j * np.outer(xs, w)) @ (1j * w * self.coeffs)).real
        return val if np.ndim(x) else float(val[0])

    def symmetry_error(self) -> float:
        """max |a_omega - conj(a_{-omega})| over the support."""
        lookup = self.as_dict()
        err = 0.0
        for k, a in lookup.items():
            partner = lookup.get(tuple(-v for v in k), 0j)
            err = max(err, abs(a - partner.conjugate()))
        return err

    def to_json(self) -> str:
        doc = {
            "mu": [float(m) for m in self.mu],
            "observable_norm": float(self.observable_norm),
            "entries": [
                {"k": [int(v) for v in k], "re": float(a.real), "im": float(a.imag)}
                for k, a in zip(self.keys, self.coeffs)
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FrequencyProfile":
        doc = json.loads(text)
        entries = doc["entries"]
        mu = np.array(doc["mu"], dtype=float)
        keys = np.array([e["k"] for e in entries], dtype=np.int64).reshape(-1, mu.size)
        coeffs = np.array([e["re"] + 1j * e["im"] for e in entries], dtype=complex)
        return cls(mu, keys, coeffs, doc.get("observable_norm", 1.0))


def init_harmonic(state, lattice) -> HarmonicState:
    """All amplitude at lattice point 0. ``lattice`` may also be a bare mu."""
    psi = np.asarray(state, dtype=complex).reshape(-1)
    n = int(round(np.log2(psi.size)))
    if 2**n != psi.size:
        raise DimensionError("state length must be a power of two")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("state must be normalized")
    if not isinstance(lattice, FrequencyLattice):
        lattice = FrequencyLattice.from_mu(lattice)
    keys = np.zeros((1, lattice.dims), dtype=np.int64)
    lattice = FrequencyLattice(lattice.mu, np.zeros(lattice.dims, dtype=np.int64))
    return HarmonicState(n, lattice, keys, psi[None, :].copy())


def apply_unitary(hs: HarmonicState, u) -> HarmonicState:
    u = np.asarray(u, dtype=complex)
    if u.shape != (hs.dim, hs.dim):
        raise DimensionError(f"unitary of shape {u.shape} on a {hs.dim}-dimensional state")
    return HarmonicState(hs.n_qubits, hs.lattice, hs.keys, hs.coeffs @ u.T)


def apply_encoding(
    hs: HarmonicState,
    g: Generator,
    offsets=None,
    capacity: int = DEFAULT_CAPACITY,
) -> HarmonicState:
    """Apply exp(i g x) in the frequency domain.

    ``offsets[i]`` is the lattice point of eigenvalue i of ``g``; it is
    computed from the state's lattice when omitted.
    """
    if g.dim != hs.dim:
        raise DimensionError("generator dimension does not match the state")
    if offsets is None:
        offsets = lattice_offsets(g, hs.lattice.mu)
    offsets = np.asarray(offsets, dtype=np.int64).reshape(g.dim, hs.lattice.dims)
    v = g.eigenvectors
    eig = hs.coeffs @ v.conj()
    rows, cols = np.nonzero(np.abs(eig) > PRUNE_TOL)
    if rows.size == 0:
        return HarmonicState(hs.n_qubits, hs.lattice, hs.keys[:0], hs.coeffs[:0])
    new_keys = hs.keys[rows] + offsets[cols]
    uniq, inv = merge_keys(new_keys)
    if uniq.shape[0] > capacity:
        raise CapacityError(f"harmonic: {uniq.shape[0]} lattice points exceed capacity {capacity}")
    vals = eig[rows, cols]
    flat = inv * hs.dim + cols
    size = uniq.shape[0] * hs.dim
    acc = np.bincount(flat, weights=vals.real, minlength=size) + 1j * np.bincount(
        flat, weights=vals.imag, minlength=size
    )
    coeffs = acc.reshape(uniq.shape[0], hs.dim) @ v.T
    return HarmonicState(hs.n_qubits, hs.lattice.widened(uniq), uniq, coeffs)


def simulate_harmonic(model: QruModel, theta, mu=None, capacity: int = DEFAULT_CAPACITY) -> HarmonicState:
    """Harmonic representation of the model's output state at parameters ``theta``.

    ``mu`` defaults to the common base frequency of all encoding generators;
    pass a vector for lattices with several incommensurate directions.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != model.n_params:
        raise ArityError(f"expected {model.n_params} parameters, got {theta.size}")
    gens = model.encoding_generators
    if mu is None:
        mu = joint_mu(gens)
    lattice = FrequencyLattice.from_mu(mu)
    offsets: dict[int, np.ndarray] = {}
    for g in gens:
        if id(g) not in offsets:
            try:
                offsets[id(g)] = lattice_offsets(g, lattice.mu)
            except ValueError as exc:
                raise LatticeMismatchError(str(exc)) from exc
    hs = init_harmonic(model.initial_state, lattice)
    for s in model.steps:
        if s.kind == FIXED:
            hs = apply_unitary(hs, s.unitary)
        elif s.kind == PARAM:
            hs = apply_unitary(hs, expm_i(s.generator, theta[s.param_index]))
        elif s.kind == ENCODING:
            hs = apply_encoding(hs, s.generator, offsets[id(s.generator)], capacity)
    return hs


def measure_fourier(hs: HarmonicState, observable: Generator, chunk: int = 512) -> FrequencyProfile:
    """Fourier coefficients of <psi(x)|H|psi(x)>.

    With ``G[l, k] = c_l^dagger H c_k`` the coefficient of frequency
    ``omega`` is the sum of ``G[l, k]`` over pairs with ``k - l = omega``.
    """
    if observable.dim != hs.dim:
        raise DimensionError("observable dimension does not match the state")
    c = hs.coeffs
    hc = c @ observable.matrix.T
    d = hs.lattice.dims
    if hs.size == 0:
        return FrequencyProfile(hs.lattice.mu, np.zeros((0, d)), np.zeros(0), observable.spectral_norm)
    lo = hs.keys.min(axis=0)
    hi = hs.keys.max(axis=0)
    # omega ranges over [lo - hi, hi - lo] per dimension
    span = 2 * (hi - lo) + 1
    strides = np.ones_like(span)
    for i in range(d - 2, -1, -1):
        strides[i] = strides[i + 1] * span[i + 1]
    size = int(np.prod(span))
    re = np.zeros(size)
    im = np.zeros(size)
    k_codes = (hs.keys - lo) @ strides
    for start in range(0, hs.size, chunk):
        stop = min(start + chunk, hs.size)
        gram = c[start:stop].conj() @ hc.T
        l_codes = (hs.keys[start:stop] - lo) @ strides
        # code of (k - l) shifted into [0, span)
        codes = (k_codes[None, :] - l_codes[:, None] + (hi - lo) @ strides).reshape(-1)
        g = gram.reshape(-1)
        re += np.bincount(codes, weights=g.real, minlength=size)
        im += np.bincount(codes, weights=g.imag, minlength=size)
    a = re + 1j * im
    keep = np.flatnonzero(np.abs(a) > PRUNE_TOL)
    keys = np.empty((keep.size, d), dtype=np.int64)
    rem = keep.copy()
    for i in range(d):
        keys[:, i], rem = np.divmod(rem, strides[i])
    keys -= hi - lo
    return FrequencyProfile(hs.lattice.mu, keys, a[keep], observable.spectral_norm)


def frequency_weights(hs: HarmonicState) -> dict[tuple[int, ...], float]:
    """sum_j |c_{j,k}|^2 for every populated lattice point k."""
    w = np.sum(np.abs(hs.coeffs) ** 2, axis=1)
    return {tuple(int(v) for v in k): float(x) for k, x in zip(hs.keys, w)}


def weight_vector(hs: HarmonicState) -> tuple[np.ndarray, np.ndarray]:
    """Same as ``frequency_weights`` as aligned (keys, weights) arrays."""
    return hs.keys, np.sum(np.abs(hs.coeffs) ** 2, axis=1)
