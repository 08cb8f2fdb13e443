"""Dense linear algebra: Hermitian generators, exponentials, Haar unitaries."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ._rng import make_rng

MAX_QUBITS = 12
HERMITIAN_TOL = 1e-12
DEGENERACY_RTOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    pass


class GeneratorSpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Generator:
    """Hermitian matrix with its eigendecomposition cached.

    Eigenvalues are sorted ascending and ``eigenvectors[:, i]`` belongs to
    ``eigenvalues[i]``. Tracelessness is not required.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    label: str = ""

    @classmethod
    def from_matrix(cls, matrix, label: str = "") -> "Generator":
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"generator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise GeneratorSpecError("generator has non-finite entries")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(m).max()):
            raise GeneratorSpecError(f"matrix {label!r} is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        w, v = np.linalg.eigh(m)
        m.setflags(write=False)
        w.setflags(write=False)
        v.setflags(write=False)
        return cls(m, w, v, label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.dim)))

    @property
    def spectral_norm(self) -> float:
        """max |eigenvalue|; the operator norm for Hermitian matrices."""
        return float(np.max(np.abs(self.eigenvalues)))

    def eigen_groups(self, rtol: float = DEGENERACY_RTOL) -> list[tuple[float, np.ndarray]]:
        return group_eigenvalues(self.eigenvalues, rtol)

    def scaled(self, factor: float) -> "Generator":
        return Generator.from_matrix(factor * self.matrix, f"{factor}*{self.label}")


def group_eigenvalues(eigenvalues, rtol: float = DEGENERACY_RTOL) -> list[tuple[float, np.ndarray]]:
    """Group sorted eigenvalues closer than ``rtol * max|lambda|``.

    Returns (representative value, index array) pairs; the representative is
    the group mean.
    """
    w = np.asarray(eigenvalues, dtype=float)
    if w.size == 0:
        return []
    order = np.argsort(w, kind="stable")
    tol = rtol * max(np.max(np.abs(w)), 1.0)
    groups: list[list[int]] = [[int(order[0])]]
    for i in order[1:]:
        if w[i] - w[groups[-1][-1]] <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return [(float(np.mean(w[g])), np.array(g)) for g in groups]


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary of size ``dim`` (QR of a Ginibre matrix)."""
    if dim < 1:
        raise DimensionError("dim must be >= 1")
    rng = make_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def expm_i(g: Generator, angle: float) -> np.ndarray:
    """exp(i * angle * g) via the cached eigendecomposition."""
    v = g.eigenvectors
    return (v * np.exp(1j * angle * g.eigenvalues)) @ v.conj().T


def schatten_norm(a, order: str = "trace") -> float:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("schatten_norm expects a square matrix")
    s = np.linalg.svd(a, compute_uv=False)
    if order == "trace":
        return float(np.sum(s))
    if order == "spectral":
        return float(s[0]) if s.size else 0.0
    raise ValueError(f"unknown Schatten order {order!r}")


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_string(ops: dict[int, str], n_qubits: int) -> np.ndarray:
    """Tensor product with ``ops[q]`` on qubit q (qubit 0 is the leftmost factor)."""
    for q in ops:
        if not 0 <= q < n_qubits:
            raise GeneratorSpecError(f"qubit index {q} out of range for {n_qubits} qubits")
    factors = [PAULI["I"]] * n_qubits
    for q, p in ops.items():
        factors[q] = PAULI[p]
    return kron_all(factors)


def _collective(p: str, n: int) -> np.ndarray:
    return sum(pauli_string({q: p}, n) for q in range(n))


def _cyclic_zz(n: int) -> np.ndarray:
    out = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n):
        out += _zz(q, (q + 1) % n, n)
    return out


def _all_pairs_zz(n: int) -> np.ndarray:
    out = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n):
        for r in range(q + 1, n):
            out += _zz(q, r, n)
    return out


def _zz(q: int, r: int, n: int) -> np.ndarray:
    factors = [PAULI["I"]] * n
    factors[q] = factors[q] @ PAULI["Z"]
    factors[r] = factors[r] @ PAULI["Z"]
    return kron_all(factors)


_TERM = re.compile(r"^\s*(?:(?P<coef>[-+]?[0-9.eE+-]+)\s*\*\s*)?(?P<body>.+?)\s*$")
_PAULI_FACTOR = re.compile(r"^([IXYZ])(\d+)$")


def _parse_term(body: str, n: int) -> np.ndarray:
    body = body.strip()
    if body in ("X", "Y", "Z"):
        return _collective(body, n)
    if body == "I":
        return np.eye(2**n, dtype=complex)
    if body == "ZZ":
        return _cyclic_zz(n)
    if body == "ZZ_all":
        return _all_pairs_zz(n)
    factors = body.split()
    ops: list[tuple[int, str]] = []
    for f in factors:
        m = _PAULI_FACTOR.match(f)
        if m is None:
            raise GeneratorSpecError(f"cannot parse generator term {body!r}")
        ops.append((int(m.group(2)), m.group(1)))
    mats = [PAULI["I"]] * n
    for q, p in ops:
        if not 0 <= q < n:
            raise GeneratorSpecError(f"qubit index {q} out of range for {n} qubits")
        mats[q] = mats[q] @ PAULI[p]
    return kron_all(mats)


def build_generator(spec, n_qubits: int) -> Generator:
    """Build a 2^n-dimensional generator from a compact description.

    ``spec`` is either an explicit square matrix or a string made of
    ``+``-separated terms, each optionally prefixed by ``<coef>*``:

    - ``X``, ``Y``, ``Z``: collective sums over all qubits
    - ``ZZ``: cyclic nearest-neighbour sum (index q+1 wraps to 0)
    - ``ZZ_all``: sum over all qubit pairs
    - ``I``: identity
    - ``X0``, ``Z0 Z1``, ...: Pauli strings with explicit qubit indices

    Examples: ``"X"``, ``"0.5*X"``, ``"0.5*Z0 + 0.5*I"``.
    """
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise DimensionError(f"n_qubits must be in [1, {MAX_QUBITS}]")
    if isinstance(spec, Generator):
        if spec.dim != 2**n_qubits:
            raise DimensionError("generator dimension does not match n_qubits")
        return spec
    if not isinstance(spec, str):
        m = np.asarray(spec, dtype=complex)
        if m.shape != (2**n_qubits, 2**n_qubits):
            raise DimensionError(f"explicit matrix must be {2**n_qubits}x{2**n_qubits}")
        return Generator.from_matrix(m, "explicit")
    total = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    # split on '+' that are not part of an exponent
    for raw in re.split(r"(?<![eE])\+", spec):
        if not raw.strip():
            continue
        m = _TERM.match(raw)
        if m is None:
            raise GeneratorSpecError(f"cannot parse generator term {raw!r}")
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        total += coef * _parse_term(m.group("body"), n_qubits)
    return Generator.from_matrix(total, spec)
