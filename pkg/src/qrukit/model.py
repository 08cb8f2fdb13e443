"""Re-uploading circuit description and plain statevector simulation.

Steps are applied in sequence order to the initial state, so the circuit
unitary is ``steps[-1] @ ... @ steps[0]``. Every evaluation routine is
batched: ``theta`` may be ``(m,)`` or ``(B, m)`` and ``x`` a scalar or
``(B,)``; the batch axes broadcast against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .algebra import DimensionError, Generator

PARAM, FIXED, ENCODING = "param", "fixed", "encoding"
NORM_TOL = 1e-12


class ArityError(ValueError):
    pass


class NotLayeredError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GateStep:
    kind: str
    generator: Generator | None = None
    unitary: np.ndarray | None = None
    param_index: int | None = None
    layer_index: int = 0

    @classmethod
    def param(cls, generator: Generator, param_index: int, layer_index: int = 0) -> "GateStep":
        return cls(PARAM, generator=generator, param_index=param_index, layer_index=layer_index)

    @classmethod
    def fixed(cls, unitary, layer_index: int = 0) -> "GateStep":
        u = np.array(unitary, dtype=complex)
        u.setflags(write=False)
        return cls(FIXED, unitary=u, layer_index=layer_index)

    @classmethod
    def encoding(cls, generator: Generator, layer_index: int = 0) -> "GateStep":
        return cls(ENCODING, generator=generator, layer_index=layer_index)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0] if self.kind == FIXED else self.generator.dim


@dataclass(frozen=True, eq=False)
class QruModel:
    n_qubits: int
    steps: tuple[GateStep, ...]
    observable: Generator
    initial_state: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        dim = 2**self.n_qubits
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.initial_state is None:
            psi = np.zeros(dim, dtype=complex)
            psi[0] = 1.0
        else:
            psi = np.array(self.initial_state, dtype=complex)
        if psi.shape != (dim,):
            raise DimensionError("initial state has wrong dimension")
        if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
            raise ValueError("initial state must be normalized")
        psi.setflags(write=False)
        object.__setattr__(self, "initial_state", psi)
        if self.observable.dim != dim:
            raise DimensionError("observable dimension mismatch")
        seen = set()
        for s in self.steps:
            if s.dim != dim:
                raise DimensionError(f"step of dimension {s.dim} in a {dim}-dimensional model")
            if s.kind == PARAM:
                if s.param_index in seen:
                    raise ValueError(f"duplicate param_index {s.param_index}")
                seen.add(s.param_index)
        if seen != set(range(len(seen))):
            raise ValueError("param indices must be 0..m-1")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def n_params(self) -> int:
        return sum(1 for s in self.steps if s.kind == PARAM)

    @property
    def encoding_generators(self) -> list[Generator]:
        return [s.generator for s in self.steps if s.kind == ENCODING]

    def param_step(self, j: int) -> int:
        """Position in ``steps`` of the gate carrying parameter ``j``."""
        for pos, s in enumerate(self.steps):
            if s.kind == PARAM and s.param_index == j:
                return pos
        raise IndexError(f"no parameter {j}")


@dataclass(frozen=True)
class Layer:
    block: tuple[GateStep, ...]
    encoding: GateStep


@dataclass(frozen=True)
class LayeredView:
    layers: tuple[Layer, ...]
    dressing: tuple[GateStep, ...] = ()

    @property
    def count(self) -> int:
        return len(self.layers)

    def steps(self) -> tuple[GateStep, ...]:
        out: list[GateStep] = []
        for layer in self.layers:
            out.extend(layer.block)
            out.append(layer.encoding)
        out.extend(self.dressing)
        return tuple(out)


def _batch(model: QruModel, theta, x):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0 or theta.shape[-1] != model.n_params:
        raise ArityError(f"expected {model.n_params} parameters, got shape {theta.shape}")
    x = np.asarray(x, dtype=float)
    b_theta = theta.shape[:-1] if theta.ndim > 1 else ()
    shape = np.broadcast_shapes(b_theta, x.shape)
    if len(shape) > 1:
        raise ArityError("only one batch axis is supported")
    size = shape[0] if shape else 1
    theta = np.broadcast_to(theta.reshape((-1, model.n_params)) if theta.ndim > 1
                            else theta[None, :], (size, model.n_params))
    x = np.broadcast_to(x.reshape(-1), (size,))
    return theta, x, bool(shape)


def _rotate(psi: np.ndarray, g: Generator, angles: np.ndarray) -> np.ndarray:
    # psi: (B, N); applies exp(i * angles[b] * g) to each row
    v = g.eigenvectors
    c = psi @ v.conj()
    c *= np.exp(1j * angles[:, None] * g.eigenvalues[None, :])
    return c @ v.T


def apply_step(step: GateStep, psi: np.ndarray, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    if step.kind == FIXED:
        return psi @ step.unitary.T
    if step.kind == PARAM:
        return _rotate(psi, step.generator, theta[:, step.param_index])
    return _rotate(psi, step.generator, x)


def apply_step_adjoint(step: GateStep, psi: np.ndarray, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    if step.kind == FIXED:
        return psi @ step.unitary.conj()
    if step.kind == PARAM:
        return _rotate(psi, step.generator, -theta[:, step.param_index])
    return _rotate(psi, step.generator, -x)


def run_steps(steps: Sequence[GateStep], psi: np.ndarray, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    for s in steps:
        psi = apply_step(s, psi, theta, x)
    return psi


def evaluate_state(model: QruModel, theta, x) -> np.ndarray:
    """U(theta, x)|psi_0>; shape (N,) or (B, N) for batched input."""
    th, xs, batched = _batch(model, theta, x)
    psi = np.broadcast_to(model.initial_state, (th.shape[0], model.dim)).copy()
    psi = run_steps(model.steps, psi, th, xs)
    return psi if batched else psi[0]


def _expectation(psi: np.ndarray, h: np.ndarray) -> np.ndarray:
    val = np.einsum("bi,bi->b", psi.conj(), psi @ h.T)
    if np.max(np.abs(val.imag), initial=0.0) > 1e-10:
        raise ArithmeticError("expectation value has a non-negligible imaginary part")
    return val.real


def hypothesis(model: QruModel, theta, x):
    """h_theta(x) = <psi(theta, x)| H |psi(theta, x)>."""
    th, xs, batched = _batch(model, theta, x)
    psi = np.broadcast_to(model.initial_state, (th.shape[0], model.dim)).copy()
    psi = run_steps(model.steps, psi, th, xs)
    h = _expectation(psi, model.observable.matrix)
    return h if batched else float(h[0])


def value_and_gradient(model: QruModel, theta, x):
    """Hypothesis values and exact parameter gradients.

    Each component is -2 Im <lambda_j| V_j |chi_j>, where chi_j is the state
    right after gate j and lambda_j = U_after^dagger H U_after chi_j; this is
    the trace of rho_j against the commutator [V_j, H_j], contracted on
    statevectors with a single backward sweep.
    """
    th, xs, batched = _batch(model, theta, x)
    b = th.shape[0]
    psi = np.broadcast_to(model.initial_state, (b, model.dim)).copy()
    for s in model.steps:
        psi = apply_step(s, psi, th, xs)
    h_mat = model.observable.matrix
    lam = psi @ h_mat.T
    value = np.einsum("bi,bi->b", psi.conj(), lam).real
    grad = np.zeros((b, model.n_params))
    chi = psi
    for s in reversed(model.steps):
        if s.kind == PARAM:
            v_chi = chi @ s.generator.matrix.T
            overlap = np.einsum("bi,bi->b", lam.conj(), v_chi)
            grad[:, s.param_index] = -2.0 * overlap.imag
        # step back: chi becomes the state before this step
        chi = apply_step_adjoint(s, chi, th, xs)
        lam = apply_step_adjoint(s, lam, th, xs)
    if batched:
        return value, grad
    return float(value[0]), grad[0]


def gradient(model: QruModel, theta, x) -> np.ndarray:
    return value_and_gradient(model, theta, x)[1]


def base_pqc(model: QruModel) -> QruModel:
    """Same circuit with every encoding gate removed (x pinned to 0)."""
    steps = tuple(s for s in model.steps if s.kind != ENCODING)
    return replace(model, steps=steps)


def layered_view(model: QruModel) -> LayeredView:
    layers: list[Layer] = []
    block: list[GateStep] = []
    for s in model.steps:
        if s.kind == ENCODING:
            layers.append(Layer(tuple(block), s))
            block = []
        else:
            block.append(s)
    if not layers:
        raise NotLayeredError("model has no encoding steps")
    return LayeredView(tuple(layers), tuple(block))


def circuit_unitary(steps: Sequence[GateStep], dim: int, theta, x: float) -> np.ndarray:
    """Dense unitary of a step sequence at a single (theta, x)."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    th = np.broadcast_to(th, (dim, th.shape[0]))
    rows = run_steps(steps, np.eye(dim, dtype=complex), th, np.full(dim, float(x)))
    return rows.T
