"""Circuit families used by the experiment runner.

``build_model`` returns a fresh :class:`QruModel` for a family, qubit count
and depth. Families with Haar-random blocks draw new unitaries from ``rng``
on every call, so each call is one sample of the random model.
"""

from __future__ import annotations

import numpy as np

from ..algebra import Generator, build_generator, expm_i, haar_unitary, pauli_string
from ..model import GateStep, QruModel
from .config import ModelSpec

TRANSLATION = {
    "1": (("X",), "ZZ"),
    "2": (("X", "ZZ"), "ZZ"),
    "3": (("X", "ZZ"), "Y"),
}
PERMUTATION = {"A": ("ZZ_all",), "B": ("Y", "X", "ZZ_all")}


def _rotation(pauli: str, q: int, n: int) -> Generator:
    # R_P(theta) = exp(-i theta P / 2)
    return Generator.from_matrix(-0.5 * pauli_string({q: pauli}, n), f"R{pauli}{q}")


def _controlled_rz(c: int, t: int, n: int) -> Generator:
    # |1><1|_c (x) R_z(x)_t as exp(i x g)
    proj = 0.5 * (pauli_string({}, n) - pauli_string({c: "Z"}, n))
    return Generator.from_matrix(-0.5 * proj @ pauli_string({t: "Z"}, n), f"CRz{c}{t}")


def _cnot(c: int, t: int, n: int) -> np.ndarray:
    eye = pauli_string({}, n)
    proj = 0.5 * (eye - pauli_string({c: "Z"}, n))
    return eye - proj + proj @ pauli_string({t: "X"}, n)


def _alternating(spec: ModelSpec, n: int, depth: int) -> QruModel:
    """Single-qubit RZ RY RZ blocks between two staggered rows of controlled X R_z(x) gates.

    With ``base = "entangling"`` every encoding is followed by a CNOT on the
    same pair, so x = 0 leaves a CNOT network; with ``base = "local"`` the
    CNOTs are dropped and x = 0 gives single-qubit rotations only.
    """
    if n < 2:
        raise ValueError("the alternating family needs at least 2 qubits")
    rots = [[_rotation(p, q, n) for p in "ZYZ"] for q in range(n)]
    even = [(q, q + 1) for q in range(0, n - 1, 2)]
    odd = [(q, (q + 1) % n) for q in range(1, n, 2)] if n > 2 else []
    steps: list[GateStep] = []
    j = 0

    def block(layer):
        nonlocal j
        for q in range(n):
            for g in rots[q]:
                steps.append(GateStep.param(g, j, layer))
                j += 1

    def row(pairs, layer):
        for c, t in pairs:
            steps.append(GateStep.encoding(_controlled_rz(c, t, n), layer))
            if spec.base == "entangling":
                steps.append(GateStep.fixed(_cnot(c, t, n), layer))

    for layer in range(depth):
        block(layer)
        row(even, layer)
        block(layer)
        row(odd, layer)
    obs = build_generator(spec.observable or "X", n)
    return QruModel(n, steps, obs)


def _layered(params: list[str], g: str, n: int, depth: int, observable: str) -> QruModel:
    vs = [build_generator(p, n) for p in params]
    enc = build_generator(g, n)
    steps: list[GateStep] = []
    j = 0
    for layer in range(depth):
        for v in vs:
            steps.append(GateStep.param(v, j, layer))
            j += 1
        steps.append(GateStep.encoding(enc, layer))
    return QruModel(n, steps, build_generator(observable, n))


def _haar(spec: ModelSpec, n: int, depth: int, rng) -> QruModel:
    dim = 2**n
    enc = build_generator(spec.generator or "0.5*X", n)
    steps: list[GateStep] = []
    for layer in range(depth):
        steps.append(GateStep.fixed(haar_unitary(dim, rng), layer))
        steps.append(GateStep.encoding(enc, layer))
    steps.append(GateStep.fixed(haar_unitary(dim, rng), depth))
    return QruModel(n, steps, build_generator(spec.observable or "Z0", n))


def _explicit(spec: ModelSpec, n: int, depth: int, rng) -> QruModel:
    steps: list[GateStep] = []
    j = 0
    for layer in range(depth):
        for s in spec.steps:
            kind = s["kind"]
            if kind == "fixed" and s.get("haar"):
                steps.append(GateStep.fixed(haar_unitary(2**n, rng), layer))
                continue
            g = build_generator(s["generator"], n)
            if kind == "param":
                steps.append(GateStep.param(g, j, layer))
                j += 1
            elif kind == "encoding":
                steps.append(GateStep.encoding(g, layer))
            else:
                steps.append(GateStep.fixed(expm_i(g, float(s.get("angle", 1.0))), layer))
    return QruModel(n, steps, build_generator(spec.observable or "Z", n))


def is_random(spec: ModelSpec) -> bool:
    """True when every call to ``build_model`` draws a new circuit."""
    return spec.family == "haar" or (
        spec.family == "explicit" and any(s.get("haar") for s in spec.steps)
    )


def build_model(spec: ModelSpec, n: int, depth: int, rng=None) -> QruModel:
    if spec.family == "alternating":
        return _alternating(spec, n, depth)
    if spec.family == "translation":
        params, g = TRANSLATION[spec.variant or "2"]
        return _layered(spec.params or list(params), spec.generator or g, n, depth, spec.observable or "X")
    if spec.family == "permutation":
        params = PERMUTATION[spec.variant or "B"]
        obs = spec.observable or f"{1.0 / n!r}*Z"
        return _layered(spec.params or list(params), spec.generator or "0.5*X", n, depth, obs)
    if spec.family == "haar":
        return _haar(spec, n, depth, rng)
    if spec.family == "explicit":
        return _explicit(spec, n, depth, rng)
    raise ValueError(f"unknown ansatz family {spec.family!r}")


def encoding_generator(spec: ModelSpec, n: int) -> Generator | None:
    """The single shared encoding generator of a family, if there is one."""
    if spec.family == "translation":
        return build_generator(spec.generator or TRANSLATION[spec.variant or "2"][1], n)
    if spec.family in ("permutation", "haar"):
        return build_generator(spec.generator or "0.5*X", n)
    if spec.family == "explicit":
        gens = {s["generator"] for s in spec.steps if s["kind"] == "encoding"}
        if len(gens) == 1:
            return build_generator(gens.pop(), n)
    return None
