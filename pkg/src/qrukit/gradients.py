"""Monte-Carlo gradient statistics and absorption witnesses.

Everything here is a sample estimate, so every reported number comes with
a standard error or a bias bound.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import numpy as np

from ._rng import make_rng
from .algebra import Generator, expm_i, schatten_norm
from .model import ENCODING, PARAM, ArityError, GateStep, QruModel, layered_view, run_steps, value_and_gradient
from .spectrum import CapacityError

MAX_WITNESS_QUBITS = 5
TWO_PI = 2 * np.pi


# ---------------------------------------------------------------- samplers


@dataclass(frozen=True)
class UniformTheta:
    low: float = 0.0
    high: float = TWO_PI

    def __call__(self, rng: np.random.Generator, n: int, m: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, m))


@dataclass(frozen=True)
class UniformData:
    low: float = -np.pi
    high: float = np.pi

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=n)

    def describe(self) -> str:
        return f"uniform[{self.low:g},{self.high:g}]"


@dataclass(frozen=True)
class GaussianData:
    mean: float = 0.0
    std: float = 1.0

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=n)

    def describe(self) -> str:
        return f"gaussian({self.mean:g},{self.std:g})"


@dataclass(frozen=True)
class DatasetData:
    """Draws uniformly (with replacement) from a fixed set of inputs."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in np.atleast_1d(self.values)))
        if not self.values:
            raise ValueError("dataset must not be empty")

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.asarray(self.values)[rng.integers(0, len(self.values), size=n)]

    def describe(self) -> str:
        return f"dataset(n={len(self.values)})"


def _describe(sampler) -> str:
    return sampler.describe() if hasattr(sampler, "describe") else repr(sampler)


# ---------------------------------------------------------------- variance scans


def _var_and_se(samples: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased sample variance and its standard error along ``axis``."""
    n = samples.shape[axis]
    centered = samples - samples.mean(axis=axis, keepdims=True)
    s2 = np.sum(centered**2, axis=axis) / (n - 1)
    m4 = np.mean(centered**4, axis=axis)
    var_s2 = (m4 - s2**2 * (n - 3) / (n - 1)) / n
    return s2, np.sqrt(np.maximum(var_s2, 0.0))


@dataclass
class VarianceScan:
    expected_var: np.ndarray
    expected_var_se: np.ndarray
    var_at_zero: np.ndarray
    var_at_zero_se: np.ndarray
    var_of_mean: np.ndarray
    var_of_mean_se: np.ndarray
    mean_grad: np.ndarray
    mean_grad_se: np.ndarray
    xs: np.ndarray
    grad_norm_mean: float
    grad_norm_se: float
    n_theta: int
    n_x: int
    data: str = ""
    grad_norm_zero_mean: float = 0.0
    grad_norm_zero_se: float = 0.0

    CSV_HEADER = (
        "param", "expected_var", "expected_var_se", "var_at_zero", "var_at_zero_se",
        "var_of_mean", "var_of_mean_se", "n_theta", "n_x",
    )

    @property
    def n_params(self) -> int:
        return self.expected_var.size

    def difference(self) -> tuple[np.ndarray, np.ndarray]:
        """|E_x Var(x) - Var(0)| per parameter and its combined standard error."""
        diff = np.abs(self.expected_var - self.var_at_zero)
        return diff, np.hypot(self.expected_var_se, self.var_at_zero_se)

    def to_rows(self) -> list[dict]:
        return [
            {
                "param": j,
                "expected_var": float(self.expected_var[j]),
                "expected_var_se": float(self.expected_var_se[j]),
                "var_at_zero": float(self.var_at_zero[j]),
                "var_at_zero_se": float(self.var_at_zero_se[j]),
                "var_of_mean": float(self.var_of_mean[j]),
                "var_of_mean_se": float(self.var_of_mean_se[j]),
                "n_theta": self.n_theta,
                "n_x": self.n_x,
            }
            for j in range(self.n_params)
        ]

    def to_dict(self) -> dict:
        out = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}
        return out


def _gradients(model: QruModel, thetas: np.ndarray, x) -> np.ndarray:
    return value_and_gradient(model, thetas, np.broadcast_to(np.asarray(x, dtype=float), thetas.shape[:1]))[1]


def variance_scan(
    model: QruModel,
    theta_sampler=None,
    data_sampler=None,
    n_theta: int = 1000,
    n_x: int = 16,
    seed=None,
) -> VarianceScan:
    """Gradient variances with data, without data, and of the data-averaged gradient.

    ``E_x Var_Theta`` uses fresh parameters for every x so that the per-x
    variances are independent and their spread gives the standard error.
    """
    if n_theta < 2:
        raise ValueError("n_theta must be >= 2")
    theta_sampler = theta_sampler or UniformTheta()
    data_sampler = data_sampler or GaussianData()
    rng = make_rng(seed)
    m = model.n_params
    probe = np.asarray(theta_sampler(rng, 1, m))
    if probe.shape != (1, m):
        raise ArityError(f"theta sampler returned shape {probe.shape}, expected (1, {m})")
    xs = np.asarray(data_sampler(rng, n_x), dtype=float)

    per_x_var = np.empty((n_x, m))
    per_x_se = np.empty((n_x, m))
    mean_grad = np.empty((n_x, m))
    mean_se = np.empty((n_x, m))
    norms = []
    for i, x in enumerate(xs):
        g = _gradients(model, theta_sampler(rng, n_theta, m), x)
        per_x_var[i], per_x_se[i] = _var_and_se(g)
        mean_grad[i] = g.mean(axis=0)
        mean_se[i] = g.std(axis=0, ddof=1) / np.sqrt(n_theta)
        norms.append(np.linalg.norm(g, axis=1))
    expected_var = per_x_var.mean(axis=0)
    if n_x >= 2:
        expected_se = per_x_var.std(axis=0, ddof=1) / np.sqrt(n_x)
    else:
        expected_se = per_x_se[0]

    g0 = _gradients(model, theta_sampler(rng, n_theta, m), 0.0)
    var0, var0_se = _var_and_se(g0)

    # Var_Theta[E_x grad]: same parameter draws across the whole x sample
    th = theta_sampler(rng, n_theta, m)
    avg = np.zeros((n_theta, m))
    for x in xs:
        avg += _gradients(model, th, x)
    avg /= n_x
    vom, vom_se = _var_and_se(avg)

    norms = np.concatenate(norms)
    norms0 = np.linalg.norm(g0, axis=1)
    return VarianceScan(
        expected_var, expected_se, var0, var0_se, vom, vom_se, mean_grad, mean_se, xs,
        float(norms.mean()), float(norms.std(ddof=1) / np.sqrt(norms.size)), n_theta, n_x,
        _describe(data_sampler), float(norms0.mean()), float(norms0.std(ddof=1) / np.sqrt(norms0.size)),
    )


# ---------------------------------------------------------------- witnesses


@dataclass
class WitnessEstimate:
    """Trace norm of a parameter-averaged difference operator, averaged over x.

    ``value`` is biased upward by sampling noise; ``bias`` bounds that bias
    through ||M||_1 <= sqrt(d) ||M||_F, and ``split_bias`` extrapolates it
    from half-sample estimates (noise in the trace norm scales as n^-1/2).
    """

    side: str
    index: int
    value: float
    stderr: float
    bias: float
    split_bias: float
    n_theta: int
    n_x: int
    data: str = ""

    CSV_HEADER = ("side", "index", "value", "stderr", "bias", "split_bias", "n_theta", "n_x", "data")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_size(n_qubits: int):
    if n_qubits > MAX_WITNESS_QUBITS:
        raise CapacityError(f"gradients: witnesses need 4^n storage; n={n_qubits} > {MAX_WITNESS_QUBITS}")


def _hermitian_trace_norm(m: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))


def _split_norms(diff_fn, n: int, norm_fn) -> tuple[float, float]:
    """Trace norms of the two half-sample averages."""
    h = n // 2
    return norm_fn(diff_fn(slice(0, h))), norm_fn(diff_fn(slice(h, 2 * h)))


def _finish(side, index, per_x, bias_x, split_x, n_theta, data) -> WitnessEstimate:
    per_x = np.asarray(per_x)
    se = float(per_x.std(ddof=1) / np.sqrt(per_x.size)) if per_x.size > 1 else 0.0
    return WitnessEstimate(
        side, index, float(per_x.mean()), se, float(np.mean(bias_x)),
        float(np.mean(split_x)), n_theta, per_x.size, data,
    )


def _right_terms(model, right, th, x):
    n = th.shape[0]
    psi = np.broadcast_to(model.initial_state, (n, model.dim)).copy()
    phi_x = run_steps(right, psi, th, np.full(n, x))
    phi_0 = run_steps(right, psi, th, np.zeros(n))
    return phi_x, phi_0


def _left_terms(model, left, th, x):
    n, dim = th.shape[0], model.dim
    eye = np.tile(np.eye(dim, dtype=complex), (n, 1))
    th_rep = np.repeat(th, dim, axis=0)
    out = []
    for xv in (x, 0.0):
        rows = run_steps(left, eye, th_rep, np.full(n * dim, xv)).reshape(n, dim, dim)
        u = np.transpose(rows, (0, 2, 1))
        out.append(np.einsum("sba,bc,scd->sad", u.conj(), model.observable.matrix, u))
    return out


def _pair_average(vecs: np.ndarray) -> np.ndarray:
    """mean_s |v_s><v_s| for v_s = a_s (x) a_s, as an (N^2, N^2) matrix."""
    n, dim = vecs.shape
    v2 = np.einsum("si,sj->sij", vecs, vecs).reshape(n, dim * dim)
    return v2.T @ v2.conj() / n


def _tensor_square_average(ops: np.ndarray) -> np.ndarray:
    """mean_s O_s (x) O_s as an (N^2, N^2) matrix."""
    n, dim, _ = ops.shape
    flat = ops.reshape(n, dim * dim)
    outer = (flat.T @ flat / n).reshape(dim, dim, dim, dim)
    return outer.transpose(0, 2, 1, 3).reshape(dim * dim, dim * dim)


def absorption_witness(
    model: QruModel,
    j: int,
    side: str,
    data_sampler=None,
    n_theta: int = 1000,
    seed=None,
    n_x: int = 16,
    theta_sampler=None,
) -> WitnessEstimate:
    """Right or left absorption witness of parameter ``j`` (tensor power 2).

    The right part holds every step before the gate carrying ``j``; the left
    part holds that gate and everything after it. The same parameter draws
    are used for x and for the x = 0 reference.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    _check_size(model.n_qubits)
    if n_theta < 4:
        raise ValueError("n_theta must be >= 4")
    data_sampler = data_sampler or GaussianData()
    theta_sampler = theta_sampler or UniformTheta()
    rng = make_rng(seed)
    pos = model.param_step(j)
    part = model.steps[:pos] if side == "right" else model.steps[pos:]
    xs = np.asarray(data_sampler(rng, n_x), dtype=float)
    dim = model.dim
    if not any(s.kind == ENCODING for s in part):
        zeros = np.zeros(n_x)
        return _finish(side, j, zeros, zeros, zeros, n_theta, _describe(data_sampler))

    per_x, bias_x, split_x = [], [], []
    for x in xs:
        th = theta_sampler(rng, n_theta, model.n_params)
        if side == "right":
            a, b = _right_terms(model, part, th, x)

            def diff(sl, a=a, b=b):
                return _pair_average(a[sl]) - _pair_average(b[sl])

            # ||rho_x^(2) - rho_0^(2)||_F^2 = 2 - 2 |<phi_x|phi_0>|^4
            sq = 2.0 - 2.0 * np.abs(np.einsum("si,si->s", a.conj(), b)) ** 4
            d_eff = dim * (dim + 1) / 2
        else:
            hx, h0 = _left_terms(model, part, th, x)

            def diff(sl, hx=hx, h0=h0):
                return _tensor_square_average(hx[sl]) - _tensor_square_average(h0[sl])

            fx = np.einsum("sab,sab->s", hx.conj(), hx).real
            f0 = np.einsum("sab,sab->s", h0.conj(), h0).real
            cross = np.einsum("sab,sba->s", hx, h0).real
            sq = fx**2 + f0**2 - 2.0 * cross**2
            d_eff = dim * dim
        full = diff(slice(None))
        value = _hermitian_trace_norm(full)
        frob2 = float(np.sum(np.abs(full) ** 2))
        noise = max(float(sq.mean()) - frob2, 0.0) / (n_theta - 1)
        h1, h2 = _split_norms(diff, n_theta, _hermitian_trace_norm)
        per_x.append(value)
        bias_x.append(np.sqrt(d_eff * noise))
        split_x.append(max(0.5 * (h1 + h2) - value, 0.0) / (np.sqrt(2) - 1))
    return _finish(side, j, per_x, bias_x, split_x, n_theta, _describe(data_sampler))


def _block_unitaries(block, rng, n: int, dim: int, theta_sampler) -> np.ndarray:
    if callable(block):
        return np.stack([np.asarray(block(rng), dtype=complex) for _ in range(n)])
    steps = tuple(block)
    if any(s.kind == ENCODING for s in steps):
        raise ValueError("a layer block must not contain encoding steps")
    idx = sorted({s.param_index for s in steps if s.kind == PARAM})
    remap = {p: i for i, p in enumerate(idx)}
    local = tuple(
        GateStep.param(s.generator, remap[s.param_index], s.layer_index) if s.kind == PARAM else s
        for s in steps
    )
    th = theta_sampler(rng, n, len(idx))
    eye = np.tile(np.eye(dim, dtype=complex), (n, 1))
    rows = run_steps(local, eye, np.repeat(th, dim, axis=0), np.zeros(n * dim))
    return np.transpose(rows.reshape(n, dim, dim), (0, 2, 1))


def layerwise_witness(
    block,
    encoding: Generator,
    data_sampler=None,
    n_theta: int = 1000,
    seed=None,
    n_x: int = 16,
    theta_sampler=None,
    index: int = 0,
) -> WitnessEstimate:
    """E_x || E_theta[(V(x) u(theta))^(2) - u(theta)^(2)] ||_1 for one layer.

    ``block`` is either a sequence of non-encoding GateSteps or a callable
    ``rng -> unitary`` that samples the parameterized block directly.
    """
    dim = encoding.dim
    _check_size(encoding.n_qubits)
    if n_theta < 4:
        raise ValueError("n_theta must be >= 4")
    data_sampler = data_sampler or GaussianData()
    theta_sampler = theta_sampler or UniformTheta()
    rng = make_rng(seed)
    us = _block_unitaries(block, rng, n_theta, dim, theta_sampler)
    xs = np.asarray(data_sampler(rng, n_x), dtype=float)
    flat = np.einsum("sab,scd->sacbd", us, us).reshape(n_theta, dim**2, dim**2)
    mean_full = flat.mean(axis=0)
    h = n_theta // 2
    halves = (flat[:h].mean(axis=0), flat[h : 2 * h].mean(axis=0))
    eye2 = np.eye(dim**2)
    per_x, bias_x, split_x = [], [], []
    for x in xs:
        v = expm_i(encoding, x)
        shift = np.kron(v, v) - eye2
        value = schatten_norm(shift @ mean_full)
        # per-sample Frobenius norm is ||shift||_F because u (x) u is unitary
        sq = float(np.sum(np.abs(shift) ** 2))
        noise = max(sq - float(np.sum(np.abs(shift @ mean_full) ** 2)), 0.0) / (n_theta - 1)
        h1, h2 = (schatten_norm(shift @ m) for m in halves)
        per_x.append(value)
        bias_x.append(np.sqrt(dim**2 * noise))
        split_x.append(max(0.5 * (h1 + h2) - value, 0.0) / (np.sqrt(2) - 1))
    return _finish("layerwise", index, per_x, bias_x, split_x, n_theta, _describe(data_sampler))


@dataclass
class BoundReport:
    index: int
    lhs: float
    lhs_err: float
    rhs: float
    layered_rhs: float | None
    passed: bool
    right_term: float
    left_term: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_variance_bound(
    scan: VarianceScan,
    right: WitnessEstimate,
    left: WitnessEstimate,
    model: QruModel,
    layer_witness: WitnessEstimate | None = None,
    n_sigma: float = 3.0,
) -> BoundReport:
    """Compare the measured variance shift of one parameter with its witness bound.

    The bound is 4 ||V_j||^2 (||H||^2 B_R + ||rho_0||^2 B_L). With a
    layerwise witness A, the looser 8 L ||V_j||^2 ||H||^2 ||rho_0||^2 A is
    reported too.
    """
    if right.side != "right" or left.side != "left":
        raise ValueError("expected one right and one left witness")
    if right.index != left.index:
        raise ValueError(f"witnesses belong to different gates ({right.index} vs {left.index})")
    j = right.index
    if not 0 <= j < scan.n_params:
        raise ValueError(f"parameter {j} not in scan")
    v_norm = model.steps[model.param_step(j)].generator.spectral_norm
    h_norm = model.observable.spectral_norm
    rho_norm = 1.0  # pure initial state
    diff, err = scan.difference()
    right_term = 4 * v_norm**2 * h_norm**2 * right.value
    left_term = 4 * v_norm**2 * rho_norm**2 * left.value
    rhs = right_term + left_term
    layered = None
    if layer_witness is not None:
        layers = layered_view(model).count
        layered = 8 * layers * v_norm**2 * h_norm**2 * rho_norm**2 * layer_witness.value
    lhs_err = float(err[j])
    passed = bool(diff[j] <= rhs + n_sigma * lhs_err)
    return BoundReport(j, float(diff[j]), lhs_err, rhs, layered, passed, right_term, left_term)


# ---------------------------------------------------------------- information content


@dataclass
class InformationContent:
    eps: np.ndarray
    info: np.ndarray
    eps_max: float
    grad_proxy: float
    n_steps: int = 0
    step_size: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps.tolist(), "info": self.info.tolist(), "eps_max": self.eps_max,
            "grad_proxy": self.grad_proxy, "n_steps": self.n_steps, "step_size": self.step_size,
        }


def _pair_entropy(symbols: np.ndarray) -> float:
    a, b = symbols[:-1], symbols[1:]
    hetero = a != b
    if not np.any(hetero):
        return 0.0
    counts = np.bincount((a[hetero] + 1) * 3 + (b[hetero] + 1), minlength=9)
    p = counts[counts > 0] / a.size
    return float(-np.sum(p * np.log(p)) / np.log(6))


def information_content(
    model: QruModel,
    x: float,
    walk: dict | None = None,
    eps_grid=None,
    seed=None,
) -> InformationContent:
    """Landscape information content along a random walk in parameter space.

    Each step moves every parameter by +-step_size. Increments of h are
    normalized by the step length and quantized to {-1, 0, +1} with
    threshold eps; I(eps) is the base-6 entropy of unequal consecutive
    symbol pairs. The maximizing eps times sqrt(m) proxies E||grad h||.
    """
    walk = {"n_steps": 10_000, "step_size": 0.05, **(walk or {})}
    n_steps, step_size = int(walk["n_steps"]), float(walk["step_size"])
    if n_steps < 100:
        raise ValueError("n_steps must be >= 100")
    rng = make_rng(seed)
    m = model.n_params
    start = rng.uniform(0, TWO_PI, size=m)
    steps = step_size * rng.choice((-1.0, 1.0), size=(n_steps, m))
    path = start + np.vstack([np.zeros((1, m)), np.cumsum(steps, axis=0)])
    h = value_and_gradient(model, path, np.full(n_steps + 1, float(x)))[0]
    delta = np.diff(h) / (step_size * np.sqrt(m))
    delta[np.abs(delta) < 1e-12] = 0.0
    top = float(np.max(np.abs(delta)))
    if eps_grid is None:
        eps_grid = top * np.geomspace(1e-3, 1.0, 200) if top > 0 else np.geomspace(1e-6, 1.0, 10)
    eps_grid = np.asarray(eps_grid, dtype=float)
    if top == 0:
        return InformationContent(eps_grid, np.zeros_like(eps_grid), 0.0, 0.0, n_steps, step_size)
    info = np.array([_pair_entropy(np.where(np.abs(delta) <= e, 0, np.sign(delta)).astype(int)) for e in eps_grid])
    eps_max = float(eps_grid[int(np.argmax(info))])
    return InformationContent(eps_grid, info, eps_max, float(eps_max * np.sqrt(m)), n_steps, step_size)
