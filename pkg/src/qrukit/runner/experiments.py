"""Experiment kinds: each maps one sweep point (n_qubits, depth) to result rows.

A point function receives the parsed config, the point and a seed, and
returns ``(rows, summary)``: CSV rows as flat dicts plus a JSON-ready dict.
Points are independent, so the CLI may run them in any order or in parallel.
"""

from __future__ import annotations

import numpy as np

from .._rng import make_rng
from ..gradients import (
    DatasetData,
    GaussianData,
    UniformData,
    UniformTheta,
    absorption_witness,
    check_variance_bound,
    information_content,
    layerwise_witness,
    variance_scan,
)
from ..harmonic import measure_fourier, simulate_harmonic, weight_vector
from ..lipschitz import average_bounds, deviation_cdf, lambda_bound, numeric_lipschitz
from ..model import NotLayeredError, layered_view
from ..spectrum import extract_kernel, kernel_moments, power_convolve
from .ansatz import build_model, encoding_generator, is_random
from .config import ExperimentConfig
from .train import TrainConfig, train

TWO_PI = 2 * np.pi


def data_sampler(data: dict):
    dist = data["dist"]
    if dist == "gaussian":
        return GaussianData(float(data.get("mean", 0.0)), float(data.get("std", 1.0)))
    if dist == "uniform":
        return UniformData(float(data.get("low", 0.0)), float(data.get("high", TWO_PI)))
    return DatasetData(np.asarray(data["values"], dtype=float))


def _theory_variance(cfg: ExperimentConfig, n: int, L: int) -> float | None:
    g = encoding_generator(cfg.model, n)
    if g is None:
        return None
    k = extract_kernel(g)
    _, cov = kernel_moments(k)
    if cov.shape != (1, 1):
        return None
    return float(L * cov[0, 0] * k.mu[0] ** 2)


def _profiles(cfg: ExperimentConfig, n: int, L: int, rng, count: int):
    """Yield harmonic states of ``count`` model samples (new circuit or new theta each time)."""
    fixed = None if is_random(cfg.model) else build_model(cfg.model, n, L)
    for _ in range(count):
        model = fixed if fixed is not None else build_model(cfg.model, n, L, rng)
        theta = rng.uniform(0, TWO_PI, model.n_params)
        yield model, simulate_harmonic(model, theta)


def _moment_variance(m1: np.ndarray, m2: np.ndarray) -> tuple[float, float]:
    """Variance of the sample-averaged weight profile, with a delta-method standard error."""
    n = m1.size
    mean1 = m1.mean()
    var = float(m2.mean() - mean1**2)
    influence = m2 - 2 * mean1 * m1
    return var, float(influence.std(ddof=1) / np.sqrt(n))


# ---------------------------------------------------------------- kinds


def gradient_scan(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    rng = make_rng(seed)
    model = build_model(cfg.model, n, L, rng)
    data = data_sampler(cfg.sampling.data)
    scan = variance_scan(model, UniformTheta(), data, cfg.sampling.n_theta, cfg.sampling.n_x, rng)
    row = {
        "n_qubits": n,
        "depth": L,
        "n_params": model.n_params,
        "grad_norm_data": scan.grad_norm_mean,
        "grad_norm_data_se": scan.grad_norm_se,
        "grad_norm_zero": scan.grad_norm_zero_mean,
        "grad_norm_zero_se": scan.grad_norm_zero_se,
        "mean_var_data": float(scan.expected_var.mean()),
        "mean_var_data_se": float(np.sqrt(np.sum(scan.expected_var_se**2)) / model.n_params),
        "mean_var_zero": float(scan.var_at_zero.mean()),
        "mean_var_zero_se": float(np.sqrt(np.sum(scan.var_at_zero_se**2)) / model.n_params),
    }
    summary = {"n_qubits": n, "depth": L, "scan": scan.to_dict()}
    if cfg.sampling.ic:
        x = float(data(rng, 1)[0])
        walk = {"n_steps": cfg.sampling.ic_steps, "step_size": cfg.sampling.ic_step_size}
        ic = information_content(model, x, walk, seed=rng)
        row["ic_grad_proxy"] = ic.grad_proxy
        summary["information_content"] = ic.to_dict()
    return [row], summary


def frequency_profile(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    rng = make_rng(seed)
    count = cfg.sampling.n_theta
    acc: dict[tuple, np.ndarray] = {}
    m1 = np.empty(count)
    m2 = np.empty(count)
    mu = None
    for s, (_, hs) in enumerate(_profiles(cfg, n, L, rng, count)):
        keys, w = weight_vector(hs)
        mu = hs.lattice.mu
        f = keys @ mu
        m1[s], m2[s] = w @ f, w @ f**2
        for k, wk in zip(map(tuple, keys.tolist()), w):
            acc.setdefault(k, np.zeros(count))[s] += wk
    keys = sorted(acc)
    var, var_se = _moment_variance(m1, m2)
    theory = _theory_variance(cfg, n, L)
    rows = []
    for k in keys:
        w = acc[k]
        rows.append({
            "n_qubits": n,
            "depth": L,
            "key": " ".join(map(str, k)),
            "frequency": float(np.dot(k, mu)),
            "weight": float(w.mean()),
            "weight_se": float(w.std(ddof=1) / np.sqrt(count)),
            "fitted_variance": var,
            "fitted_variance_se": var_se,
            "theory_variance": theory if theory is not None else "",
        })
    summary = {"n_qubits": n, "depth": L, "samples": count, "mu": np.asarray(mu).tolist(),
               "fitted_variance": var, "fitted_variance_se": var_se, "theory_variance": theory}
    g = encoding_generator(cfg.model, n)
    if g is not None and is_random(cfg.model):
        kern = power_convolve(extract_kernel(g), L)
        summary["kernel"] = {" ".join(map(str, k)): float(w) for k, w in zip(kern.keys.tolist(), kern.weights)}
    return rows, summary


def variance_scaling(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    rng = make_rng(seed)
    count = cfg.sampling.n_theta
    m1 = np.empty(count)
    m2 = np.empty(count)
    for s, (_, hs) in enumerate(_profiles(cfg, n, L, rng, count)):
        keys, w = weight_vector(hs)
        f = keys @ hs.lattice.mu
        m1[s], m2[s] = w @ f, w @ f**2
    var, se = _moment_variance(m1, m2)
    theory = _theory_variance(cfg, n, L)
    row = {"n_qubits": n, "depth": L, "variance": var, "variance_se": se,
           "theory_variance": theory if theory is not None else ""}
    return [row], dict(row, theory_variance=theory)


def fit_slopes(rows: list[dict]) -> dict[int, dict]:
    """Least-squares slope of variance against depth for each qubit count."""
    out = {}
    for n in sorted({r["n_qubits"] for r in rows}):
        sel = sorted((r for r in rows if r["n_qubits"] == n), key=lambda r: r["depth"])
        if len(sel) < 2:
            continue
        L = np.array([r["depth"] for r in sel], dtype=float)
        v = np.array([r["variance"] for r in sel])
        slope, intercept = np.polyfit(L, v, 1)
        entry = {"slope": float(slope), "intercept": float(intercept)}
        if sel[0]["theory_variance"] not in ("", None):
            entry["theory_slope"] = float(sel[0]["theory_variance"]) / sel[0]["depth"]
        out[n] = entry
    return out


def lipschitz_cdf(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    rng = make_rng(seed)
    count = cfg.sampling.n_theta
    g = encoding_generator(cfg.model, n)
    if g is None:
        raise ValueError("lipschitz_cdf needs a family with a single encoding generator")
    kernel = extract_kernel(g)
    lam = np.empty(count)
    lip = np.empty(count)
    h_norm = None
    for s, (model, hs) in enumerate(_profiles(cfg, n, L, rng, count)):
        prof = measure_fourier(hs, model.observable)
        h_norm = prof.observable_norm
        lam[s] = lambda_bound(prof)
        lip[s] = numeric_lipschitz(prof)
    lower, upper = average_bounds(kernel, L, h_norm)
    table = deviation_cdf(lam, kernel, L, h_norm)
    rows = [{"n_qubits": n, "depth": L, **r} for r in table.rows()]
    summary = {
        "n_qubits": n, "depth": L, "samples": count,
        "mean_lambda": float(lam.mean()), "mean_lambda_se": float(lam.std(ddof=1) / np.sqrt(count)),
        "mean_lipschitz": float(lip.mean()), "mean_lipschitz_se": float(lip.std(ddof=1) / np.sqrt(count)),
        "theory_lower": lower, "theory_upper": upper, "reference": table.reference,
    }
    return rows, summary


def witness_audit(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    rng = make_rng(seed)
    model = build_model(cfg.model, n, L, rng)
    data = data_sampler(cfg.sampling.data)
    nt, nx = cfg.sampling.n_theta, cfg.sampling.n_x
    scan = variance_scan(model, UniformTheta(), data, nt, nx, rng)
    layer = None
    try:
        view = layered_view(model)
        first = view.layers[0]
        layer = layerwise_witness(first.block, first.encoding.generator, data, nt, rng, nx)
    except (NotLayeredError, ValueError, IndexError):
        layer = None
    rows = []
    for j in range(model.n_params):
        right = absorption_witness(model, j, "right", data, nt, rng, nx)
        left = absorption_witness(model, j, "left", data, nt, rng, nx)
        rep = check_variance_bound(scan, right, left, model, layer)
        rows.append({
            "n_qubits": n, "depth": L, "param": j,
            "lhs": rep.lhs, "lhs_se": rep.lhs_err, "rhs": rep.rhs,
            "layered_rhs": rep.layered_rhs if rep.layered_rhs is not None else "",
            "witness_right": right.value, "witness_right_se": right.stderr, "bias_right": right.bias,
            "witness_left": left.value, "witness_left_se": left.stderr, "bias_left": left.bias,
            "passed": rep.passed,
        })
    summary = {"n_qubits": n, "depth": L, "all_passed": all(r["passed"] for r in rows),
               "layer_witness": layer.to_dict() if layer is not None else None}
    return rows, summary


def train_point(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    rng = make_rng(seed)
    model = build_model(cfg.model, n, L, rng)
    ts = cfg.train
    rows, runs = [], []
    for K in ts.k_targets:
        res = train(model, TrainConfig(K, ts.grid, ts.learning_rate, ts.iterations), seed=rng)
        for k, t, f in zip(res.k, res.target_abs, res.fitted_abs):
            rows.append({"n_qubits": n, "depth": L, "k_target": K, "k": int(k),
                         "target_abs": float(t), "fitted_abs": float(f)})
        stride = max(1, res.loss_trace.size // 200)
        runs.append({"k_target": K, "final_loss": res.final_loss,
                     "loss_trace": res.loss_trace[::stride].tolist(), "loss_stride": stride,
                     "theta": res.theta.tolist()})
    return rows, {"n_qubits": n, "depth": L, "runs": runs}


KIND_FUNCS = {
    "gradient_scan": gradient_scan,
    "frequency_profile": frequency_profile,
    "variance_scaling": variance_scaling,
    "lipschitz_cdf": lipschitz_cdf,
    "witness_audit": witness_audit,
    "train": train_point,
}


def sweep_points(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    return [(n, L) for n in cfg.model.n_qubits for L in cfg.model.depth]


def run_point(cfg: ExperimentConfig, n: int, L: int, seed) -> tuple[list[dict], dict]:
    return KIND_FUNCS[cfg.kind](cfg, n, L, seed)
