"""Experiment configuration files (TOML) and their validation."""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("gradient_scan", "frequency_profile", "variance_scaling", "lipschitz_cdf", "witness_audit", "train")
FAMILIES = ("alternating", "translation", "permutation", "haar", "explicit")
DISTRIBUTIONS = ("gaussian", "uniform", "dataset")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass
class ModelSpec:
    family: str
    n_qubits: list[int]
    depth: list[int]
    generator: str | None = None
    observable: str | None = None
    params: list[str] | None = None
    variant: str | None = None
    base: str = "entangling"
    steps: list[dict] = field(default_factory=list)


@dataclass
class SamplingSpec:
    n_theta: int = 200
    n_x: int = 16
    data: dict = field(default_factory=lambda: {"dist": "gaussian", "mean": 0.0, "std": 1.0})
    ic: bool = False
    ic_steps: int = 10_000
    ic_step_size: float = 0.05


@dataclass
class TrainSpec:
    k_targets: list[int] = field(default_factory=lambda: [4])
    grid: int = 256
    learning_rate: float = 0.05
    iterations: int = 2000


@dataclass
class ExperimentConfig:
    kind: str
    model: ModelSpec
    sampling: SamplingSpec
    seed: int = 0
    out_dir: str = "results"
    train: TrainSpec | None = None
    raw: dict = field(default_factory=dict, repr=False)
    source: str = ""


def _line_of(text: str, table: str | None, key: str) -> int | None:
    """Best-effort line number of ``key`` (inside ``[table]`` when given)."""
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"^\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            continue
        if current == table and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return no
    return None


class _Checker:
    def __init__(self, text: str, path: str | None):
        self.text = text
        self.path = path

    def fail(self, table, key, message):
        line = _line_of(self.text, table, key)
        if line is None and table is not None:
            line = _line_of_table(self.text, table)
        raise ConfigError(message, line, self.path)

    def get(self, doc: dict, table, key, kind, default=..., positive=False):
        if key not in doc:
            if default is ...:
                self.fail(table, key, f"missing required key {key!r}" + (f" in [{table}]" if table else ""))
            return default
        value = doc[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is list:
            if not isinstance(value, list):
                self.fail(table, key, f"{key!r} must be a list")
        elif not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            self.fail(table, key, f"{key!r} must be of type {kind.__name__}")
        if positive and kind in (int, float) and value <= 0:
            self.fail(table, key, f"{key!r} must be positive")
        return value

    def int_list(self, doc, table, key, default=...):
        vals = self.get(doc, table, key, list, default)
        if isinstance(vals, int):
            vals = [vals]
        if not vals:
            self.fail(table, key, f"{key!r} must not be empty")
        if not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in vals):
            self.fail(table, key, f"{key!r} must contain positive integers")
        return list(vals)


def _line_of_table(text: str, table: str) -> int | None:
    for no, line in enumerate(text.splitlines(), start=1):
        if re.match(rf"^\s*\[{re.escape(table)}\]", line):
            return no
    return None


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", int(m.group(1)) if m else None, path) from exc
    c = _Checker(text, path)

    kind = c.get(doc, None, "kind", str)
    if kind not in KINDS:
        c.fail(None, "kind", f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    seed = c.get(doc, None, "seed", int, 0)
    out_dir = c.get(doc, None, "out_dir", str, "results")

    if "model" not in doc or not isinstance(doc["model"], dict):
        raise ConfigError("missing [model] table", None, path)
    md = doc["model"]
    family = c.get(md, "model", "family", str)
    if family not in FAMILIES:
        c.fail("model", "family", f"unknown ansatz family {family!r}; expected one of {', '.join(FAMILIES)}")
    n_qubits = c.int_list(md, "model", "n_qubits")
    if "depth" in md or family != "explicit":
        depth = c.int_list(md, "model", "depth")
    else:
        depth = [1]
    if max(n_qubits) > 12:
        c.fail("model", "n_qubits", "at most 12 qubits are supported")
    params = c.get(md, "model", "params", list, None)
    if params is not None and (not params or not all(isinstance(p, str) for p in params)):
        c.fail("model", "params", "'params' must be a non-empty list of generator strings")
    variant = md.get("variant")
    if variant is not None:
        variant = str(variant)
    base = c.get(md, "model", "base", str, "entangling")
    if base not in ("local", "entangling"):
        c.fail("model", "base", "'base' must be 'local' or 'entangling'")
    steps = md.get("steps", [])
    if family == "explicit":
        if not steps:
            c.fail("model", "family", "explicit models need a non-empty [[model.steps]] list")
        for s in steps:
            if s.get("kind") not in ("param", "fixed", "encoding"):
                raise ConfigError(f"step kind must be param, fixed or encoding, got {s.get('kind')!r}", None, path)
    model = ModelSpec(
        family, n_qubits, depth,
        c.get(md, "model", "generator", str, None),
        c.get(md, "model", "observable", str, None),
        params, variant, base, steps,
    )
    if family == "translation" and variant not in (None, "1", "2", "3"):
        c.fail("model", "variant", "translation variant must be 1, 2 or 3")
    if family == "permutation" and variant not in (None, "A", "B"):
        c.fail("model", "variant", "permutation variant must be 'A' or 'B'")

    sd = doc.get("sampling", {})
    data = sd.get("data", {"dist": "gaussian", "mean": 0.0, "std": 1.0})
    if not isinstance(data, dict) or data.get("dist") not in DISTRIBUTIONS:
        c.fail("sampling", "data", f"data.dist must be one of {', '.join(DISTRIBUTIONS)}")
    if data["dist"] == "dataset" and not data.get("values"):
        c.fail("sampling", "data", "dataset distributions need a non-empty 'values' list")
    sampling = SamplingSpec(
        c.get(sd, "sampling", "n_theta", int, 200, positive=True),
        c.get(sd, "sampling", "n_x", int, 16, positive=True),
        data,
        c.get(sd, "sampling", "ic", bool, False),
        c.get(sd, "sampling", "ic_steps", int, 10_000, positive=True),
        c.get(sd, "sampling", "ic_step_size", float, 0.05, positive=True),
    )
    if sampling.n_theta < 2:
        c.fail("sampling", "n_theta", "'n_theta' must be at least 2")

    train = None
    if kind == "train":
        td = doc.get("train")
        if not isinstance(td, dict):
            raise ConfigError("train experiments need a [train] table", None, path)
        train = TrainSpec(
            c.int_list(td, "train", "k_targets"),
            c.get(td, "train", "grid", int, 256, positive=True),
            c.get(td, "train", "learning_rate", float, 0.05, positive=True),
            c.get(td, "train", "iterations", int, 2000, positive=True),
        )
    return ExperimentConfig(kind, model, sampling, seed, out_dir, train, doc, text)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(path)) from exc
    return parse_config(text, str(path))
