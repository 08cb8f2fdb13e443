import json
from pathlib import Path

import numpy as np
import pytest

from qrukit.algebra import build_generator
from qrukit.model import hypothesis
from qrukit.runner.ansatz import build_model
from qrukit.runner.cli import git_blob_hash, main, to_csv
from qrukit.runner.config import ConfigError, ModelSpec, parse_config
from qrukit.runner.train import TrainConfig, TrainingDiverged, step_target, train

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASIC = """\
kind = "gradient_scan"
seed = 3

[model]
family = "translation"
variant = "2"
n_qubits = [3]
depth = [1, 2]

[sampling]
n_theta = 400
n_x = 6
data = { dist = "gaussian", mean = 0.0, std = 1.0 }
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_basic():
    cfg = parse_config(BASIC)
    assert cfg.kind == "gradient_scan" and cfg.seed == 3
    assert cfg.model.n_qubits == [3] and cfg.model.depth == [1, 2]
    assert cfg.sampling.n_theta == 400


@pytest.mark.parametrize(
    "edit, line, message",
    [
        (("depth = [1, 2]", "depth = []"), 8, "must not be empty"),
        (('family = "translation"', 'family = "hexagonal"'), 5, "unknown ansatz family"),
        (("n_theta = 400", "n_theta = -4"), 11, "must be positive"),
        (('kind = "gradient_scan"', 'kind = "sweep"'), 1, "unknown experiment kind"),
        (("n_qubits = [3]", "n_qubits = [0]"), 7, "positive integers"),
        (("n_x = 6", 'n_x = "six"'), 12, "type int"),
    ],
)
def test_config_errors_carry_line_numbers(edit, line, message):
    with pytest.raises(ConfigError, match=message) as info:
        parse_config(BASIC.replace(*edit), "cfg.toml")
    assert info.value.line == line
    assert f"cfg.toml:{line}:" in str(info.value)


def test_invalid_toml():
    with pytest.raises(ConfigError) as info:
        parse_config('kind = "gradient_scan"\nseed = \n')
    assert info.value.line == 2


def test_example_configs_validate():
    paths = sorted(CONFIGS.glob("*.toml"))
    assert paths
    for p in paths:
        assert main(["validate", str(p)]) == 0


def test_alternating_family():
    spec = ModelSpec("alternating", [4], [1], base="local")
    m = build_model(spec, 4, 2)
    assert m.n_params == 2 * 2 * 4 * 3
    th = np.random.default_rng(0).uniform(0, 6, m.n_params)
    # at x = 0 the local variant is a product circuit: <sum X_q> is a sum of one-qubit terms
    assert abs(hypothesis(m, th, 0.0)) <= 4 + 1e-12
    ent = build_model(ModelSpec("alternating", [4], [1], base="entangling"), 4, 2)
    assert hypothesis(m, th, 0.3) != pytest.approx(hypothesis(ent, th, 0.3))


def test_translation_and_permutation_families():
    m = build_model(ModelSpec("translation", [3], [2], variant="3"), 3, 2)
    assert m.n_params == 4
    assert np.allclose(m.encoding_generators[0].matrix, build_generator("Y", 3).matrix)
    b = build_model(ModelSpec("permutation", [4], [5], variant="B"), 4, 5)
    assert b.n_params == 15
    assert np.allclose(b.observable.matrix, build_generator("0.25*Z", 4).matrix)


def test_haar_family_draws_new_circuits():
    spec = ModelSpec("haar", [2], [2])
    rng = np.random.default_rng(0)
    a, b = build_model(spec, 2, 2, rng), build_model(spec, 2, 2, rng)
    assert not np.allclose(a.steps[0].unitary, b.steps[0].unitary)
    assert a.n_params == 0


def test_step_target_spectrum():
    xs = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    spec = np.abs(np.fft.rfft(step_target(5)(xs))) / 64
    assert np.allclose(spec[:6], 1 / 11) and np.allclose(spec[6:], 0, atol=1e-14)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(k_target=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)


def test_train_self_target():
    m = build_model(ModelSpec("permutation", [2], [2], variant="B"), 2, 2)
    rng = np.random.default_rng(100)
    star = rng.uniform(0, 2 * np.pi, m.n_params)

    def target(x):
        return hypothesis(m, np.broadcast_to(star, (x.size, m.n_params)), x)

    start = star + rng.normal(0, 0.1, m.n_params)
    res = train(m, TrainConfig(k_target=1), target=target, theta0=start)
    assert res.final_loss <= 1e-4
    assert res.loss_trace[-1] < res.loss_trace[0]


def test_train_rejects_unreachable_target():
    m = build_model(ModelSpec("permutation", [2], [1], variant="B"), 2, 1)
    with pytest.raises(ValueError, match="exceeds"):
        train(m, TrainConfig(k_target=5, iterations=1))


def test_train_divergence_abort():
    m = build_model(ModelSpec("permutation", [2], [2], variant="B"), 2, 2)
    star = np.random.default_rng(1).uniform(0, 2 * np.pi, m.n_params)

    def target(x):
        return hypothesis(m, np.broadcast_to(star, (x.size, m.n_params)), x)

    with pytest.raises(TrainingDiverged) as info:
        train(m, TrainConfig(k_target=1, learning_rate=200.0, iterations=500), target=target, theta0=star + 1e-3)
    assert info.value.initial < info.value.loss


def test_csv_format():
    text = to_csv([{"a": 1, "b": 0.5}, {"a": 2, "b": True, "c": "x,y"}])
    assert text.splitlines()[0] == "a,b,c"
    assert text.endswith("\r\n")
    assert '"x,y"' in text and "true" in text


def test_git_blob_hash():
    # values from `git hash-object`
    assert git_blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
    assert git_blob_hash(b"a,b\r\n1,2\r\n") == "dfacc134b994ea6aefa0a3899556431a4663a744"


def test_run_writes_outputs(tmp_path):
    cfg = write(tmp_path, BASIC)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out-dir", str(out)]) == 0
    for name in ("results.csv", "results.json", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["config"]["model"]["family"] == "translation"
    assert manifest["hashes"]["results.csv"] == git_blob_hash((out / "results.csv").read_bytes())
    assert manifest["wall_time_s"] > 0
    results = json.loads((out / "results.json").read_text())
    assert list(results) == sorted(results)
    # the second translation model absorbs data by a parameter shift
    for row in (out / "results.csv").read_text().splitlines()[1:]:
        vals = dict(zip((out / "results.csv").read_text().splitlines()[0].split(","), row.split(",")))
        diff = abs(float(vals["grad_norm_data"]) - float(vals["grad_norm_zero"]))
        err = np.hypot(float(vals["grad_norm_data_se"]), float(vals["grad_norm_zero_se"]))
        assert diff <= 3 * err


def test_runs_are_reproducible_across_thread_counts(tmp_path):
    cfg = write(tmp_path, BASIC)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "b"), "--threads", "2"]) == 0
    for name in ("results.csv", "results.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() != (tmp_path / "c" / "results.csv").read_bytes()


def test_empty_sweep_writes_nothing(tmp_path, capsys):
    cfg = write(tmp_path, BASIC.replace("depth = [1, 2]", "depth = []"))
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out-dir", str(out)]) == 1
    assert not out.exists()
    assert "cfg.toml:8:" in capsys.readouterr().err


def test_runtime_error_names_module(tmp_path, capsys):
    text = BASIC.replace('kind = "gradient_scan"', 'kind = "witness_audit"').replace("n_qubits = [3]", "n_qubits = [6]")
    cfg = write(tmp_path, text)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    assert "qrukit.gradients" in capsys.readouterr().err


def test_frequency_profile_run(tmp_path):
    text = """\
kind = "frequency_profile"
seed = 1
[model]
family = "haar"
generator = "0.5*X"
n_qubits = [2]
depth = [3]
[sampling]
n_theta = 300
"""
    out = tmp_path / "fp"
    assert main(["run", str(write(tmp_path, text)), "--out-dir", str(out)]) == 0
    point = json.loads((out / "results.json").read_text())["points"][0]
    assert point["theory_variance"] == pytest.approx(1.5)
    assert abs(point["fitted_variance"] - 1.5) <= 4 * point["fitted_variance_se"]


def test_oracle_command(capsys):
    assert main(["oracle", "binomial"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True
