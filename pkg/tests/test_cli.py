import csv
import io
import json
import math

import numpy as np
import pytest

from secrecykit.cli import main
from secrecykit.config import FAMILY_EXAMPLES, ChannelConfig, ScenarioConfig

RAYLEIGH_PAIR = {
    "main": {"family": "rayleigh", "params": {}, "mean_snr_db": 10.0},
    "wiretap": {"family": "rayleigh", "params": {}, "mean_snr_db": 0.0},
    "metric": "pnz",
}


def write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def sweep_cfg(**extra):
    cfg = {"main": {"family": "rayleigh", "params": {}, "mean_snr_db": 0.0},
           "wiretap": {"family": "rayleigh", "params": {}, "mean_snr_db": 0.0},
           "metric": "pnz", "sweep": {"lo_db": -5, "hi_db": 15, "step_db": 1}}
    cfg.update(extra)
    return cfg


def test_metric_prints_json(tmp_path, capsys):
    code, out, _ = run(capsys, "metric", "--config", write(tmp_path, RAYLEIGH_PAIR))
    assert code == 0
    record = json.loads(out)
    assert record["metric"] == "pnz"
    assert record["value"] == pytest.approx(10 / 11, abs=1e-12)
    assert "std_error" not in record


def test_sop_at_zero_rate_is_complement(tmp_path, capsys):
    _, out, _ = run(capsys, "metric", "--config", write(tmp_path, dict(RAYLEIGH_PAIR, metric="sop")))
    assert json.loads(out)["value"] == pytest.approx(1 / 11, abs=1e-12)


@pytest.mark.parametrize("backend", ["foxh", "mg"])
def test_backend_override(tmp_path, capsys, backend):
    code, out, _ = run(capsys, "metric", "--backend", backend, "--config", write(tmp_path, RAYLEIGH_PAIR))
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(10 / 11, abs=1e-9)


def test_bad_family_names_field(tmp_path, capsys):
    bad = dict(RAYLEIGH_PAIR, main={"family": "rician", "params": {}, "mean_snr_db": 1.0})
    code, _, err = run(capsys, "metric", "--config", write(tmp_path, bad))
    assert code == 2
    assert "main.family" in err


def test_every_bad_field_listed(tmp_path, capsys):
    bad = {"main": {"family": "nakagami_m", "params": {"m": -1}, "mean_snr_db": 10},
           "wiretap": {"family": "kg", "params": {}, "mean_snr_db": "x"},
           "metric": "outage", "colour": 3}
    code, _, err = run(capsys, "metric", "--config", write(tmp_path, bad))
    assert code == 2
    for field in ("main", "wiretap", "metric", "colour"):
        assert field in err


def test_json_syntax_error_has_position(tmp_path, capsys):
    path = write(tmp_path, '{\n  "main": ,\n}', name="syn.json")
    code, _, err = run(capsys, "metric", "--config", path)
    assert code == 2
    assert "syn.json:2:" in err


def test_missing_config(capsys):
    assert run(capsys, "metric")[0] == 2
    assert run(capsys, "metric", "--config", "/nonexistent/cfg.json")[0] == 2


def test_mg_backend_rejects_unsupported_family(tmp_path, capsys):
    cfg = dict(RAYLEIGH_PAIR, backend="mg",
               main={"family": "weibull", "params": {"alpha": 2}, "mean_snr_db": 3})
    code, _, err = run(capsys, "metric", "--config", write(tmp_path, cfg))
    assert code == 2
    assert "no MG recipe" in err


def test_mc_command(tmp_path, capsys):
    path = write(tmp_path, RAYLEIGH_PAIR)
    code, out, _ = run(capsys, "mc", "--config", path, "--draws", "200000", "--seed", "4")
    assert code == 0
    rec = json.loads(out)
    assert rec["draws"] == 200000 and rec["seed"] == 4
    assert abs(rec["value"] - 10 / 11) < 3 * rec["std_error"]
    _, again, _ = run(capsys, "mc", "--config", path, "--draws", "200000", "--seed", "4")
    assert again == out
    assert run(capsys, "mc", "--config", path, "--draws", "10")[0] == 2


def test_sweep_identical_rayleigh(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "sweep", "--config", write(tmp_path, sweep_cfg()), "--out", str(out))
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["ratio_db", "value"]
    body = [(float(r[0]), float(r[1])) for r in rows[1:]]
    assert len(body) == math.floor((15 - -5) / 1) + 1
    assert [r for r, _ in body] == sorted(r for r, _ in body)
    assert dict(body)[0.0] == pytest.approx(0.5, abs=1e-12)
    assert np.all(np.diff([v for _, v in body]) > 0)


def test_sweep_byte_identical_and_worker_independent(tmp_path, capsys):
    cfg = write(tmp_path, sweep_cfg(main={"family": "kg", "params": {"m_l": 2.5, "m_sl": 4},
                                          "mean_snr_db": 0.0},
                                    sweep={"lo_db": -5, "hi_db": 15, "step_db": 5}))
    outs = []
    for workers in ("1", "1", "3"):
        path = tmp_path / f"w{len(outs)}.csv"
        assert run(capsys, "sweep", "--config", cfg, "--out", str(path), "--workers", workers)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_sweep_mc_backend_and_verify(tmp_path, capsys):
    cfg = write(tmp_path, sweep_cfg(backend="mc", mc={"draws": 20000},
                                    sweep={"lo_db": 0, "hi_db": 10, "step_db": 5}))
    code, out, _ = run(capsys, "sweep", "--config", cfg, "--verify", "mc:3:20000")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["ratio_db", "value", "std_error", "mc_value", "mc_std_error", "verify_pass"]
    assert len(rows) == 3
    assert all(r["verify_pass"] in ("pass", "fail") for r in rows)
    assert run(capsys, "sweep", "--config", cfg, "--verify", "mc:x:1")[0] == 2


def test_sweep_grid_validation(tmp_path, capsys):
    cfg = write(tmp_path, sweep_cfg(sweep={"lo_db": 5, "hi_db": 0, "step_db": 1}))
    code, _, err = run(capsys, "sweep", "--config", cfg)
    assert code == 2
    assert "sweep" in err


def test_numeric_failure_exit_code(tmp_path, capsys):
    cfg = {"params": {"m": 1, "n": 0, "b": [0, 0], "B": [1, 2]}, "kind": "h", "x": [1.0]}
    code, _, err = run(capsys, "foxh-eval", "--config", write(tmp_path, cfg))
    assert code == 3
    assert "numeric error" in err


def test_foxh_eval_raw_kernel(tmp_path, capsys):
    cfg = {"params": {"m": 1, "n": 0, "b": [0], "B": [1]}, "kind": "h", "x": [1.0, 2.0]}
    code, out, _ = run(capsys, "foxh-eval", "--config", write(tmp_path, cfg))
    assert code == 0
    rec = json.loads(out)
    np.testing.assert_allclose(rec["value"], np.exp([-1.0, -2.0]), rtol=1e-12)
    assert len(rec["error_estimate"]) == 2


def test_foxh_eval_channel_cdf(tmp_path, capsys):
    cfg = {"channel": {"family": "rayleigh", "params": {}, "mean_snr_db": 0}, "kind": "cdf", "x": [1.0]}
    _, out, _ = run(capsys, "foxh-eval", "--config", write(tmp_path, cfg))
    assert json.loads(out)["value"][0] == pytest.approx(1 - math.exp(-1), rel=1e-12)


def test_fit_mog(tmp_path, capsys):
    rng = np.random.default_rng(0)
    samples = tmp_path / "snr.txt"
    lines = [repr(float(v)) for v in rng.gamma(2.0, 0.5, 5000)]
    samples.write_text("# unit-mean gamma draws\n" + "\n".join(lines))
    code, out, _ = run(capsys, "fit-mog", "--samples", str(samples), "--components", "3", "--seed", "1")
    assert code == 0
    model = json.loads(out)
    assert model["type"] == "mog" and len(model["components"]) == 3
    assert model["metadata"]["seed"] == 1
    assert "cdf_mse" in model["metadata"]
    _, again, _ = run(capsys, "fit-mog", "--samples", str(samples), "--components", "3", "--seed", "1")
    assert again == out
    code, out, _ = run(capsys, "fit-mog", "--samples", str(samples), "--components", "auto")
    assert code == 0 and json.loads(out)["metadata"]["cdf_mse"] < 1e-4


def test_fit_mog_bad_input(tmp_path, capsys):
    samples = tmp_path / "bad.txt"
    samples.write_text("1.0\nnot-a-number\n")
    code, _, err = run(capsys, "fit-mog", "--samples", str(samples), "--components", "1")
    assert code == 2 and "bad.txt:2" in err
    samples.write_text("1.0\n2.0\n")
    assert run(capsys, "fit-mog", "--samples", str(samples), "--components", "3")[0] == 2


def test_mg_build(tmp_path, capsys):
    cfg = write(tmp_path, FAMILY_EXAMPLES["kg"])
    code, out, _ = run(capsys, "mg-build", "--config", cfg, "--components", "20")
    assert code == 0
    model = json.loads(out)
    assert len(model["components"]) == 20
    assert model["metadata"]["max_pdf_error"] < 1e-4 * 10
    assert run(capsys, "mg-build", "--config", write(tmp_path, FAMILY_EXAMPLES["egk"]))[0] == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "secrecykit" in capsys.readouterr().out


@pytest.mark.parametrize("family", sorted(FAMILY_EXAMPLES))
def test_family_examples_validate(family):
    spec = ChannelConfig.model_validate(FAMILY_EXAMPLES[family]).to_spec()
    assert spec.family.value == family
    ScenarioConfig.model_validate({"main": FAMILY_EXAMPLES[family], "wiretap": FAMILY_EXAMPLES[family]})
