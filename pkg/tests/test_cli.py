import json
import re
import time

import numpy as np
import pytest

from rkhm import io
from rkhm.cli import main
from rkhm.experiments import gen_synthetic, mean_test_error, fit_method


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def data(tmp_path, capsys):
    path = tmp_path / "d.jsonl"
    assert run(capsys, "gen", "--n", 30, "--seed", 0, "--out", path)[0] == 0
    return path


def test_gen_records_and_checksum(tmp_path, capsys, data):
    lines = data.read_text().splitlines()
    assert len(lines) == 130
    assert sum(json.loads(line)["split"] == "train" for line in lines) == 30
    other = tmp_path / "again.jsonl"
    code, out, _ = run(capsys, "gen", "--n", 30, "--seed", 0, "--out", other)
    assert code == 0
    assert io.sha256_file(other) == io.sha256_file(data)
    assert f"sha256={io.sha256_file(data)}" in out


def test_gen_rejects_empty(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--n", 0, "--out", tmp_path / "x")
    assert code == 3 and "error" in err


def test_usage_errors_exit_3(capsys):
    assert run(capsys)[0] == 3
    assert run(capsys, "train")[0] == 3
    assert run(capsys, "bench", "--n", "a,b")[0] == 3


def test_train_reports_small_residual(tmp_path, capsys, data):
    code, out, _ = run(capsys, "train", "--in", data, "--lambda", 0.1, "--out", tmp_path / "m.json")
    assert code == 0
    assert float(re.search(r"residual=(\S+)", out).group(1)) <= 1e-10


def test_train_circulant_on_dense_kernel(tmp_path, capsys, data):
    code, _, err = run(capsys, "train", "--in", data, "--solver", "circulant", "--out", tmp_path / "m.json")
    assert code == 3 and "precondition" in err


def test_train_singular_exit_2(tmp_path, capsys):
    x, y = np.array([0.3, 0.4]), np.array([1.0, 2.0])
    io.write_dataset(tmp_path / "dup.jsonl", io.Dataset([x, x.copy()], [y, y + 1]))
    code, _, err = run(capsys, "train", "--in", tmp_path / "dup.jsonl", "--kernel", "vv-gaussian-I",
                       "--lambda", 0, "--out", tmp_path / "m.json")
    assert code == 2 and "pivot" in err
    assert not (tmp_path / "m.json").exists()


def test_predict_then_eval_matches_direct(tmp_path, capsys, data):
    model, preds = tmp_path / "m.json", tmp_path / "p.jsonl"
    assert run(capsys, "train", "--in", data, "--kernel", "vv-gaussian-T", "--c", 1.0, "--lambda", 0.01,
               "--out", model)[0] == 0
    assert run(capsys, "predict", "--model", model, "--in", data, "--out", preds)[0] == 0
    assert len(preds.read_text().splitlines()) == 100
    _, out_pred, _ = run(capsys, "eval", "--predictions", preds, "--in", data)
    _, out_model, _ = run(capsys, "eval", "--model", model, "--in", data)
    v_pred = float(re.search(r"mean_test_error=(\S+)", out_pred).group(1))
    v_model = float(re.search(r"mean_test_error=(\S+)", out_model).group(1))
    direct = mean_test_error(fit_method("vv_gaussian_T", gen_synthetic(30, 0), 1.0, 0.01), gen_synthetic(30, 0))
    assert v_pred == pytest.approx(direct, rel=1e-9)
    assert v_model == pytest.approx(direct, rel=1e-9)


def test_interpolation_on_train_split(tmp_path, capsys):
    data, model = tmp_path / "d.jsonl", tmp_path / "m.json"
    run(capsys, "gen", "--n", 30, "--seed", 2, "--out", data)
    assert run(capsys, "train", "--in", data, "--kernel", "vv-laplacian-I", "--lambda", 0, "--solver", "dense",
               "--out", model)[0] == 0
    _, out, _ = run(capsys, "eval", "--model", model, "--in", data, "--split", "train")
    assert float(re.search(r"mean_test_error=(\S+)", out).group(1)) <= 1e-6


def test_eval_needs_a_source(capsys, data):
    assert run(capsys, "eval", "--in", data)[0] == 3


def test_bound_closed_form(tmp_path, capsys):
    out_path = tmp_path / "b.json"
    code, out, _ = run(capsys, "bound", "--B", 1, "--D", 1, "--E", 1, "--p", 1, "--n", 100,
                       "--delta", 2 / np.e, "--out", out_path)
    assert code == 0
    rep = json.loads(out)
    assert rep["generalization_bound"] == pytest.approx(1.55563, abs=1e-4)
    assert json.loads(out_path.read_text()) == rep


def test_bound_missing_inputs(capsys):
    assert run(capsys, "bound", "--B", 1)[0] == 3


def test_bound_domain_error(capsys):
    assert run(capsys, "bound", "--B", 1, "--D", 1, "--E", 1, "--p", 1, "--n", 10, "--delta", 1.5)[0] == 3


def test_bound_from_model(tmp_path, capsys):
    data, model = tmp_path / "d.jsonl", tmp_path / "m.json"
    run(capsys, "gen", "--n", 8, "--seed", 1, "--out", data)
    run(capsys, "train", "--in", data, "--out", model)
    code, out, _ = run(capsys, "bound", "--model", model, "--in", data, "--draws", 50, "--candidates", 3)
    assert code == 0
    rep = json.loads(out)
    assert rep["n"] == 8 and rep["p"] == 2
    assert 0 <= rep["empirical_estimate_trace"] <= 2 * rep["rademacher_bound"]


def test_bench_default_sweep(tmp_path, capsys):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "bench", "--n", "2,4,8", "--p", "4,8,16", "--out", tmp_path / "b.json")
    assert code == 0 and time.perf_counter() - t0 < 60
    rep = json.loads(out)
    assert len(rep["instances"]) == 9
    assert max(r["max_relative_disagreement"] for r in rep["instances"]) <= 1e-6


def test_selftest_only(tmp_path, capsys):
    code, out, _ = run(capsys, "selftest", "--only", "bound_arithmetic", "--only", "grid_kernel_origin",
                       "--out", tmp_path / "s.json")
    assert code == 0
    assert out.count("[PASS]") == 2
    assert len(json.loads((tmp_path / "s.json").read_text())) == 2


def test_selftest_unknown(capsys):
    assert run(capsys, "selftest", "--only", "nope")[0] == 3


def test_dimension_mismatch(tmp_path, capsys, data):
    model, other = tmp_path / "m.json", tmp_path / "o.jsonl"
    run(capsys, "train", "--in", data, "--out", model)
    io.write_dataset(other, io.Dataset([np.zeros(3)], [np.zeros(3)], [np.zeros(3)], [np.zeros(3)]))
    assert run(capsys, "predict", "--model", model, "--in", other, "--out", tmp_path / "p")[0] == 3
    assert run(capsys, "eval", "--model", model, "--in", other)[0] == 3


def test_missing_file(tmp_path, capsys):
    assert run(capsys, "train", "--in", tmp_path / "none.jsonl", "--out", tmp_path / "m")[0] == 3


def test_table1_small(tmp_path, capsys):
    csv = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table1", "--methods", "rkhm_qr_poly,vv_poly_I", "--n", 10, "--seeds", "0",
                       "--folds", 3, "--c-grid", "0.5", "--lambda-grid", "0.1", "--csv", csv)
    assert code == 0
    assert [r["method"] for r in json.loads(out)] == ["rkhm_qr_poly", "vv_poly_I"]
    assert csv.read_text().startswith("method,n,mean_test_error,std_over_seeds\n")
