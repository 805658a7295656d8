import json
import os

import numpy as np
import pytest

from rkhm import io
from rkhm import kernels as K
from rkhm.algebra import CirculantElement, random_dense
from rkhm.estimator import RKHMRegressor
from rkhm.exceptions import ContractError
from rkhm.experiments import gen_synthetic
from rkhm.selftest import kernel_zoo
from rkhm.solver import fit, predict


def test_synthetic_round_trip(tmp_path):
    d = gen_synthetic(7, 3, n_test=4)
    path = tmp_path / "d.jsonl"
    digest = io.write_dataset(path, d)
    assert digest == io.sha256_file(path)
    back = io.read_dataset(path)
    assert back.to_synthetic() == d
    assert len(path.read_text().splitlines()) == 11


def test_write_is_byte_stable(tmp_path):
    d = gen_synthetic(5, 1)
    assert io.write_dataset(tmp_path / "a", d) == io.write_dataset(tmp_path / "b", d)


def test_float_bits_survive(tmp_path):
    x = np.array([0.1 + 0.2, np.nextafter(1.0, 2.0)])
    ds = io.Dataset([x], [np.array([-0.0, 5e-324])])
    io.write_dataset(tmp_path / "d", ds)
    back = io.read_dataset(tmp_path / "d")
    assert back.train_x[0].tobytes() == x.tobytes()
    assert back.train_y[0].tobytes() == np.array([-0.0, 5e-324]).tobytes()


def test_algebra_dataset_round_trip(tmp_path, rng):
    xs = [random_dense(3, rng) for _ in range(3)]
    ys = [CirculantElement(rng.standard_normal(3) + 1j * rng.standard_normal(3)) for _ in range(3)]
    ds = io.Dataset(xs, ys)
    io.write_dataset(tmp_path / "d", ds)
    back = io.read_dataset(tmp_path / "d")
    assert back == ds and not back.vector_valued
    np.testing.assert_array_equal(back.train_x[1].matrix(), xs[1].matrix())


@pytest.mark.parametrize("name", sorted(kernel_zoo()))
def test_kernel_file_round_trip(tmp_path, name):
    spec = kernel_zoo()[name][0]
    io.write_kernel(tmp_path / "k.json", spec)
    assert io.read_kernel(tmp_path / "k.json").to_dict() == spec.to_dict()


def test_model_round_trip_predicts_identically(tmp_path, rng):
    spec = K.QrPolyKernel(0.5)
    xs = [random_dense(2, rng) for _ in range(3)]
    ys = [random_dense(2, rng) for _ in range(3)]
    model = fit(spec, xs, ys, 0.1)
    io.write_model(tmp_path / "m.json", model)
    back, adapter = io.read_model(tmp_path / "m.json")
    assert adapter is None
    probe = random_dense(2, rng)
    np.testing.assert_array_equal(predict(back, probe).matrix(), predict(model, probe).matrix())


def test_model_adapter_round_trip(tmp_path):
    d = gen_synthetic(6, 0)
    est = RKHMRegressor("vv-poly-T", lam=0.1).fit(d.train_x, d.train_y)
    io.write_model(tmp_path / "m.json", est.model_, est.adapter_, "vv-poly-T")
    _, adapter = io.read_model(tmp_path / "m.json")
    assert (adapter.input_kind, adapter.target_kind) == ("vector", "column")
    assert json.loads((tmp_path / "m.json").read_text())["preset"] == "vv-poly-T"


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write_text(tmp_path / "f.txt", "hello")
    assert os.listdir(tmp_path) == ["f.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "f.txt"
    target.write_text("old")

    with pytest.raises(TypeError):
        io.atomic_write_text(target, object())
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["f.txt"]


def test_write_to_missing_directory(tmp_path):
    with pytest.raises(OSError):
        io.atomic_write_text(tmp_path / "nope" / "f.txt", "x")


@pytest.mark.parametrize("line", ['{"split": "train", "x": [1.0]}', "not json",
                                  '{"split": "val", "x": [1.0], "y": [1.0]}',
                                  '{"x": {"weird": 1}, "y": [1.0]}'])
def test_malformed_records(tmp_path, line):
    path = tmp_path / "bad.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(ContractError):
        io.read_dataset(path)


def test_missing_pairs():
    with pytest.raises(ContractError):
        io.Dataset([np.zeros(2)], [])


def test_csv(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 2.5]])
    assert (tmp_path / "t.csv").read_text() == "a,b\n1,2.5\n"
