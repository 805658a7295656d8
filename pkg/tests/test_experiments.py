import numpy as np
import pytest

from rkhm import experiments as E
from rkhm.exceptions import ContractError
from rkhm.presets import build_kernel, decode_output, embed_circulant


def constant_dataset(n=10, value=(0.4, -0.3), seed=0):
    rng = np.random.default_rng(seed)
    x = rng.random((n, 2))
    y = np.tile(value, (n, 1))
    return E.SyntheticDataset(seed, n, x, x, y, rng.random((20, 2)), np.tile(value, (20, 1)))


class Fixed:
    def __init__(self, out):
        self.out = np.asarray(out, dtype=float)

    def predict(self, X):
        return self.out


# -- data generation -------------------------------------------------------------------

def test_gen_deterministic():
    a, b = E.gen_synthetic(30, 4), E.gen_synthetic(30, 4)
    assert a == b
    assert a != E.gen_synthetic(30, 5)


def test_gen_shapes_and_targets():
    d = E.gen_synthetic(30, 1)
    assert d.train_x.shape == (30, 2) and d.test_x.shape == (100, 2)
    s = d.train_x_noisy.sum(axis=1)
    np.testing.assert_array_equal(d.train_y[:, 0], np.sin(s))
    np.testing.assert_array_equal(d.train_y[:, 1], np.sin(s) + np.sin(0.5 * s))
    np.testing.assert_array_equal(d.test_y, E.target_function(d.test_x))
    assert np.all((d.train_x >= 0) & (d.train_x < 1))


def test_target_at_origin():
    np.testing.assert_array_equal(E.target_function([0.0, 0.0]), [0.0, 0.0])


def test_uniform_mean():
    d = E.gen_synthetic(100_000, 0, n_test=1)
    np.testing.assert_allclose(d.train_x.mean(axis=0), [0.5, 0.5], atol=0.01)


def test_noise_scale():
    d = E.gen_synthetic(50_000, 2, n_test=1)
    xi = d.train_x_noisy - d.train_x
    assert abs(xi.std() - 0.1) < 0.002 and abs(xi.mean()) < 0.002


def test_box_muller_standard_normal():
    z = E.box_muller(E.philox(0), (200_001,))
    assert z.shape == (200_001,)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01


def test_gen_rejects_zero():
    with pytest.raises(ContractError):
        E.gen_synthetic(0, 0)


# -- embedding -------------------------------------------------------------------------

def test_embed_examples():
    np.testing.assert_array_equal(embed_circulant([2.0, 5.0]).matrix(), [[2, 5], [5, 2]])
    np.testing.assert_array_equal(embed_circulant([1.0, 0.0]).matrix(), np.eye(2))
    np.testing.assert_array_equal(embed_circulant([0.0, 1.0]).matrix(), [[0, 1], [1, 0]])


def test_decode_examples():
    np.testing.assert_array_equal(decode_output(np.eye(2)), [1, 0])
    np.testing.assert_array_equal(decode_output(np.array([[1.0, 2.0], [4.0, 3.0]])), [2, 3])


def test_decode_embed_round_trip(rng):
    for _ in range(20):
        v = rng.standard_normal(2)
        np.testing.assert_allclose(decode_output(embed_circulant(v)), v, atol=1e-15)


# -- metric ------------------------------------------------------------------------------

def test_metric_perfect_and_zero():
    d = constant_dataset(value=(0.6, 0.8))
    assert E.mean_test_error(Fixed(d.test_y), d) == 0.0
    assert E.mean_test_error(Fixed(np.zeros_like(d.test_y)), d) == pytest.approx(1.0)


def test_metric_two_points():
    # errors (3, 4) -> 5 and (1, 0) -> 1, mean 3
    assert E.mean_error([[3.0, 4.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]) == pytest.approx(3.0)


def test_metric_shape_mismatch():
    with pytest.raises(ContractError):
        E.mean_error([[1.0, 2.0]], [[1.0, 2.0], [3.0, 4.0]])


# -- cross-validation ------------------------------------------------------------------

def test_folds_by_index():
    splits = E.fold_indices(7, 3)
    np.testing.assert_array_equal(splits[1][1], [1, 4])
    assert sorted(np.concatenate([va for _, va in splits]).tolist()) == list(range(7))
    with pytest.raises(ContractError):
        E.fold_indices(3, 4)
    with pytest.raises(ContractError):
        E.fold_indices(5, 1)


def test_cv_single_point_grid():
    d = E.gen_synthetic(12, 0)
    assert E.cross_validate("rkhm_qr_poly", d, [0.7], [0.05], folds=3) == (0.7, 0.05)


def test_cv_realizable_constant():
    # with c = 0 the polynomial baseline is the constant 3, which fits constant targets
    d = constant_dataset(n=10)
    c, lam, table = E.cross_validate("vv_poly_I", d, [0.0, 1.0], [1e-8, 1.0], folds=5, return_table=True)
    assert (c, lam) == (0.0, 1e-8)
    assert min(t[0] for t in table) <= 1e-6


def test_cv_tie_break():
    d = constant_dataset(n=10, value=(0.0, 0.0))
    assert E.cross_validate("vv_gaussian_I", d, [2.0, 1.0], [1.0, 0.1], folds=5) == (1.0, 0.1)


def test_cv_empty_grid():
    with pytest.raises(ContractError):
        E.cross_validate("rkhm_qr_poly", E.gen_synthetic(10, 0), [], [0.1])


# -- table runs --------------------------------------------------------------------------

def test_report_statistics():
    r = E.ExperimentReport("m", 30, [0, 1, 2], [1, 1, 1], [0.1] * 3, [0.2, 0.4, 0.3])
    assert r.mean_test_error == pytest.approx(0.3, abs=1e-12)
    assert r.std_over_seeds == pytest.approx(np.std([0.2, 0.4, 0.3], ddof=1), abs=1e-12)
    assert r.to_dict()["per_seed_errors"] == [0.2, 0.4, 0.3]


def test_table1_deterministic():
    kw = dict(n=12, seeds=[0, 1], c_grid=(0.1, 1.0), lambda_grid=(0.01, 0.1), folds=3)
    a = E.run_table1(["rkhm_qr_poly", "vv_gaussian_T"], **kw)
    b = E.run_table1(["rkhm_qr_poly", "vv_gaussian_T"], **kw)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]


def test_table1_unknown_method():
    with pytest.raises(ContractError):
        E.run_table1(["nope"])


def test_zero_target_zero_error():
    d = constant_dataset(value=(0.0, 0.0))
    for m in ("rkhm_qr_poly", "vv_gaussian_I", "vv_poly_nonsep"):
        assert E.mean_test_error(E.fit_method(m, d, 1.0, 0.1), d) <= 1e-12


def test_gaussian_T_mixer_is_all_ones():
    k = build_kernel("vv-gaussian-T", 2, c=1.0)
    np.testing.assert_array_equal(k.mixer.matrix(), np.ones((2, 2)))


@pytest.mark.parametrize("method", sorted(E.METHODS))
def test_over_regularization_hurts(method):
    d = E.gen_synthetic(30, 0)
    c, lam = E.cross_validate(method, d)
    tuned = E.mean_test_error(E.fit_method(method, d, c, lam), d)
    heavy = E.mean_test_error(E.fit_method(method, d, c, 1e3), d)
    assert heavy >= tuned


# -- benchmark ---------------------------------------------------------------------------

def test_benchmark_report_shape():
    rep = E.run_benchmark([2, 4], [4, 8])
    assert len(rep["instances"]) == 4
    rec = rep["instances"][0]
    for key in ("dense_flops", "circulant_flops", "cg_flops", "cg_iterations", "cg_per_iteration",
                "max_relative_disagreement", "circulant_fft_calls"):
        assert key in rec
    assert set(rep["slopes"]) >= {"dense", "circulant", "cg"}
    # dense elimination counts grow like (np)^3
    assert 2.5 <= rep["slopes"]["dense"]["p"] <= 3.5


def test_benchmark_rejects_unknown_solver():
    with pytest.raises(ContractError):
        E.run_benchmark([2], [4], solvers=("qr",))
