import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracou import kernels as kn
from fracou import storage
from fracou.analytics import OUSpec
from fracou.errors import DomainError
from fracou.simulate import Grid, PathEnsemble, sample_gaussian

PROCESSES = [kn.FBM(0.7), kn.SubFBM(0.3), kn.BiFBM(0.6, 0.5), kn.Hermite(2, 0.7),
             OUSpec.first(kn.FBM(0.7), 1.5), OUSpec.second(kn.BiFBM(0.6, 0.5), 0.25)]

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def ensembles():
    return st.builds(
        lambda rows, cols, seed, proc, data: PathEnsemble(
            Grid.uniform(2.0, cols), data.draw(arrays(np.float64, (rows, cols), elements=finite)), seed, proc,
            {"quantity": "G"}),
        st.integers(0, 4), st.integers(2, 6), st.integers(0, 2**64 - 1), st.sampled_from(PROCESSES), st.data())


def same(a: PathEnsemble, b: PathEnsemble):
    assert a.grid == b.grid and a.seed == b.seed and a.process == b.process and a.meta == b.meta
    assert a.paths.shape == b.paths.shape and np.array_equal(a.paths, b.paths)


@pytest.mark.parametrize("p", PROCESSES, ids=str)
def test_spec_round_trip(p):
    assert storage.spec_from_params(p.params()) == p


def test_spec_errors():
    with pytest.raises(DomainError):
        storage.spec_from_params({"H": 0.7})
    with pytest.raises(DomainError):
        storage.spec_from_params({"process": "fbm", "H": 0.7, "kind": "third", "theta": 1.0})


@settings(max_examples=30, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(ensembles())
def test_binary_round_trip(tmp_path, e):
    same(storage.load(storage.save(e, tmp_path / "e.fou")), e)


@settings(max_examples=30, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(ensembles())
def test_csv_round_trip(tmp_path, e):
    same(storage.load(storage.save(e, tmp_path / "e.csv")), e)


def test_nonuniform_grid_round_trip(tmp_path):
    e = sample_gaussian(kn.FBM(0.7), Grid.from_points([0.0, 0.1, 0.7, 2.0]), 3, 7)
    same(storage.read_ensemble(storage.write_ensemble(e, tmp_path / "e.bin")), e)
    same(storage.read_csv(storage.write_csv(e, tmp_path / "e.csv")), e)


def test_binary_layout(tmp_path):
    e = sample_gaussian(kn.FBM(0.7), Grid.uniform(1.0, 5), 2, 1)
    raw = storage.write_ensemble(e, tmp_path / "e.fou").read_bytes()
    assert raw.startswith(storage.MAGIC)
    assert np.array_equal(np.frombuffer(raw[-80:], dtype="<f8").reshape(2, 5), e.paths)


def test_bad_files(tmp_path):
    bad = tmp_path / "bad.fou"
    bad.write_bytes(b"NOTANENSEMBLE")
    with pytest.raises(DomainError):
        storage.load(bad)
    e = sample_gaussian(kn.FBM(0.7), Grid.uniform(1.0, 5), 2, 1)
    raw = storage.write_ensemble(e, tmp_path / "e.fou").read_bytes()
    (tmp_path / "cut.fou").write_bytes(raw[:-8])
    with pytest.raises(DomainError):
        storage.load(tmp_path / "cut.fou")
    (tmp_path / "plain.csv").write_text("path,t,value\n0,0,0\n")
    with pytest.raises(DomainError):
        storage.load(tmp_path / "plain.csv")


def test_fmt_float_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, 0.0):
        assert float(storage.fmt_float(x)) == x
