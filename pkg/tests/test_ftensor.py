import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histoforge.ftensor import read_ftensor, write_ftensor


@pytest.mark.parametrize("dtype", [np.float32, np.uint8, np.int32])
@pytest.mark.parametrize("shape", [(7,), (3, 4), (2, 3, 4), (2, 2, 2, 2)])
def test_round_trip(tmp_path, dtype, shape):
    rng = np.random.default_rng(0)
    if dtype == np.float32:
        arr = rng.standard_normal(shape).astype(dtype)
    else:
        arr = rng.integers(0, 100, size=shape).astype(dtype)
    path = tmp_path / "t.ft"
    write_ftensor(path, arr)
    back = read_ftensor(path)
    assert back.dtype == arr.dtype
    assert np.array_equal(back, arr)
    # byte-identical second write
    write_ftensor(tmp_path / "t2.ft", back)
    assert (tmp_path / "t.ft").read_bytes() == (tmp_path / "t2.ft").read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ft"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        read_ftensor(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "t.ft"
    write_ftensor(path, np.ones((4, 4), dtype=np.float32))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ValueError, match="payload"):
        read_ftensor(path)


def test_unsupported_dtype(tmp_path):
    with pytest.raises(ValueError):
        write_ftensor(tmp_path / "t.ft", np.ones((2, 2), dtype=np.float64))


@settings(max_examples=25, deadline=None)
@given(
    dims=st.lists(st.integers(1, 5), min_size=1, max_size=4),
    dtype_idx=st.integers(0, 2),
    seed=st.integers(0, 2**16),
)
def test_round_trip_hypothesis(tmp_path_factory, dims, dtype_idx, seed):
    dtype = [np.float32, np.uint8, np.int32][dtype_idx]
    rng = np.random.default_rng(seed)
    arr = (rng.random(dims) * 100).astype(dtype)
    path = tmp_path_factory.mktemp("ft") / "t.ft"
    write_ftensor(path, arr)
    assert np.array_equal(read_ftensor(path), arr)
