"""Golden file format round trips and header validation."""

import numpy as np
import pytest

from nnbench.goldens import GoldenFormatError, read_golden, write_golden


def test_roundtrip_ranks(tmp_path):
    rng = np.random.default_rng(0)
    for shape in [(7,), (3, 4), (2, 3, 4), (1, 2, 3, 4)]:
        arr = rng.uniform(-1, 1, shape).astype(np.float32)
        p = tmp_path / f"r{len(shape)}.golden"
        write_golden(p, arr)
        back = read_golden(p)
        assert back.shape == arr.shape
        assert np.array_equal(back, arr)


def test_header_layout(tmp_path):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    p = tmp_path / "h.golden"
    write_golden(p, arr)
    raw = p.read_bytes()
    assert raw[:4] == b"NGLD"
    assert int.from_bytes(raw[4:6], "little") == 1       # version
    assert int.from_bytes(raw[6:8], "little") == 2       # rank
    assert int.from_bytes(raw[8:10], "little") == 2      # dim 0
    assert int.from_bytes(raw[10:12], "little") == 3     # dim 1
    assert len(raw) == 16 + 4 * 6
    assert np.frombuffer(raw[16:], dtype="<f4").tolist() == arr.reshape(-1).tolist()


def test_rejects_bad_magic(tmp_path):
    p = tmp_path / "junk.golden"
    p.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(GoldenFormatError, match="not a golden"):
        read_golden(p)


def test_rejects_truncated(tmp_path):
    arr = np.zeros((4, 4), np.float32)
    p = tmp_path / "t.golden"
    write_golden(p, arr)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(GoldenFormatError, match="truncated"):
        read_golden(p)


def test_rejects_oversized_dims(tmp_path):
    with pytest.raises(GoldenFormatError, match="u16"):
        write_golden(tmp_path / "x.golden", np.zeros(70000, np.float32))
