import numpy as np
import pytest

from somri import ConfigError, FormatError, MaskSpec, generate_mask, read_field, write_field


def test_complex_round_trip(tmp_path, rng):
    x = (rng.standard_normal((16, 12)) + 1j * rng.standard_normal((16, 12))).astype(
        np.complex64
    )
    path = tmp_path / "x.fld"
    write_field(path, x)
    back = read_field(path)
    assert back.dtype == np.complex64
    assert np.array_equal(back, x)


def test_float_round_trip_3d(tmp_path, rng):
    x = rng.standard_normal((5, 8, 6)).astype(np.float32)
    path = tmp_path / "f.fld"
    write_field(path, x)
    back = read_field(path)
    assert back.shape == (5, 8, 6)
    assert np.array_equal(back, x)


def test_bool_round_trip_mask(tmp_path):
    mask = generate_mask(MaskSpec("radial", 32, 48, spokes=7))
    path = tmp_path / "m.fld"
    write_field(path, mask.bits)
    back = read_field(path)
    assert back.dtype == bool
    assert np.array_equal(back, mask.bits)


def test_double_input_narrows(tmp_path, rng):
    x = rng.standard_normal((4, 4))
    path = tmp_path / "d.fld"
    write_field(path, x)
    assert np.array_equal(read_field(path), x.astype(np.float32))


def test_truncated_payload_rejected(tmp_path, rng):
    path = tmp_path / "t.fld"
    write_field(path, rng.standard_normal((8, 8)).astype(np.float32))
    data = path.read_bytes()
    path.write_bytes(data[:-7])
    with pytest.raises(FormatError, match="truncated"):
        read_field(path)


def test_trailing_bytes_rejected(tmp_path, rng):
    path = tmp_path / "t.fld"
    write_field(path, rng.standard_normal((8, 8)).astype(np.float32))
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(FormatError, match="trailing"):
        read_field(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.fld"
    path.write_bytes(b"#other-format v1 kind=float32\n")
    with pytest.raises(FormatError, match="magic"):
        read_field(path)


def test_version_bump_rejected(tmp_path, rng):
    path = tmp_path / "v.fld"
    write_field(path, rng.standard_normal((4, 4)).astype(np.float32))
    data = path.read_bytes().replace(b" v1 ", b" v2 ", 1)
    path.write_bytes(data)
    with pytest.raises(FormatError, match="version"):
        read_field(path)


def test_dim_byte_mismatch_rejected(tmp_path, rng):
    path = tmp_path / "n.fld"
    write_field(path, rng.standard_normal((4, 4)).astype(np.float32))
    data = path.read_bytes().replace(b"height=4", b"height=8", 1)
    path.write_bytes(data)
    with pytest.raises(FormatError, match="nbytes"):
        read_field(path)


def test_unsupported_dtype_rejected(tmp_path):
    with pytest.raises(ConfigError):
        write_field(tmp_path / "i.fld", np.arange(16).reshape(4, 4))
