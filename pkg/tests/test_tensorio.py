import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lti import tensorio
from lti.tensorio import (
    BadMagicError,
    SubbandRecord,
    TensorFile,
    TensorFormatError,
    TruncatedFileError,
    VersionMismatchError,
    read_tensor,
    write_tensor,
)


def random_records(rng, s):
    recs = []
    for i in range(s):
        if i == 0:
            recs.append(SubbandRecord(scale=-1, shear=0, cone=0, visible=True))
        else:
            recs.append(
                SubbandRecord(
                    scale=int(rng.integers(0, 6)),
                    shear=int(rng.integers(-4, 5)),
                    cone=int(rng.choice([-1, 1])),
                    visible=bool(rng.integers(0, 2)),
                )
            )
    return tuple(recs)


def test_coeffs_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((8, 8, 3)).astype(np.float32)
    recs = random_records(rng, 3)
    path = tmp_path / "c.lti"
    tensorio.write_coeffs(data, recs, path)
    out = read_tensor(path)
    assert out.kind == "coeffs"
    assert out.data.shape == (8, 8, 3)
    assert out.data.dtype == np.float32
    assert out.data.tobytes() == data.tobytes()
    assert out.records == recs


def test_image_and_sinogram_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.standard_normal((16, 16)).astype(np.float32)
    sino = rng.standard_normal((7, 23)).astype(np.float32)
    tensorio.write_image(img, tmp_path / "i.lti")
    tensorio.write_sinogram(sino, tmp_path / "s.lti")
    iout = read_tensor(tmp_path / "i.lti")
    sout = read_tensor(tmp_path / "s.lti")
    assert iout.kind == "image" and iout.records is None
    assert sout.kind == "sinogram" and sout.records is None
    assert iout.data.tobytes() == img.tobytes()
    assert sout.data.tobytes() == sino.tobytes()


def test_non_finite_values_survive(tmp_path):
    img = np.array([[np.nan, np.inf], [-np.inf, 0.0]], dtype=np.float32)
    tensorio.write_image(img, tmp_path / "i.lti")
    out = read_tensor(tmp_path / "i.lti")
    assert out.data.tobytes() == img.tobytes()


@settings(max_examples=25, deadline=None)
@given(
    h=st.integers(1, 12),
    w=st.integers(1, 12),
    s=st.integers(1, 6),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_property(tmp_path_factory, h, w, s, seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((h, w, s)).astype(np.float32)
    recs = random_records(rng, s)
    path = tmp_path_factory.mktemp("rt") / "t.lti"
    tensorio.write_coeffs(data, recs, path)
    out = read_tensor(path)
    assert out.data.tobytes() == data.tobytes()
    assert out.records == recs


def _write_sample(tmp_path):
    rng = np.random.default_rng(7)
    data = rng.standard_normal((4, 5, 2)).astype(np.float32)
    path = tmp_path / "t.lti"
    tensorio.write_coeffs(data, random_records(rng, 2), path)
    return path


def test_truncated_payload(tmp_path):
    path = _write_sample(tmp_path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-1])
    with pytest.raises(TruncatedFileError):
        read_tensor(path)


def test_truncated_records(tmp_path):
    path = _write_sample(tmp_path)
    blob = path.read_bytes()
    header = struct.calcsize("<4sIBIII")
    path.write_bytes(blob[: header + 3])
    with pytest.raises(TruncatedFileError):
        read_tensor(path)


def test_bad_magic(tmp_path):
    path = _write_sample(tmp_path)
    blob = path.read_bytes()
    path.write_bytes(b"NOPE" + blob[4:])
    with pytest.raises(BadMagicError):
        read_tensor(path)


def test_version_mismatch(tmp_path):
    path = _write_sample(tmp_path)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatchError):
        read_tensor(path)


def test_error_types_are_distinct():
    kinds = {BadMagicError, VersionMismatchError, TruncatedFileError}
    assert len(kinds) == 3
    codes = {cls.code for cls in kinds}
    assert len(codes) == 3
    for cls in kinds:
        assert issubclass(cls, TensorFormatError)


def test_trailing_bytes_rejected(tmp_path):
    path = _write_sample(tmp_path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(TensorFormatError):
        read_tensor(path)


def test_write_rejects_bad_shapes(tmp_path):
    with pytest.raises(TensorFormatError):
        tensorio.write_image(np.zeros((2, 2, 2)), tmp_path / "x.lti")
    with pytest.raises(TensorFormatError):
        write_tensor(TensorFile("coeffs", np.zeros((2, 2, 2))), tmp_path / "x.lti")
    with pytest.raises(TensorFormatError):
        tensorio.write_coeffs(
            np.zeros((2, 2, 2)),
            (SubbandRecord(-1, 0, 0),),
            tmp_path / "x.lti",
        )


def test_record_validation():
    with pytest.raises(TensorFormatError):
        SubbandRecord(scale=0, shear=0, cone=5)


def test_payload_is_little_endian_float32(tmp_path):
    img = np.array([[1.0]], dtype=np.float64)
    tensorio.write_image(img, tmp_path / "i.lti")
    blob = (tmp_path / "i.lti").read_bytes()
    assert blob[-4:] == struct.pack("<f", 1.0)
