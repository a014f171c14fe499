"""Bit-exact binary interchange format for images, sinograms and coefficient stacks.

The on-disk layout is fixed and host-independent:

    magic      4 bytes, ``b"LTI1"``
    version    u32 little-endian (currently 1)
    kind       u8: 0 = image, 1 = sinogram, 2 = coeffs
    H, W, S    u32 little-endian each
    records    S entries, present iff kind = coeffs:
                   scale   i16 LE  (-1 marks the lowpass band)
                   shear   i16 LE
                   cone    i8      (+1 horizontal, -1 vertical, 0 lowpass)
                   visible u8      (0 or 1)
    payload    H*W*S float32 little-endian values,
               row-major within each subband, subband-major.

Images and sinograms are stored with S = 1 and no records.  Reading a file
written by :func:`write_tensor` reproduces the payload bit-for-bit; that
round-trip identity is the contract other components rely on, so payloads
are always written as little-endian float32 regardless of the host.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"LTI1"
FORMAT_VERSION = 1

KIND_IMAGE = "image"
KIND_SINOGRAM = "sinogram"
KIND_COEFFS = "coeffs"

_KIND_CODES = {KIND_IMAGE: 0, KIND_SINOGRAM: 1, KIND_COEFFS: 2}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}

_HEADER = struct.Struct("<4sIBIII")
_RECORD = struct.Struct("<hhbB")


class TensorFormatError(ValueError):
    """A tensor file (or tensor to be written) violates the format."""

    code = 10


class BadMagicError(TensorFormatError):
    """File does not start with the ``LTI1`` magic."""

    code = 11


class VersionMismatchError(TensorFormatError):
    """File declares a format version this reader does not understand."""

    code = 12


class TruncatedFileError(TensorFormatError):
    """File ends before header, records or payload are complete."""

    code = 13


@dataclass(frozen=True)
class SubbandRecord:
    """Per-subband metadata entry of a coefficient file."""

    scale: int
    shear: int
    cone: int
    visible: bool = True

    def __post_init__(self) -> None:
        if self.cone not in (-1, 0, 1):
            raise TensorFormatError(f"cone must be -1, 0 or +1, got {self.cone}")
        if not -(2**15) <= self.scale < 2**15:
            raise TensorFormatError(f"scale {self.scale} outside i16 range")
        if not -(2**15) <= self.shear < 2**15:
            raise TensorFormatError(f"shear {self.shear} outside i16 range")


@dataclass
class TensorFile:
    """In-memory view of one interchange file.

    ``data`` is float32: shape (H, W) for images and sinograms, (H, W, S)
    for coefficient stacks; ``records`` is present exactly for coeffs.
    """

    kind: str
    data: np.ndarray
    records: tuple[SubbandRecord, ...] | None = None


def _as_payload_array(kind: str, data: np.ndarray) -> np.ndarray:
    arr = np.asarray(data)
    if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(
        arr.dtype, np.integer
    ):
        raise TensorFormatError(f"payload dtype {arr.dtype} is not numeric")
    arr = arr.astype("<f4", copy=False)
    if kind in (KIND_IMAGE, KIND_SINOGRAM):
        if arr.ndim != 2:
            raise TensorFormatError(f"{kind} data must be 2-D, got shape {arr.shape}")
    elif kind == KIND_COEFFS:
        if arr.ndim != 3:
            raise TensorFormatError(f"coeffs data must be 3-D, got shape {arr.shape}")
    else:
        raise TensorFormatError(f"unknown kind {kind!r}")
    if arr.size == 0:
        raise TensorFormatError("empty payload")
    return arr


def write_tensor(tensor: TensorFile, path: str | Path) -> None:
    """Serialize ``tensor`` to ``path`` in the fixed byte layout."""
    arr = _as_payload_array(tensor.kind, tensor.data)
    if tensor.kind == KIND_COEFFS:
        if tensor.records is None:
            raise TensorFormatError("coeffs tensor requires subband records")
        h, w, s = arr.shape
        if len(tensor.records) != s:
            raise TensorFormatError(
                f"record count {len(tensor.records)} != subband count {s}"
            )
        payload = np.ascontiguousarray(np.moveaxis(arr, 2, 0))
        records = tensor.records
    else:
        if tensor.records is not None:
            raise TensorFormatError(f"{tensor.kind} tensor must not carry records")
        h, w = arr.shape
        s = 1
        payload = np.ascontiguousarray(arr)
        records = ()

    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_CODES[tensor.kind], h, w, s)
        )
        for rec in records:
            fh.write(_RECORD.pack(rec.scale, rec.shear, rec.cone, int(rec.visible)))
        fh.write(payload.tobytes(order="C"))


def read_tensor(path: str | Path) -> TensorFile:
    """Read an interchange file, raising a distinct error per corruption kind."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"{path}: file shorter than magic")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(f"{path}: truncated header")
    _, version, kind_code, h, w, s = _HEADER.unpack_from(blob, 0)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    if kind_code not in _CODE_KINDS:
        raise TensorFormatError(f"{path}: unknown kind code {kind_code}")
    kind = _CODE_KINDS[kind_code]
    if h == 0 or w == 0 or s == 0:
        raise TensorFormatError(f"{path}: zero dimension in header ({h}, {w}, {s})")
    if kind != KIND_COEFFS and s != 1:
        raise TensorFormatError(f"{path}: {kind} must have S = 1, got {s}")

    offset = _HEADER.size
    records: tuple[SubbandRecord, ...] | None = None
    if kind == KIND_COEFFS:
        need = offset + s * _RECORD.size
        if len(blob) < need:
            raise TruncatedFileError(f"{path}: truncated subband records")
        recs = []
        for i in range(s):
            scale, shear, cone, visible = _RECORD.unpack_from(blob, offset + i * _RECORD.size)
            if visible > 1:
                raise TensorFormatError(f"{path}: record {i} visible byte {visible}")
            recs.append(SubbandRecord(scale, shear, cone, bool(visible)))
        records = tuple(recs)
        offset = need

    nbytes = h * w * s * 4
    if len(blob) < offset + nbytes:
        raise TruncatedFileError(
            f"{path}: payload has {len(blob) - offset} bytes, expected {nbytes}"
        )
    if len(blob) > offset + nbytes:
        raise TensorFormatError(f"{path}: trailing bytes after payload")
    flat = np.frombuffer(blob, dtype="<f4", count=h * w * s, offset=offset)
    if kind == KIND_COEFFS:
        data = np.moveaxis(flat.reshape(s, h, w), 0, 2).copy()
    else:
        data = flat.reshape(h, w).copy()
    return TensorFile(kind=kind, data=data, records=records)


def write_image(data: np.ndarray, path: str | Path) -> None:
    write_tensor(TensorFile(KIND_IMAGE, data), path)


def write_sinogram(data: np.ndarray, path: str | Path) -> None:
    write_tensor(TensorFile(KIND_SINOGRAM, data), path)


def write_coeffs(
    data: np.ndarray, records: tuple[SubbandRecord, ...], path: str | Path
) -> None:
    write_tensor(TensorFile(KIND_COEFFS, data, records), path)
