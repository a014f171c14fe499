"""Reader/writer for the tensor interchange files used at the process boundary.

The byte layout is the external contract this package shares with the
reconstruction toolkit that produces its inputs:

    magic      4 bytes  b"LTI1"
    version    uint32   1
    kind       uint8    0 = image, 1 = sinogram, 2 = coefficient stack
    dims       3x uint32 (H, W, S); S = 1 for images and sinograms
    records    S x (int16 scale, int16 shear, int8 cone, uint8 visible),
               present only for coefficient stacks
    payload    H*W*S float32 little-endian, row-major per subband,
               subband-major

Everything here is independent of the producing implementation; only the
bytes are shared.
"""

from __future__ import annotations

import hashlib
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
    """A tensor file violates the interchange format."""


@dataclass(frozen=True)
class SubbandRecord:
    """Per-subband metadata of a coefficient stack."""

    scale: int
    shear: int
    cone: int
    visible: bool = True


@dataclass
class TensorFile:
    """One decoded interchange file; ``data`` is float32 of shape (H, W, S)
    for coefficient stacks and (H, W) otherwise."""

    kind: str
    data: np.ndarray
    records: tuple[SubbandRecord, ...] | None = None


def ordering_hash(records: tuple[SubbandRecord, ...]) -> str:
    """Digest of the subband enumeration (scale, shear, cone per position).

    Matches the producing toolkit's published subband-ordering digest, so a
    checkpoint trained on one enumeration refuses tensors from another.
    Visibility flags are deliberately excluded: they vary per scan geometry.
    """
    text = ";".join(f"{r.scale},{r.shear},{r.cone}" for r in records)
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def read_tensor(path: str | Path) -> TensorFile:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise TensorFormatError(f"{path}: shorter than the fixed header")
    magic, version, kind_code, h, w, s = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise TensorFormatError(f"{path}: unsupported format version {version}")
    if kind_code not in _CODE_KINDS:
        raise TensorFormatError(f"{path}: unknown kind code {kind_code}")
    kind = _CODE_KINDS[kind_code]
    offset = _HEADER.size
    records: tuple[SubbandRecord, ...] | None = None
    if kind == KIND_COEFFS:
        need = offset + s * _RECORD.size
        if len(blob) < need:
            raise TensorFormatError(f"{path}: truncated subband records")
        entries = []
        for i in range(s):
            scale, shear, cone, visible = _RECORD.unpack_from(blob, offset + i * 6)
            if cone not in (-1, 0, 1) or visible not in (0, 1):
                raise TensorFormatError(f"{path}: malformed record {i}")
            entries.append(SubbandRecord(scale, shear, cone, bool(visible)))
        records = tuple(entries)
        offset = need
    elif s != 1:
        raise TensorFormatError(f"{path}: {kind} file declares {s} subbands")
    count = h * w * s
    if len(blob) != offset + 4 * count:
        raise TensorFormatError(f"{path}: payload size mismatch")
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
    if kind == KIND_COEFFS:
        data = np.moveaxis(flat.reshape(s, h, w), 0, 2).copy()
    else:
        data = flat.reshape(h, w).copy()
    return TensorFile(kind=kind, data=data, records=records)


def write_tensor(tensor: TensorFile, path: str | Path) -> None:
    data = np.asarray(tensor.data).astype("<f4", copy=False)
    if tensor.kind == KIND_COEFFS:
        if data.ndim != 3:
            raise TensorFormatError("coefficient stacks must be (H, W, S)")
        if tensor.records is None or len(tensor.records) != data.shape[2]:
            raise TensorFormatError("coefficient stacks need one record per subband")
        h, w, s = data.shape
        payload = np.ascontiguousarray(np.moveaxis(data, 2, 0))
    elif tensor.kind in (KIND_IMAGE, KIND_SINOGRAM):
        if data.ndim != 2:
            raise TensorFormatError(f"{tensor.kind} data must be 2-D")
        (h, w), s = data.shape, 1
        payload = np.ascontiguousarray(data)
    else:
        raise TensorFormatError(f"unknown kind {tensor.kind!r}")
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, _KIND_CODES[tensor.kind], h, w, s)]
    if tensor.kind == KIND_COEFFS:
        for record in tensor.records:
            parts.append(
                _RECORD.pack(
                    record.scale, record.shear, record.cone, int(record.visible)
                )
            )
    parts.append(payload.tobytes())
    Path(path).write_bytes(b"".join(parts))
